"""Content-addressed blob storage and an append-only analysis-record log.

Records are plain JSON dicts persisted one per line; an update appends a
superseding version of the same record_id, so replaying the log from the
top always reconstructs the current state.  Blobs are written once under
their SHA-256 content hash and verified on read.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path


class BlobStore:
    """WAV payloads stored under their content hash, write-once."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        return self.root / f"{digest}.wav"

    def put(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self._path(digest)
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
        return digest

    def get(self, digest: str) -> bytes:
        path = self._path(digest)
        if not path.exists():
            raise KeyError(f"no blob {digest}")
        data = path.read_bytes()
        if hashlib.sha256(data).hexdigest() != digest:
            raise IOError(f"blob {digest} failed its content-hash check")
        return data

    def __contains__(self, digest: str) -> bool:
        return self._path(digest).exists()


class RecordStore:
    """Append-only record log with an in-memory id index.

    Appends are serialized by a lock (single-writer contract); reads come
    from the immutable dicts in the index.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        self._dedupe: dict[str, str] = {}
        if self.path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{self.path}: corrupt log line {lineno}: {exc}") from exc
                self._index(record)

    def _index(self, record: dict) -> None:
        self._records[record["record_id"]] = record
        key = record.get("dedupe_key")
        if key:
            self._dedupe[key] = record["record_id"]

    def append(self, record: dict) -> None:
        """Persist a new record or a superseding version of an existing one."""
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            with open(self.path, "a") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._index(record)

    def get(self, record_id: str) -> dict | None:
        return self._records.get(record_id)

    def find_duplicate(self, dedupe_key: str) -> dict | None:
        record_id = self._dedupe.get(dedupe_key)
        return self._records.get(record_id) if record_id else None

    def all_records(self) -> list[dict]:
        return sorted(self._records.values(), key=lambda r: r["created_at"])

    def __len__(self) -> int:
        return len(self._records)
