"""Operator command line: corpus synthesis, analysis, training, evaluation,
gradient checks, and serving.

Exit codes: 0 success, 1 validation problem (bad arguments, missing or
malformed files), 2 runtime failure.  Every run prints its resolved
configuration; --json switches stdout to machine-readable output (the
config then goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio import CANONICAL_RATE_HZ, load_wav, resample
from .dsp import FrameSpec, MfccConfig, log_mel_spectrogram, mfcc
from .errors import AudioFormatError, ModelFormatError
from .features import (
    apply_normalizer,
    collect_fused_rows,
    fit_normalizer,
    load_manifest,
    write_feature_csv,
)
from .nn import (
    TrainConfig,
    evaluate,
    gradient_check,
    load_model,
    save_model,
    train_cnn,
    train_mlp,
)
from .nn.cnn import CnnModel
from .nn.mlp import MlpModel
from .pipeline import analyze_clip, collect_spectrograms
from .synth import synth_corpus

_VALIDATION_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    AudioFormatError,
    ModelFormatError,
    ValueError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coughpoc",
        description="Point-of-care cough analysis toolkit",
    )
    parser.add_argument("--version", action="version", version=f"coughpoc {__version__}")
    parser.add_argument("--seed", type=int, default=0, help="seed for anything random")
    parser.add_argument("--json", action="store_true", help="machine-readable stdout")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a labelled synthetic corpus")
    p_synth.add_argument("--out", required=True, help="output corpus directory")
    p_synth.add_argument("--n", type=int, default=200, help="number of clips")
    p_synth.add_argument("--snr-db", type=float, default=10.0,
                         help="background SNR in dB (inf disables noise)")
    p_synth.set_defaults(func=cmd_synth)

    p_analyze = sub.add_parser("analyze", help="detect and describe coughs in a WAV file")
    p_analyze.add_argument("wav", help="input WAV file")
    p_analyze.add_argument("--model", help="model file for membership scores")
    p_analyze.add_argument("--meta", default="{}",
                           help='sensor JSON, e.g. \'{"temp_c": 38.5}\'')
    p_analyze.add_argument("--figures-dir", help="write waveform/spectrogram figures here")
    p_analyze.add_argument("--mfcc-csv", help="write the per-frame MFCC matrix as CSV")
    p_analyze.add_argument("--features-csv", help="write per-cough fused feature rows as CSV")
    p_analyze.set_defaults(func=cmd_analyze)

    p_train = sub.add_parser("train", help="train a classifier from a manifest")
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.add_argument("--arch", choices=("mlp", "cnn"), default="mlp")
    p_train.add_argument("--train-fraction", type=float, default=0.8)
    p_train.add_argument("--epochs", type=int, default=800)
    p_train.add_argument("--lr", type=float, default=0.5)
    p_train.add_argument("--batch-size", type=int, default=32)
    p_train.add_argument("--l2", type=float, default=1e-5)
    p_train.add_argument("--figures-dir", help="write loss-curve and confusion figures here")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a model against a manifest")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--figures-dir")
    p_eval.set_defaults(func=cmd_eval)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p_grad.add_argument("--arch", choices=("mlp", "cnn", "both"), default="both")
    p_grad.set_defaults(func=cmd_gradcheck)

    p_serve = sub.add_parser("serve", help="run the ingestion/report HTTP service")
    p_serve.add_argument("--model", help="model file (service is degraded without one)")
    p_serve.add_argument("--store", required=True, help="record/blob store directory")
    p_serve.add_argument("--listen", default="127.0.0.1:8000", help="host:port")
    p_serve.add_argument("--max-clip-seconds", type=float, default=60.0)
    p_serve.add_argument("--frontend", help="directory with the built web UI to serve at /")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def _emit(args, payload: dict, human_lines=None) -> None:
    if args.json:
        print(json.dumps(payload))
    else:
        for line in human_lines or [json.dumps(payload, indent=2)]:
            print(line)


def _print_config(args) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    stream = sys.stderr if args.json else sys.stdout
    print(f"config: {json.dumps(resolved, default=str, sort_keys=True)}", file=stream)


def cmd_synth(args) -> int:
    info = synth_corpus(args.out, n_clips=args.n, snr_db=args.snr_db, seed=args.seed)
    _emit(args, info, [
        f"wrote {info['n_clips']} clips to {args.out}",
        f"manifest: {info['manifest']}",
        f"truth:    {info['truth']}",
    ])
    return 0


def cmd_analyze(args) -> int:
    from .features import SensorRecord

    clip = resample(load_wav(args.wav), CANONICAL_RATE_HZ)
    model = load_model(args.model) if args.model else None
    sensor = SensorRecord.from_dict(json.loads(args.meta))
    result = analyze_clip(clip, sensor=sensor, model=model)
    result["wav"] = args.wav

    if args.mfcc_csv:
        matrix = mfcc(clip, MfccConfig())
        names = tuple(f"mfcc_{i + 2}" for i in range(matrix.shape[1]))
        write_feature_csv(matrix, args.mfcc_csv, names=names)
        result["mfcc_csv"] = args.mfcc_csv
    if args.features_csv:
        rows = [seg["features"] for seg in result["segments"] if seg.get("features")]
        if rows:
            from .features import FEATURE_NAMES

            write_feature_csv(np.array(rows), args.features_csv, names=FEATURE_NAMES)
            result["features_csv"] = args.features_csv
    if args.figures_dir:
        from . import report

        figures = Path(args.figures_dir)
        figures.mkdir(parents=True, exist_ok=True)
        spec = log_mel_spectrogram(clip, FrameSpec(frame_len_ms=25.0, hop_len_ms=25.0))
        written = {
            "waveform": report.save_waveform_figure(
                clip, result["segments"], figures / "waveform.png"),
            "spectrogram": report.save_spectrogram_figure(
                spec, figures / "spectrogram.png"),
        }
        if result["memberships"]:
            written["memberships"] = report.save_membership_figure(
                result["memberships"], figures / "memberships.png")
        result["figures"] = written

    human = [f"{args.wav}: {len(result['segments'])} cough segment(s)"]
    for i, seg in enumerate(result["segments"]):
        wet = seg["wet_dry"]["label"] if seg["wet_dry"] else "n/a"
        human.append(
            f"  [{i}] {seg['start_ms']:.0f}-{seg['end_ms']:.0f} ms"
            f" pattern={seg['pattern']} wet_dry={wet}"
        )
    if result["diagnosis"]:
        human.append(f"diagnosis: {result['diagnosis']} {result['memberships']}")
    _emit(args, result, human)
    return 0


def _split_and_log(args, entries):
    from .features import split_dataset

    train_entries, test_entries = split_dataset(entries, args.train_fraction, args.seed)
    stream = sys.stderr if args.json else sys.stdout
    print(
        f"split: {len(train_entries)} train / {len(test_entries)} test clips"
        f" (stratified, seed={args.seed}); normalizer fits on train rows only",
        file=stream,
    )
    return train_entries, test_entries


def cmd_train(args) -> int:
    manifest_dir = Path(args.manifest).parent
    entries = load_manifest(args.manifest)
    train_entries, test_entries = _split_and_log(args, entries)
    config = TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                         batch_size=args.batch_size, seed=args.seed,
                         train_fraction=args.train_fraction, l2=args.l2)

    if args.arch == "mlp":
        train_x, train_y, _ = collect_fused_rows(train_entries, manifest_dir)
        test_x, test_y, _ = collect_fused_rows(test_entries, manifest_dir)
    else:
        train_x, train_y, _ = collect_spectrograms(train_entries, manifest_dir)
        test_x, test_y, _ = collect_spectrograms(test_entries, manifest_dir)
    if train_x.shape[0] == 0 or test_x.shape[0] == 0:
        raise ValueError("no coughs detected in the training or test clips")

    if args.arch == "cnn":
        # per-band statistics, broadcast over frames
        from .features import Normalizer

        norm = Normalizer(
            mean=train_x.mean(axis=(0, 1)),
            std=np.maximum(train_x.std(axis=(0, 1)), 1e-9),
        )
        train_n = (train_x - norm.mean) / norm.std
        test_n = (test_x - norm.mean) / norm.std
        model, losses = train_cnn(train_n, train_y, config)
    else:
        norm = fit_normalizer(train_x)
        train_n = apply_normalizer(norm, train_x)
        test_n = apply_normalizer(norm, test_x)
        model, losses = train_mlp(train_n, train_y, config)
    model.normalizer = norm
    save_model(model, args.out)

    metrics = evaluate(model, test_n, test_y)
    payload = {
        "model": args.out,
        "arch": args.arch,
        "train_rows": int(train_x.shape[0]),
        "test_rows": int(test_x.shape[0]),
        "final_loss": losses[-1],
        "metrics": metrics.to_dict(),
    }
    if args.figures_dir:
        from . import report

        figures = Path(args.figures_dir)
        figures.mkdir(parents=True, exist_ok=True)
        payload["figures"] = {
            "loss_curve": report.save_loss_curve(losses, figures / "loss_curve.png"),
            "confusion": report.save_confusion_figure(
                metrics.confusion, metrics.class_names, figures / "confusion.png"),
        }
    _emit(args, payload, _metrics_lines(payload))
    return 0


def _metrics_lines(payload) -> list[str]:
    metrics = payload["metrics"]
    lines = [
        f"model: {payload.get('model', '-')} ({payload.get('arch', '?')})",
        f"rows: {payload.get('train_rows', '-')} train / {payload.get('test_rows', '-')} test",
        f"accuracy: {metrics['accuracy']:.4f}",
        "confusion (rows=true):",
    ]
    names = metrics["class_names"]
    header = "    " + "".join(f"{n:>12}" for n in names)
    lines.append(header)
    for name, row in zip(names, metrics["confusion"]):
        lines.append(f"    {name:>10}: " + "".join(f"{v:>12}" for v in row))
    for name in names:
        lines.append(
            f"  {name}: sensitivity {metrics['sensitivity'][name]:.3f}"
            f" specificity {metrics['specificity'][name]:.3f}"
        )
    if metrics["false_alarm_rate"] is not None:
        lines.append(f"  false-alarm rate (healthy): {metrics['false_alarm_rate']:.3f}")
    return lines


def cmd_eval(args) -> int:
    model = load_model(args.model)
    entries = load_manifest(args.manifest)
    manifest_dir = Path(args.manifest).parent
    if isinstance(model, CnnModel):
        X, y, _ = collect_spectrograms(entries, manifest_dir, *model.input_shape)
        X = (X - model.normalizer.mean) / model.normalizer.std
    else:
        X, y, _ = collect_fused_rows(entries, manifest_dir)
        if model.normalizer is not None:
            X = apply_normalizer(model.normalizer, X)
    if X.shape[0] == 0:
        raise ValueError("no coughs detected under this manifest")
    metrics = evaluate(model, X, y)
    arch = "cnn" if isinstance(model, CnnModel) else "mlp"
    payload = {"model": args.model, "arch": arch, "rows": int(X.shape[0]),
               "metrics": metrics.to_dict()}
    if args.figures_dir:
        from . import report

        figures = Path(args.figures_dir)
        figures.mkdir(parents=True, exist_ok=True)
        payload["figures"] = {
            "confusion": report.save_confusion_figure(
                metrics.confusion, metrics.class_names, figures / "confusion.png"),
        }
    _emit(args, payload, _metrics_lines(payload))
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    results = {}
    if args.arch in ("mlp", "both"):
        model = MlpModel.initialize(9, (12, 8), ("a", "b", "c"), seed=args.seed)
        X = rng.normal(size=(16, 9))
        y = rng.integers(0, 3, size=16)
        results["mlp"] = gradient_check(model, X, y, n_samples=250, seed=args.seed)
    if args.arch in ("cnn", "both"):
        model = CnnModel.initialize(input_shape=(12, 10), conv_channels=(3, 4),
                                    class_names=("a", "b"), seed=args.seed)
        X = rng.normal(size=(4, 12, 10))
        y = rng.integers(0, 2, size=4)
        results["cnn"] = gradient_check(model, X, y, n_samples=250, seed=args.seed)
    tolerances = {"mlp": 1e-4, "cnn": 1e-3}
    payload = {
        arch: {"max_relative_error": err, "tolerance": tolerances[arch],
               "ok": err < tolerances[arch]}
        for arch, err in results.items()
    }
    _emit(args, payload, [
        f"{arch}: max relative error {v['max_relative_error']:.3e}"
        f" (tolerance {v['tolerance']:.0e}) {'OK' if v['ok'] else 'FAIL'}"
        for arch, v in payload.items()
    ])
    return 0 if all(v["ok"] for v in payload.values()) else 2


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.listen.rpartition(":")
    app = create_app(store_dir=args.store, model_path=args.model,
                     max_clip_seconds=args.max_clip_seconds,
                     frontend_dir=args.frontend)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _print_config(args)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        if getattr(args, "verbose", False):
            raise
        return 2


if __name__ == "__main__":
    sys.exit(main())
