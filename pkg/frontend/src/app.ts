// Session state machine and DOM wiring.
//
// One in-flight upload at a time; the submit action is enabled only while a
// draft report is on screen.  The UI never computes diagnosis numbers itself:
// everything rendered is read from service responses.

import { ApiError, PocClient, Report, SensorMeta, SpectrogramPayload } from "./api.js";
import {
  buildMembershipBars,
  buildSegmentOverlays,
  describeReport,
  drawSpectrogram,
  drawWaveform,
} from "./render.js";
import { decodePcm16Wav, encodeWav, readWavInfo, resampleLinear, TARGET_SAMPLE_RATE } from "./wav.js";

export const MAX_CLIP_SECONDS = 60;

export interface AppElements {
  root: HTMLElement;
  recordButton: HTMLButtonElement;
  fileInput: HTMLInputElement;
  tempInput: HTMLInputElement;
  uploadButton: HTMLButtonElement;
  submitButton: HTMLButtonElement;
  statusBadge: HTMLElement;
  banner: HTMLElement;
  summary: HTMLElement;
  segmentOverlay: HTMLElement;
  membershipBars: HTMLElement;
  waveformCanvas: HTMLCanvasElement;
  spectrogramCanvas: HTMLCanvasElement;
}

interface PendingAudio {
  wav: ArrayBuffer;
  samples: Float32Array | null;
}

export class CoughApp {
  private pending: PendingAudio | null = null;
  private report: Report | null = null;
  private uploading = false;

  constructor(
    private el: AppElements,
    private client: PocClient,
    private recorder: { recording: boolean; start(): Promise<void>; stop(): Promise<{ samples: Float32Array; sampleRate: number }> } | null,
  ) {
    el.recordButton.addEventListener("click", () => void this.toggleRecording());
    el.fileInput.addEventListener("change", () => void this.onFileChosen());
    el.uploadButton.addEventListener("click", () => void this.upload());
    el.submitButton.addEventListener("click", () => void this.submit());
    this.refreshControls();
  }

  /** Re-open a report by id (used on page load when the hash carries one). */
  async showRecord(recordId: string): Promise<void> {
    try {
      const report = await this.client.getReport(recordId);
      await this.renderReport(report);
    } catch (error) {
      this.showBanner(`could not load record ${recordId}: ${(error as Error).message}`, false);
    }
  }

  private async toggleRecording(): Promise<void> {
    if (!this.recorder) {
      this.showBanner("microphone capture unavailable; use the file picker", false);
      return;
    }
    if (this.recorder.recording) {
      const { samples, sampleRate } = await this.recorder.stop();
      this.el.recordButton.textContent = "Record";
      const resampled = resampleLinear(samples, sampleRate, TARGET_SAMPLE_RATE);
      this.setPending({ wav: encodeWav(resampled), samples: resampled });
      return;
    }
    try {
      await this.recorder.start();
      this.el.recordButton.textContent = "Stop";
      this.clearBanner();
    } catch {
      // Permission denied: keep the upload path fully usable.
      this.showBanner("microphone permission denied; pick a WAV file instead", false);
    }
  }

  private async onFileChosen(): Promise<void> {
    const file = this.el.fileInput.files?.[0];
    if (!file) return;
    const bytes = await file.arrayBuffer();
    const info = readWavInfo(bytes);
    if (info && info.durationS > MAX_CLIP_SECONDS) {
      // Mirror the server's clip cap before spending any network time.
      this.showBanner(`clip is ${info.durationS.toFixed(0)} s; the limit is ${MAX_CLIP_SECONDS} s`, false);
      this.pending = null;
      this.refreshControls();
      return;
    }
    if (info && info.bitsPerSample === 16 && info.sampleRate === TARGET_SAMPLE_RATE && info.channels === 1) {
      const decoded = decodePcm16Wav(bytes);
      this.setPending({ wav: bytes, samples: decoded ? decoded.samples : null });
      return;
    }
    if (info && info.bitsPerSample === 16) {
      const decoded = decodePcm16Wav(bytes);
      if (decoded) {
        const resampled = resampleLinear(decoded.samples, decoded.sampleRate, TARGET_SAMPLE_RATE);
        this.setPending({ wav: encodeWav(resampled), samples: resampled });
        return;
      }
    }
    // Anything else goes through the browser decoder when available.
    if (typeof AudioContext !== "undefined") {
      try {
        const context = new AudioContext();
        const decoded = await context.decodeAudioData(bytes.slice(0));
        await context.close();
        const mono = decoded.getChannelData(0);
        if (decoded.length / decoded.sampleRate > MAX_CLIP_SECONDS) {
          this.showBanner(`clip is too long; the limit is ${MAX_CLIP_SECONDS} s`, false);
          return;
        }
        const resampled = resampleLinear(mono, decoded.sampleRate, TARGET_SAMPLE_RATE);
        this.setPending({ wav: encodeWav(resampled), samples: resampled });
        return;
      } catch {
        // fall through to the banner below
      }
    }
    this.showBanner("could not read that file as audio", false);
  }

  private setPending(pending: PendingAudio): void {
    this.pending = pending;
    this.clearBanner();
    if (pending.samples) drawWaveform(this.el.waveformCanvas, pending.samples);
    this.el.summary.textContent = "clip ready; add a temperature and upload";
    this.refreshControls();
  }

  private sensorMeta(): SensorMeta {
    const meta: SensorMeta = {};
    const temp = parseFloat(this.el.tempInput.value);
    if (!Number.isNaN(temp)) meta.temp_c = temp;
    return meta;
  }

  async upload(): Promise<void> {
    if (!this.pending || this.uploading) return;
    this.uploading = true;
    this.refreshControls();
    try {
      const result = await this.client.uploadClip(this.pending.wav, this.sensorMeta());
      if (result.kind === "no_cough") {
        this.renderNoCough(result.recordId);
      } else {
        await this.renderReport(result.report);
      }
    } catch (error) {
      const detail = error instanceof ApiError ? error.message : "network failure; try again";
      this.showBanner(detail, true);
    } finally {
      this.uploading = false;
      this.refreshControls();
    }
  }

  private async renderReport(report: Report): Promise<void> {
    this.report = report;
    this.clearBanner();
    this.el.root.dataset.state = "report";
    this.el.summary.textContent = describeReport(report);
    this.el.statusBadge.textContent = report.status;
    this.el.statusBadge.dataset.status = report.status;
    window.location.hash = report.record_id;

    // segment and phase bands over the waveform
    const duration = report.segments.length
      ? Math.max(...report.segments.map((s) => s.end_ms)) / 1000 + 0.3
      : 1;
    this.el.segmentOverlay.replaceChildren(
      ...buildSegmentOverlays(report.segments, duration).flatMap((overlay) => {
        const box = document.createElement("div");
        box.className = "segment-box";
        box.style.left = `${overlay.leftPct}%`;
        box.style.width = `${overlay.widthPct}%`;
        box.title = overlay.label;
        const bands = overlay.phases.map((band) => {
          const div = document.createElement("div");
          div.className = `phase-band phase-${band.name}`;
          div.style.left = `${band.leftPct}%`;
          div.style.width = `${band.widthPct}%`;
          div.style.background = band.color;
          return div;
        });
        return [box, ...bands];
      }),
    );

    // wet/dry badges per segment live in the summary line
    const wetDry = report.segments
      .map((s, i) => (s.wet_dry ? `#${i + 1} ${s.wet_dry.label}` : null))
      .filter((x): x is string => x !== null);
    if (wetDry.length) {
      this.el.summary.textContent += ` [${wetDry.join(", ")}]`;
    }

    // membership bars
    this.el.membershipBars.replaceChildren();
    if (report.memberships) {
      for (const bar of buildMembershipBars(report.memberships, report.diagnosis)) {
        const row = document.createElement("div");
        row.className = "bar-row";
        const label = document.createElement("span");
        label.className = "bar-label";
        label.textContent = bar.name;
        const track = document.createElement("div");
        track.className = "bar-track";
        const fill = document.createElement("div");
        fill.className = bar.isDiagnosis ? "bar-fill diagnosis" : "bar-fill";
        fill.style.width = `${bar.fraction * 100}%`;
        fill.dataset.fraction = String(bar.fraction);
        const value = document.createElement("span");
        value.className = "bar-value";
        value.textContent = bar.percentLabel;
        track.appendChild(fill);
        row.append(label, track, value);
        this.el.membershipBars.appendChild(row);
      }
    }

    try {
      const spectrogram: SpectrogramPayload = await this.client.getSpectrogram(report.record_id);
      drawSpectrogram(this.el.spectrogramCanvas, spectrogram);
    } catch {
      // spectrogram is decorative; the report stands without it
    }
    this.refreshControls();
  }

  private renderNoCough(recordId: string): void {
    this.report = null;
    this.el.root.dataset.state = "no_cough";
    this.el.summary.textContent = "no cough detected in this clip";
    this.el.statusBadge.textContent = "";
    this.el.segmentOverlay.replaceChildren();
    this.el.membershipBars.replaceChildren();
    window.location.hash = recordId;
    this.refreshControls();
  }

  async submit(): Promise<void> {
    if (!this.report || this.report.status !== "draft") return;
    try {
      const updated = await this.client.submitReport(this.report.record_id);
      this.report = updated;
      this.el.statusBadge.textContent = updated.status;
      this.el.statusBadge.dataset.status = updated.status;
      this.clearBanner();
    } catch {
      this.showBanner("submit failed; check the connection and retry", true);
    }
    this.refreshControls();
  }

  private refreshControls(): void {
    this.el.uploadButton.disabled = this.pending === null || this.uploading;
    this.el.submitButton.disabled = this.report === null || this.report.status !== "draft";
  }

  private showBanner(message: string, retryable: boolean): void {
    this.el.banner.textContent = message;
    this.el.banner.dataset.kind = retryable ? "retryable" : "info";
    this.el.banner.hidden = false;
  }

  private clearBanner(): void {
    this.el.banner.hidden = true;
    this.el.banner.textContent = "";
  }
}

export function queryElements(document: Document): AppElements {
  const get = <T extends HTMLElement>(id: string): T => {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  };
  return {
    root: get("app"),
    recordButton: get<HTMLButtonElement>("record-button"),
    fileInput: get<HTMLInputElement>("file-input"),
    tempInput: get<HTMLInputElement>("temp-input"),
    uploadButton: get<HTMLButtonElement>("upload-button"),
    submitButton: get<HTMLButtonElement>("submit-button"),
    statusBadge: get("status-badge"),
    banner: get("banner"),
    summary: get("summary"),
    segmentOverlay: get("segment-overlay"),
    membershipBars: get("membership-bars"),
    waveformCanvas: get<HTMLCanvasElement>("waveform-canvas"),
    spectrogramCanvas: get<HTMLCanvasElement>("spectrogram-canvas"),
  };
}
