// Pure view-data builders plus thin canvas painters.  Geometry and color
// mapping are kept separate from the DOM so they stay testable.

import type { Report, SegmentView, SpectrogramPayload } from "./api.js";

export const PHASE_COLORS: Record<string, string> = {
  explosive: "#d62728",
  intermediate: "#ff7f0e",
  voiced: "#2ca02c",
};

export interface Bar {
  name: string;
  fraction: number;
  percentLabel: string;
  isDiagnosis: boolean;
}

/** Membership bars; fractions add up to the memberships' total (~1). */
export function buildMembershipBars(
  memberships: Record<string, number>,
  diagnosis: string | null,
): Bar[] {
  return Object.entries(memberships).map(([name, fraction]) => ({
    name,
    fraction,
    percentLabel: `${(fraction * 100).toFixed(0)}%`,
    isDiagnosis: name === diagnosis,
  }));
}

export interface OverlayBand {
  name: string;
  leftPct: number;
  widthPct: number;
  color: string;
}

export interface SegmentOverlay {
  leftPct: number;
  widthPct: number;
  label: string;
  phases: OverlayBand[];
}

/** Positions (in % of the clip length) for segment boxes and phase bands. */
export function buildSegmentOverlays(segments: SegmentView[], durationS: number): SegmentOverlay[] {
  const totalMs = durationS * 1000;
  if (totalMs <= 0) return [];
  const pct = (ms: number) => Math.max(0, Math.min(100, (ms / totalMs) * 100));
  return segments.map((segment) => ({
    leftPct: pct(segment.start_ms),
    widthPct: pct(segment.end_ms) - pct(segment.start_ms),
    label: segment.wet_dry ? `${segment.pattern ?? "?"} / ${segment.wet_dry.label}` : segment.pattern ?? "?",
    phases: segment.phases.map((phase) => ({
      name: phase.name,
      leftPct: pct(phase.start_ms),
      widthPct: pct(phase.end_ms) - pct(phase.start_ms),
      color: PHASE_COLORS[phase.name] ?? "#999999",
    })),
  }));
}

/**
 * Map a log-mel matrix (frames x bands) onto RGBA pixels, one pixel per
 * cell, band 0 at the bottom row.  Dynamic range is normalized per clip.
 */
export function spectrogramToRgba(
  matrix: number[][],
): { pixels: Uint8ClampedArray<ArrayBuffer>; width: number; height: number } {
  const width = matrix.length;
  const height = width > 0 ? matrix[0].length : 0;
  const pixels = new Uint8ClampedArray(width * height * 4);
  if (width === 0 || height === 0) return { pixels, width, height };
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of matrix) {
    for (const v of row) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  const span = hi - lo || 1;
  for (let x = 0; x < width; x++) {
    for (let y = 0; y < height; y++) {
      const t = (matrix[x][y] - lo) / span;
      // dark blue -> warm yellow ramp
      const idx = ((height - 1 - y) * width + x) * 4;
      pixels[idx] = Math.round(255 * Math.min(1, 1.5 * t));
      pixels[idx + 1] = Math.round(210 * t * t);
      pixels[idx + 2] = Math.round(90 + 100 * (1 - t) - 60 * t);
      pixels[idx + 3] = 255;
    }
  }
  return { pixels, width, height };
}

/** Min/max peak pairs for waveform drawing, one pair per horizontal bin. */
export function waveformPeaks(samples: Float32Array, bins: number): { min: Float32Array; max: Float32Array } {
  const min = new Float32Array(bins);
  const max = new Float32Array(bins);
  const blockSize = Math.max(1, Math.floor(samples.length / bins));
  for (let i = 0; i < bins; i++) {
    let blockMin = 1.0;
    let blockMax = -1.0;
    const start = i * blockSize;
    const end = Math.min(start + blockSize, samples.length);
    for (let j = start; j < end; j++) {
      const v = samples[j];
      if (v < blockMin) blockMin = v;
      if (v > blockMax) blockMax = v;
    }
    min[i] = blockMin <= blockMax ? blockMin : 0;
    max[i] = blockMin <= blockMax ? blockMax : 0;
  }
  return { min, max };
}

/** 2D context or null; some environments (jsdom) throw instead. */
function get2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  try {
    return canvas.getContext("2d");
  } catch {
    return null;
  }
}

/** Paint waveform peaks; no-op when the 2D context is unavailable. */
export function drawWaveform(canvas: HTMLCanvasElement, samples: Float32Array): void {
  const ctx = get2d(canvas);
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const { min, max } = waveformPeaks(samples, width);
  ctx.fillStyle = "#1f77b4";
  for (let x = 0; x < width; x++) {
    const yTop = ((1 - max[x]) * height) / 2;
    const yBot = ((1 - min[x]) * height) / 2;
    ctx.fillRect(x, yTop, 1, Math.max(1, yBot - yTop));
  }
}

/** Paint the spectrogram matrix scaled to the canvas size. */
export function drawSpectrogram(canvas: HTMLCanvasElement, payload: SpectrogramPayload): void {
  const ctx = get2d(canvas);
  if (!ctx) return;
  const { pixels, width, height } = spectrogramToRgba(payload.matrix);
  if (width === 0) return;
  const image = new ImageData(pixels, width, height);
  // draw at native resolution onto an offscreen canvas, then scale up
  const off = document.createElement("canvas");
  off.width = width;
  off.height = height;
  const offCtx = get2d(off);
  if (!offCtx) return;
  offCtx.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

/** One-line textual summary used for the report header. */
export function describeReport(report: Report): string {
  const n = report.segments.length;
  const noun = n === 1 ? "cough" : "coughs";
  const temp = report.sensor.temp_c != null ? `, temperature ${report.sensor.temp_c.toFixed(1)} C` : "";
  const diagnosis = report.diagnosis ? `, preliminary class: ${report.diagnosis}` : "";
  return `${n} ${noun} detected${temp}${diagnosis}`;
}
