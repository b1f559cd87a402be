// PCM-16 WAV encoding and light-weight header parsing.
//
// The service accepts mono PCM-16 RIFF/WAVE at 22,050 Hz, so everything the
// browser captures or the user picks is converted to that shape before any
// network call.

export const TARGET_SAMPLE_RATE = 22050;

export interface WavInfo {
  sampleRate: number;
  channels: number;
  bitsPerSample: number;
  nFrames: number;
  durationS: number;
}

/** Linear-interpolation resample of mono float samples. */
export function resampleLinear(samples: Float32Array, fromRate: number, toRate: number): Float32Array {
  if (fromRate === toRate) return samples;
  const nOut = Math.round((samples.length * toRate) / fromRate);
  const out = new Float32Array(nOut);
  const step = fromRate / toRate;
  for (let i = 0; i < nOut; i++) {
    const pos = i * step;
    const i0 = Math.floor(pos);
    const i1 = Math.min(i0 + 1, samples.length - 1);
    const frac = pos - i0;
    out[i] = samples[i0] * (1 - frac) + samples[i1] * frac;
  }
  return out;
}

/** Encode mono float samples in [-1, 1] as a PCM-16 little-endian WAV file. */
export function encodeWav(samples: Float32Array, sampleRate: number = TARGET_SAMPLE_RATE): ArrayBuffer {
  const dataBytes = samples.length * 2;
  const buffer = new ArrayBuffer(44 + dataBytes);
  const view = new DataView(buffer);
  const writeAscii = (offset: number, text: string) => {
    for (let i = 0; i < text.length; i++) view.setUint8(offset + i, text.charCodeAt(i));
  };
  writeAscii(0, "RIFF");
  view.setUint32(4, 36 + dataBytes, true);
  writeAscii(8, "WAVE");
  writeAscii(12, "fmt ");
  view.setUint32(16, 16, true); // PCM fmt chunk size
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true); // byte rate
  view.setUint16(32, 2, true); // block align
  view.setUint16(34, 16, true); // bits per sample
  writeAscii(36, "data");
  view.setUint32(40, dataBytes, true);
  let offset = 44;
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    view.setInt16(offset, Math.max(-32768, Math.min(32767, Math.round(clamped * 32768))), true);
    offset += 2;
  }
  return buffer;
}

/**
 * Parse enough of a RIFF/WAVE header to know its shape and duration.
 * Returns null when the bytes are not a PCM WAV file.
 */
export function readWavInfo(bytes: ArrayBuffer): WavInfo | null {
  if (bytes.byteLength < 44) return null;
  const view = new DataView(bytes);
  const ascii = (offset: number, len: number) => {
    let s = "";
    for (let i = 0; i < len; i++) s += String.fromCharCode(view.getUint8(offset + i));
    return s;
  };
  if (ascii(0, 4) !== "RIFF" || ascii(8, 4) !== "WAVE") return null;

  let offset = 12;
  let sampleRate = 0;
  let channels = 0;
  let bitsPerSample = 0;
  let dataBytes = -1;
  while (offset + 8 <= bytes.byteLength) {
    const chunkId = ascii(offset, 4);
    const chunkSize = view.getUint32(offset + 4, true);
    if (chunkId === "fmt ") {
      const format = view.getUint16(offset + 8, true);
      if (format !== 1) return null; // PCM only
      channels = view.getUint16(offset + 10, true);
      sampleRate = view.getUint32(offset + 12, true);
      bitsPerSample = view.getUint16(offset + 22, true);
    } else if (chunkId === "data") {
      dataBytes = Math.min(chunkSize, bytes.byteLength - offset - 8);
      break;
    }
    offset += 8 + chunkSize + (chunkSize % 2);
  }
  if (!sampleRate || !channels || !bitsPerSample || dataBytes < 0) return null;
  const nFrames = dataBytes / ((bitsPerSample / 8) * channels);
  return {
    sampleRate,
    channels,
    bitsPerSample,
    nFrames,
    durationS: nFrames / sampleRate,
  };
}

/** Decode mono samples out of a PCM-16 WAV buffer (averages stereo). */
export function decodePcm16Wav(bytes: ArrayBuffer): { samples: Float32Array; sampleRate: number } | null {
  const info = readWavInfo(bytes);
  if (!info || info.bitsPerSample !== 16) return null;
  const view = new DataView(bytes);
  // find the data chunk offset again
  let offset = 12;
  const ascii = (o: number) =>
    String.fromCharCode(view.getUint8(o), view.getUint8(o + 1), view.getUint8(o + 2), view.getUint8(o + 3));
  while (offset + 8 <= bytes.byteLength) {
    const chunkSize = view.getUint32(offset + 4, true);
    if (ascii(offset) === "data") {
      const start = offset + 8;
      const samples = new Float32Array(info.nFrames);
      for (let i = 0; i < info.nFrames; i++) {
        let acc = 0;
        for (let c = 0; c < info.channels; c++) {
          acc += view.getInt16(start + (i * info.channels + c) * 2, true);
        }
        samples[i] = acc / info.channels / 32768;
      }
      return { samples, sampleRate: info.sampleRate };
    }
    offset += 8 + chunkSize + (chunkSize % 2);
  }
  return null;
}
