/** Binary articulatory-feature container (.artf) parsing and serialization. */

export const EMA_CHANNELS = [
  "UL_x", "UL_y",
  "LL_x", "LL_y",
  "LI_x", "LI_y",
  "TT_x", "TT_y",
  "TB_x", "TB_y",
  "TD_x", "TD_y",
] as const;

export const FEATURE_CHANNELS = [...EMA_CHANNELS, "f0", "loudness"] as const;
export type ChannelName = (typeof FEATURE_CHANNELS)[number];

export const FRAME_RATE = 50;
const MAGIC = 0x41525446; // "ARTF" big-endian view of the 4 bytes
const N_CHANNELS = 14;

export interface Features {
  /** channels[c][t]: 14 rows in canonical order */
  channels: Float32Array[];
  periodicity: Float32Array;
  nFrames: number;
  rate: number;
}

export function parseArtf(buffer: ArrayBuffer): Features {
  const view = new DataView(buffer);
  if (buffer.byteLength < 14) throw new Error("artf: truncated header");
  if (view.getUint32(0, false) !== MAGIC) throw new Error("artf: bad magic");
  const version = view.getUint8(4);
  if (version !== 1) throw new Error(`artf: unsupported version ${version}`);
  const nFrames = view.getUint32(5, true);
  const nChannels = view.getUint8(9);
  if (nChannels !== N_CHANNELS) {
    throw new Error(`artf: expected ${N_CHANNELS} channels, got ${nChannels}`);
  }
  const rate = view.getUint32(10, true);
  const expected = 14 + 4 * nFrames * N_CHANNELS + 4 * nFrames;
  if (buffer.byteLength !== expected) {
    throw new Error("artf: payload length mismatch");
  }
  const channels = Array.from({ length: N_CHANNELS },
    () => new Float32Array(nFrames));
  let offset = 14;
  for (let t = 0; t < nFrames; t++) {
    for (let c = 0; c < N_CHANNELS; c++) {
      channels[c][t] = view.getFloat32(offset, true);
      offset += 4;
    }
  }
  const periodicity = new Float32Array(nFrames);
  for (let t = 0; t < nFrames; t++) {
    periodicity[t] = view.getFloat32(offset, true);
    offset += 4;
  }
  return { channels, periodicity, nFrames, rate };
}

export function serializeArtf(f: Features): ArrayBuffer {
  const bytes = 14 + 4 * f.nFrames * N_CHANNELS + 4 * f.nFrames;
  const buffer = new ArrayBuffer(bytes);
  const view = new DataView(buffer);
  view.setUint32(0, MAGIC, false);
  view.setUint8(4, 1);
  view.setUint32(5, f.nFrames, true);
  view.setUint8(9, N_CHANNELS);
  view.setUint32(10, f.rate, true);
  let offset = 14;
  for (let t = 0; t < f.nFrames; t++) {
    for (let c = 0; c < N_CHANNELS; c++) {
      view.setFloat32(offset, f.channels[c][t], true);
      offset += 4;
    }
  }
  for (let t = 0; t < f.nFrames; t++) {
    view.setFloat32(offset, f.periodicity[t], true);
    offset += 4;
  }
  return buffer;
}

export function base64ToBuffer(b64: string): ArrayBuffer {
  if (typeof atob === "function") {
    const raw = atob(b64);
    const out = new Uint8Array(raw.length);
    for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
    return out.buffer;
  }
  const buf = Buffer.from(b64, "base64");
  return buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength);
}

export function bufferToBase64(buffer: ArrayBuffer): string {
  const bytes = new Uint8Array(buffer);
  if (typeof btoa === "function") {
    let raw = "";
    const chunk = 0x8000;
    for (let i = 0; i < bytes.length; i += chunk) {
      raw += String.fromCharCode(...bytes.subarray(i, i + chunk));
    }
    return btoa(raw);
  }
  return Buffer.from(bytes).toString("base64");
}

/** Bytewise equality of two feature payloads. */
export function sameArtf(a: string, b: string): boolean {
  return a === b;
}
