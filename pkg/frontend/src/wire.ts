/** Frame layout per PROTOCOL.md: topic prefix + 32-byte header + payload. */

import { FramingError } from "./schema.js";

export const MAGIC = new Uint8Array([0x43, 0x54, 0x58, 0x31]); // "CTX1"
export const VERSION = 1;
export const HEADER_SIZE = 32;
export const MAX_TOPIC_BYTES = 255;

export class ProtocolError extends Error {}

export interface Frame {
  topic: string;
  flags: number;
  schemaHash: bigint;
  publishTimeNs: bigint;
  payload: Uint8Array;
}

export function encodeFrame(
  topic: string,
  schemaHash: bigint,
  publishTimeNs: bigint,
  payload: Uint8Array,
  flags = 0,
): Uint8Array {
  const traw = new TextEncoder().encode(topic);
  if (traw.length > MAX_TOPIC_BYTES) {
    throw new Error(`topic exceeds ${MAX_TOPIC_BYTES} UTF-8 bytes: ${topic}`);
  }
  const total = 1 + traw.length + HEADER_SIZE + payload.length;
  const out = new Uint8Array(total);
  const view = new DataView(out.buffer);
  out[0] = traw.length;
  out.set(traw, 1);
  let off = 1 + traw.length;
  out.set(MAGIC, off);
  out[off + 4] = VERSION;
  out[off + 5] = flags;
  view.setUint16(off + 6, 0, true);
  view.setBigUint64(off + 8, schemaHash, true);
  view.setBigUint64(off + 16, publishTimeNs, true);
  view.setBigUint64(off + 24, BigInt(payload.length), true);
  out.set(payload, off + HEADER_SIZE);
  return out;
}

/**
 * Try to decode a frame at the start of `buf`.
 * Returns null when more bytes are needed; throws on structural corruption.
 */
export function decodeFramePrefix(buf: Uint8Array): { frame: Frame; consumed: number } | null {
  const n = buf.length;
  if (n < 1) return null;
  const tlen = buf[0];
  const headerEnd = 1 + tlen + HEADER_SIZE;
  if (n < headerEnd) return null;
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const mOff = 1 + tlen;
  for (let i = 0; i < 4; i++) {
    if (buf[mOff + i] !== MAGIC[i]) {
      throw new ProtocolError(`bad frame magic at byte ${mOff}`);
    }
  }
  const version = buf[mOff + 4];
  if (version !== VERSION) throw new ProtocolError(`unsupported frame version ${version}`);
  const flags = buf[mOff + 5];
  const schemaHash = view.getBigUint64(mOff + 8, true);
  const publishTimeNs = view.getBigUint64(mOff + 16, true);
  const payloadLen = Number(view.getBigUint64(mOff + 24, true));
  const total = headerEnd + payloadLen;
  if (n < total) return null;
  const topic = new TextDecoder().decode(buf.subarray(1, 1 + tlen));
  return {
    frame: {
      topic,
      flags,
      schemaHash,
      publishTimeNs,
      payload: buf.subarray(headerEnd, total),
    },
    consumed: total,
  };
}

export function decodeFrame(buf: Uint8Array): Frame {
  const out = decodeFramePrefix(buf);
  if (out === null) throw new FramingError("incomplete frame");
  if (out.consumed !== buf.length) {
    throw new FramingError(`${buf.length - out.consumed} trailing bytes after frame`);
  }
  return out.frame;
}
