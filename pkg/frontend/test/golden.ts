/** Golden corpus loading and dtype-aware value comparison helpers. */

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import * as path from "node:path";

import { Message, NdArray, Schema, ScalarKind } from "../src/schema.js";

export interface GoldenMessage {
  topic: string;
  publish_time_ns: string;
  values: Record<string, unknown>;
  payload_hex: string;
  frame_hex: string;
}

export interface GoldenSchema {
  declaration: string;
  hash: string;
  messages: GoldenMessage[];
}

export function loadCorpus(): { schemas: GoldenSchema[] } {
  const here = path.dirname(fileURLToPath(import.meta.url));
  const p = path.resolve(here, "..", "..", "golden", "corpus.json");
  return JSON.parse(readFileSync(p, "utf-8"));
}

export function hexToBytes(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

function scalarFromJson(kind: ScalarKind | "string", v: unknown): unknown {
  if (kind === "u64" || kind === "i64") return BigInt(v as string);
  if (kind === "bool") return Boolean(v);
  if (kind === "string") return v;
  return Number(v);
}

function scalarEqual(kind: ScalarKind | "string", got: unknown, want: unknown): boolean {
  if (kind === "u64" || kind === "i64") return (got as bigint) === (want as bigint);
  if (kind === "f32" || kind === "f64") return Object.is(Number(got), Number(want));
  return got === want;
}

/** Build the decoded-message equivalent of a golden JSON values object. */
export function messageFromJson(schema: Schema, json: Record<string, unknown>): Message {
  const out: Message = {};
  for (const f of schema.fields) {
    const t = f.type;
    const v = json[f.name];
    if (typeof t === "string") {
      out[f.name] = scalarFromJson(t, v) as never;
    } else {
      const arr = v as { shape: number[]; data: unknown[] };
      out[f.name] = jsonToNd(t.kind, arr.shape, arr.data);
    }
  }
  return out;
}

function jsonToNd(kind: ScalarKind, shape: number[], data: unknown[]): NdArray {
  if (kind === "u64") {
    return { shape, data: BigUint64Array.from(data.map((x) => BigInt(x as string))) };
  }
  if (kind === "i64") {
    return { shape, data: BigInt64Array.from(data.map((x) => BigInt(x as string))) };
  }
  const nums = data.map((x) => (typeof x === "boolean" ? (x ? 1 : 0) : Number(x)));
  switch (kind) {
    case "u8": case "bool": return { shape, data: Uint8Array.from(nums) };
    case "u16": return { shape, data: Uint16Array.from(nums) };
    case "u32": return { shape, data: Uint32Array.from(nums) };
    case "i8": return { shape, data: Int8Array.from(nums) };
    case "i16": return { shape, data: Int16Array.from(nums) };
    case "i32": return { shape, data: Int32Array.from(nums) };
    case "f32": return { shape, data: Float32Array.from(nums) };
    case "f64": return { shape, data: Float64Array.from(nums) };
  }
}

export function messagesEqual(schema: Schema, got: Message, want: Message): string | null {
  for (const f of schema.fields) {
    const t = f.type;
    const g = got[f.name];
    const w = want[f.name];
    if (typeof t === "string") {
      if (!scalarEqual(t, g, w)) {
        return `field ${f.name}: ${String(g)} != ${String(w)}`;
      }
    } else {
      const ga = g as NdArray;
      const wa = w as NdArray;
      if (ga.shape.length !== wa.shape.length
          || ga.shape.some((d, i) => d !== wa.shape[i])) {
        return `field ${f.name}: shape [${ga.shape}] != [${wa.shape}]`;
      }
      for (let i = 0; i < ga.data.length; i++) {
        const a = ga.data[i];
        const b = wa.data[i];
        const eq = typeof a === "bigint" ? a === b : Object.is(Number(a), Number(b));
        if (!eq) return `field ${f.name}[${i}]: ${String(a)} != ${String(b)}`;
      }
    }
  }
  return null;
}
