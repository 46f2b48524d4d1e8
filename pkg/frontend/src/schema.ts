/**
 * Message schemas: declaration parsing, canonical strings, FNV-1a hashing,
 * and payload encode/decode per PROTOCOL.md.
 *
 * This implementation is written against the protocol document only; it
 * shares no code with the simulator side. Multi-byte values are
 * little-endian on the wire. Array payloads decode as typed-array views
 * over the receive buffer when alignment allows, otherwise as a single
 * copy.
 */

export type ScalarKind =
  | "u8" | "u16" | "u32" | "u64"
  | "i8" | "i16" | "i32" | "i64"
  | "f32" | "f64" | "bool";

export const SCALAR_KINDS: ScalarKind[] = [
  "u8", "u16", "u32", "u64", "i8", "i16", "i32", "i64", "f32", "f64", "bool",
];

/** On-wire element-type codes for dynamic arrays (1-based, declaration order). */
export const DTYPE_CODES: Record<ScalarKind, number> = Object.fromEntries(
  SCALAR_KINDS.map((k, i) => [k, i + 1]),
) as Record<ScalarKind, number>;

const KIND_FROM_CODE = new Map<number, ScalarKind>(
  SCALAR_KINDS.map((k, i) => [i + 1, k]),
);

export interface ArrayType {
  kind: ScalarKind;
  /** fixed row-major dims; mutually exclusive with rank */
  shape?: number[];
  /** dynamic array rank */
  rank?: number;
}

export type FieldType = ScalarKind | "string" | ArrayType;

export interface Field {
  name: string;
  type: FieldType;
}

export interface Schema {
  name: string;
  fields: Field[];
}

export type TypedArray =
  | Uint8Array | Uint16Array | Uint32Array | BigUint64Array
  | Int8Array | Int16Array | Int32Array | BigInt64Array
  | Float32Array | Float64Array;

/** Row-major n-dimensional array: flat typed data plus its shape. */
export interface NdArray {
  shape: number[];
  data: TypedArray;
}

export type Value = number | bigint | boolean | string | NdArray;
export type Message = Record<string, Value>;

export class SchemaError extends Error {}
export class FramingError extends Error {}
export class TypeMismatchError extends Error {
  constructor(readonly expected: bigint, readonly actual: bigint) {
    super(`schema hash mismatch: expected 0x${expected.toString(16)}, got 0x${actual.toString(16)}`);
  }
}

const ELEMENT_SIZE: Record<ScalarKind, number> = {
  u8: 1, u16: 2, u32: 4, u64: 8, i8: 1, i16: 2, i32: 4, i64: 8,
  f32: 4, f64: 8, bool: 1,
};

const TYPED_ARRAY: Record<ScalarKind, { new(n: number): TypedArray;
  new(b: ArrayBufferLike, off: number, n: number): TypedArray }> = {
  u8: Uint8Array, u16: Uint16Array, u32: Uint32Array, u64: BigUint64Array,
  i8: Int8Array, i16: Int16Array, i32: Int32Array, i64: BigInt64Array,
  f32: Float32Array, f64: Float64Array, bool: Uint8Array,
};

// -- declaration text ------------------------------------------------------

const NAME_RE = /^[A-Za-z_][A-Za-z0-9_]*$/;
const FIELD_RE = /^([A-Za-z_][A-Za-z0-9_]*):([a-z][a-z0-9]*)((?:\[[0-9,*\]\[]*\])?)$/;

function isScalarKind(s: string): s is ScalarKind {
  return (SCALAR_KINDS as string[]).includes(s);
}

/** Parse a canonical declaration like `Imu{accel:f32[3];gyro:f32[3];t:u64}`. */
export function parseSchema(text: string): Schema {
  const m = /^([A-Za-z_][A-Za-z0-9_]*)\{(.*)\}$/.exec(text.trim());
  if (!m) throw new SchemaError(`malformed schema declaration: ${text}`);
  const [, name, body] = m;
  const fields: Field[] = [];
  const seen = new Set<string>();
  if (body.length > 0) {
    for (const part of body.split(";")) {
      const fm = FIELD_RE.exec(part.trim());
      if (!fm) throw new SchemaError(`malformed field declaration: ${part}`);
      const [, fname, kind, dims] = fm;
      if (seen.has(fname)) throw new SchemaError(`duplicate field name: ${fname}`);
      seen.add(fname);
      if (!dims) {
        if (kind !== "string" && !isScalarKind(kind)) {
          throw new SchemaError(`unknown type ${kind} in field ${part}`);
        }
        fields.push({ name: fname, type: kind as FieldType });
      } else if (dims.includes("*")) {
        if (!isScalarKind(kind)) throw new SchemaError(`unknown element kind ${kind}`);
        if (!/^(\[\*\])+$/.test(dims)) {
          throw new SchemaError(`malformed dynamic dims in field ${part}`);
        }
        fields.push({ name: fname, type: { kind, rank: dims.length / 3 } });
      } else {
        if (!isScalarKind(kind)) throw new SchemaError(`unknown element kind ${kind}`);
        const dm = /^\[([0-9]+(?:,[0-9]+)*)\]$/.exec(dims);
        if (!dm) throw new SchemaError(`malformed fixed dims in field ${part}`);
        const shape = dm[1].split(",").map((d) => parseInt(d, 10));
        if (shape.some((d) => d <= 0)) {
          throw new SchemaError(`fixed dims must be positive in field ${part}`);
        }
        fields.push({ name: fname, type: { kind, shape } });
      }
    }
  }
  if (!NAME_RE.test(name)) throw new SchemaError(`bad schema name: ${name}`);
  return { name, fields };
}

function typeCode(t: FieldType): string {
  if (typeof t === "string") return t;
  if (t.rank !== undefined) return t.kind + "[*]".repeat(t.rank);
  return `${t.kind}[${t.shape!.join(",")}]`;
}

export function canonicalString(schema: Schema): string {
  const body = schema.fields.map((f) => `${f.name}:${typeCode(f.type)}`).join(";");
  return `${schema.name}{${body}}`;
}

// -- hashing ---------------------------------------------------------------

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const MASK64 = 0xffffffffffffffffn;

export function fnv1a64(data: Uint8Array): bigint {
  let h = FNV_OFFSET;
  for (const b of data) {
    h ^= BigInt(b);
    h = (h * FNV_PRIME) & MASK64;
  }
  return h;
}

export function schemaHash(schema: Schema): bigint {
  return fnv1a64(new TextEncoder().encode(canonicalString(schema)));
}

/** Hash of a declaration string; the values must agree across languages. */
export function declarationHash(declaration: string): bigint {
  return schemaHash(parseSchema(declaration));
}

// -- encoding --------------------------------------------------------------

function prod(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function asNd(field: Field, v: Value): NdArray {
  const t = field.type as ArrayType;
  if (typeof v !== "object" || v === null || !("data" in v) || !("shape" in v)) {
    throw new SchemaError(`field ${field.name}: expected NdArray {shape, data}`);
  }
  const nd = v as NdArray;
  if (t.shape !== undefined) {
    if (nd.shape.length !== t.shape.length
        || nd.shape.some((d, i) => d !== t.shape![i])) {
      throw new SchemaError(
        `field ${field.name}: shape [${nd.shape}] != declared [${t.shape}]`);
    }
  } else if (nd.shape.length !== t.rank) {
    throw new SchemaError(
      `field ${field.name}: rank ${nd.shape.length} != declared rank ${t.rank}`);
  }
  if (nd.data.length !== prod(nd.shape)) {
    throw new SchemaError(`field ${field.name}: data length does not match shape`);
  }
  return nd;
}

export function payloadSize(values: Message, schema: Schema): number {
  let size = 0;
  for (const f of schema.fields) {
    const t = f.type;
    const v = values[f.name];
    if (v === undefined) throw new SchemaError(`missing value for field ${f.name}`);
    if (typeof t === "string") {
      if (t === "string") {
        size += 4 + new TextEncoder().encode(v as string).length;
      } else {
        size += ELEMENT_SIZE[t];
      }
    } else {
      const nd = asNd(f, v);
      const elems = prod(nd.shape);
      size += ELEMENT_SIZE[t.kind] * elems;
      if (t.rank !== undefined) size += 2 + 4 * nd.shape.length;
    }
  }
  return size;
}

function writeScalar(view: DataView, off: number, kind: ScalarKind, v: Value): number {
  switch (kind) {
    case "u8": view.setUint8(off, Number(v)); return off + 1;
    case "u16": view.setUint16(off, Number(v), true); return off + 2;
    case "u32": view.setUint32(off, Number(v), true); return off + 4;
    case "u64": view.setBigUint64(off, BigInt(v as number | bigint), true); return off + 8;
    case "i8": view.setInt8(off, Number(v)); return off + 1;
    case "i16": view.setInt16(off, Number(v), true); return off + 2;
    case "i32": view.setInt32(off, Number(v), true); return off + 4;
    case "i64": view.setBigInt64(off, BigInt(v as number | bigint), true); return off + 8;
    case "f32": view.setFloat32(off, Number(v), true); return off + 4;
    case "f64": view.setFloat64(off, Number(v), true); return off + 8;
    case "bool": view.setUint8(off, v ? 1 : 0); return off + 1;
  }
}

/** Encode a message to payload bytes, fields in declaration order. */
export function encodePayload(values: Message, schema: Schema): Uint8Array {
  const out = new Uint8Array(payloadSize(values, schema));
  const view = new DataView(out.buffer);
  let off = 0;
  for (const f of schema.fields) {
    const t = f.type;
    const v = values[f.name]!;
    if (typeof t === "string") {
      if (t === "string") {
        const raw = new TextEncoder().encode(v as string);
        view.setUint32(off, raw.length, true);
        out.set(raw, off + 4);
        off += 4 + raw.length;
      } else {
        off = writeScalar(view, off, t, v);
      }
    } else {
      const nd = asNd(f, v);
      if (t.rank !== undefined) {
        out[off] = DTYPE_CODES[t.kind];
        out[off + 1] = nd.shape.length;
        off += 2;
        for (const d of nd.shape) {
          view.setUint32(off, d, true);
          off += 4;
        }
      }
      // typed-array bytes are host-order; this SDK assumes a little-endian
      // host, like every platform node ships on
      const bytes = new Uint8Array(nd.data.buffer, nd.data.byteOffset, nd.data.byteLength);
      out.set(bytes, off);
      off += bytes.length;
    }
  }
  return out;
}

function readScalar(view: DataView, off: number, kind: ScalarKind): [Value, number] {
  switch (kind) {
    case "u8": return [view.getUint8(off), off + 1];
    case "u16": return [view.getUint16(off, true), off + 2];
    case "u32": return [view.getUint32(off, true), off + 4];
    case "u64": return [view.getBigUint64(off, true), off + 8];
    case "i8": return [view.getInt8(off), off + 1];
    case "i16": return [view.getInt16(off, true), off + 2];
    case "i32": return [view.getInt32(off, true), off + 4];
    case "i64": return [view.getBigInt64(off, true), off + 8];
    case "f32": return [view.getFloat32(off, true), off + 4];
    case "f64": return [view.getFloat64(off, true), off + 8];
    case "bool": return [view.getUint8(off) !== 0, off + 1];
  }
}

/**
 * Decode a payload. When `headerHash` is given it is checked against the
 * schema hash before any payload byte is interpreted.
 */
export function decodePayload(
  payload: Uint8Array,
  schema: Schema,
  headerHash?: bigint,
): Message {
  if (headerHash !== undefined) {
    const expected = schemaHash(schema);
    if (headerHash !== expected) throw new TypeMismatchError(expected, headerHash);
  }
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const n = payload.byteLength;
  let off = 0;
  const need = (count: number, fname: string) => {
    if (off + count > n) {
      throw new FramingError(
        `payload truncated in field ${fname}: need ${count} bytes at ${off}, have ${n - off}`);
    }
  };
  const out: Message = {};
  for (const f of schema.fields) {
    const t = f.type;
    if (typeof t === "string") {
      if (t === "string") {
        need(4, f.name);
        const len = view.getUint32(off, true);
        off += 4;
        need(len, f.name);
        out[f.name] = new TextDecoder().decode(
          payload.subarray(off, off + len));
        off += len;
      } else {
        need(ELEMENT_SIZE[t], f.name);
        const [v, next] = readScalar(view, off, t);
        out[f.name] = v;
        off = next;
      }
    } else {
      let shape: number[];
      if (t.rank !== undefined) {
        need(2, f.name);
        const code = payload[off];
        const rank = payload[off + 1];
        const kind = KIND_FROM_CODE.get(code);
        if (kind !== t.kind) {
          throw new FramingError(
            `field ${f.name}: wire dtype code ${code} does not match declared ${t.kind}`);
        }
        if (rank !== t.rank) {
          throw new FramingError(
            `field ${f.name}: wire rank ${rank} does not match declared rank ${t.rank}`);
        }
        off += 2;
        shape = [];
        for (let i = 0; i < rank; i++) {
          need(4, f.name);
          shape.push(view.getUint32(off, true));
          off += 4;
        }
      } else {
        shape = t.shape!;
      }
      const elems = prod(shape);
      const elemSize = ELEMENT_SIZE[t.kind];
      need(elems * elemSize, f.name);
      const byteOff = payload.byteOffset + off;
      const Ctor = TYPED_ARRAY[t.kind];
      let data: TypedArray;
      if (byteOff % elemSize === 0) {
        // aligned: zero-copy view over the receive buffer
        data = new Ctor(payload.buffer, byteOff, elems);
      } else {
        const copy = payload.slice(off, off + elems * elemSize);
        data = new Ctor(copy.buffer, 0, elems);
      }
      out[f.name] = { shape, data };
      off += elems * elemSize;
    }
  }
  if (off !== n) throw new FramingError(`${n - off} trailing bytes after last field`);
  return out;
}
