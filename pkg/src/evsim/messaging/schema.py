"""Typed message schemas: canonical strings, 64-bit hashing, serialization.

A schema is an ordered list of named fields. The canonical string (e.g.
``Imu{accel:f32[3];gyro:f32[3];t:u64}``) fully determines the 64-bit
FNV-1a schema hash used to gate deserialization: field names, order,
types, and array shapes are all part of the contract.

Payload layout (little-endian, no padding):
  scalar      raw value (IEEE-754 / two's complement); bool as u8 0 or 1
  string      u32 byte length + UTF-8 bytes
  fixed array raw row-major element data (shape implied by the schema)
  dyn array   u8 dtype code, u8 rank, rank x u32 dims, row-major data
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import FramingError, SchemaError, SerializationError, TypeMismatchError

SCALAR_KINDS = ("u8", "u16", "u32", "u64", "i8", "i16", "i32", "i64", "f32", "f64", "bool")

# On-wire dtype codes for dynamic arrays (declaration order above, 1-based).
DTYPE_CODES = {kind: i + 1 for i, kind in enumerate(SCALAR_KINDS)}
DTYPE_FROM_CODE = {v: k for k, v in DTYPE_CODES.items()}

NUMPY_DTYPES = {
    "u8": np.dtype("<u1"), "u16": np.dtype("<u2"), "u32": np.dtype("<u4"),
    "u64": np.dtype("<u8"), "i8": np.dtype("<i1"), "i16": np.dtype("<i2"),
    "i32": np.dtype("<i4"), "i64": np.dtype("<i8"), "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"), "bool": np.dtype("<u1"),
}

_SCALAR_STRUCTS = {
    "u8": struct.Struct("<B"), "u16": struct.Struct("<H"), "u32": struct.Struct("<I"),
    "u64": struct.Struct("<Q"), "i8": struct.Struct("<b"), "i16": struct.Struct("<h"),
    "i32": struct.Struct("<i"), "i64": struct.Struct("<q"), "f32": struct.Struct("<f"),
    "f64": struct.Struct("<d"), "bool": struct.Struct("<B"),
}

_U32 = struct.Struct("<I")

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


@dataclass(frozen=True)
class ArraySpec:
    """Array field type: fixed shape, or dynamic with a declared rank."""

    kind: str
    shape: tuple[int, ...] | None = None
    rank: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in SCALAR_KINDS:
            raise SchemaError(f"unknown array element kind {self.kind!r}")
        if (self.shape is None) == (self.rank is None):
            raise SchemaError("array type needs exactly one of shape or rank")
        if self.shape is not None and (len(self.shape) == 0 or any(d <= 0 for d in self.shape)):
            raise SchemaError("fixed array shape must be non-empty with positive dims")
        if self.rank is not None and self.rank < 1:
            raise SchemaError("dynamic array rank must be >= 1")

    @property
    def dynamic(self) -> bool:
        return self.rank is not None


FieldType = Any  # scalar kind str, "string", or ArraySpec


@dataclass(frozen=True)
class FieldSpec:
    name: str
    type: FieldType


@dataclass(frozen=True)
class MessageSchema:
    name: str
    fields: tuple[FieldSpec, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("schema name must be non-empty")
        seen = set()
        for f in self.fields:
            if not f.name:
                raise SchemaError("field names must be non-empty")
            if f.name in seen:
                raise SchemaError(f"duplicate field name {f.name!r}")
            seen.add(f.name)
            if isinstance(f.type, str):
                if f.type not in SCALAR_KINDS and f.type != "string":
                    raise SchemaError(f"unknown field type {f.type!r} for field {f.name!r}")
            elif not isinstance(f.type, ArraySpec):
                raise SchemaError(f"bad field type object for field {f.name!r}")


def _type_code(t: FieldType) -> str:
    if isinstance(t, str):
        return t
    if t.dynamic:
        return t.kind + "[*]" * t.rank
    return t.kind + "[" + ",".join(str(d) for d in t.shape) + "]"


def canonical_schema_string(schema: MessageSchema) -> str:
    """Deterministic text form: ``Name{field:type;field:type[dims];...}``."""
    body = ";".join(f"{f.name}:{_type_code(f.type)}" for f in schema.fields)
    return f"{schema.name}{{{body}}}"


_FIELD_RE = re.compile(
    r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*):(?P<kind>[a-z][a-z0-9]*)(?P<dims>(\[[0-9,*\]\[]*\])?)$"
)


def parse_schema(text: str) -> MessageSchema:
    """Parse a canonical-string declaration back into a schema."""
    m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\{(.*)\}$", text.strip())
    if not m:
        raise SchemaError(f"malformed schema declaration: {text!r}")
    name, body = m.group(1), m.group(2)
    fields: list[FieldSpec] = []
    if body:
        for part in body.split(";"):
            fm = _FIELD_RE.match(part.strip())
            if not fm:
                raise SchemaError(f"malformed field declaration: {part!r}")
            fname, kind, dims = fm.group("name"), fm.group("kind"), fm.group("dims")
            if not dims:
                if kind not in SCALAR_KINDS and kind != "string":
                    raise SchemaError(f"unknown type {kind!r} in field {part!r}")
                fields.append(FieldSpec(fname, kind))
            elif "*" in dims:
                if not re.fullmatch(r"(\[\*\])+", dims):
                    raise SchemaError(f"malformed dynamic dims in field {part!r}")
                rank = dims.count("[*]")
                fields.append(FieldSpec(fname, ArraySpec(kind, rank=rank)))
            else:
                dm = re.fullmatch(r"\[([0-9]+(,[0-9]+)*)\]", dims)
                if not dm:
                    raise SchemaError(f"malformed fixed dims in field {part!r}")
                shape = tuple(int(d) for d in dm.group(1).split(","))
                fields.append(FieldSpec(fname, ArraySpec(kind, shape=shape)))
    return MessageSchema(name, tuple(fields))


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over raw bytes."""
    h = FNV_OFFSET_BASIS
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def schema_hash(schema: MessageSchema) -> int:
    """FNV-1a 64 of the canonical schema string's UTF-8 bytes."""
    return fnv1a64(canonical_schema_string(schema).encode("utf-8"))


def _as_array(field: FieldSpec, value: Any) -> np.ndarray:
    spec: ArraySpec = field.type
    dtype = NUMPY_DTYPES[spec.kind]
    try:
        arr = np.asarray(value)
        if spec.kind == "bool":
            arr = arr.astype(np.bool_).astype(dtype)
        else:
            arr = np.ascontiguousarray(arr, dtype=dtype)
    except (TypeError, ValueError) as e:
        raise SerializationError(f"field {field.name!r}: cannot convert to {spec.kind}: {e}")
    if spec.dynamic:
        if arr.ndim != spec.rank:
            raise SerializationError(
                f"field {field.name!r}: rank {arr.ndim} != declared rank {spec.rank}"
            )
    elif arr.shape != spec.shape:
        raise SerializationError(
            f"field {field.name!r}: shape {arr.shape} != declared shape {spec.shape}"
        )
    return np.ascontiguousarray(arr)


def serialize(values: Mapping[str, Any], schema: MessageSchema) -> bytes:
    """Encode a value mapping to payload bytes, fields in declaration order."""
    out: list[bytes] = []
    for f in schema.fields:
        if f.name not in values:
            raise SerializationError(f"missing value for field {f.name!r}")
        v = values[f.name]
        t = f.type
        if isinstance(t, str):
            if t == "string":
                if not isinstance(v, str):
                    raise SerializationError(f"field {f.name!r}: expected str, got {type(v).__name__}")
                raw = v.encode("utf-8")
                out.append(_U32.pack(len(raw)))
                out.append(raw)
            else:
                try:
                    if t == "bool":
                        out.append(_SCALAR_STRUCTS[t].pack(1 if v else 0))
                    else:
                        out.append(_SCALAR_STRUCTS[t].pack(v))
                except (struct.error, TypeError) as e:
                    raise SerializationError(f"field {f.name!r}: {e}")
        else:
            arr = _as_array(f, v)
            if t.dynamic:
                head = bytes([DTYPE_CODES[t.kind], arr.ndim])
                dims = b"".join(_U32.pack(d) for d in arr.shape)
                out.append(head)
                out.append(dims)
            out.append(arr.tobytes())
    return b"".join(out)


def serialize_into(values: Mapping[str, Any], schema: MessageSchema,
                   buf: bytearray, offset: int) -> int:
    """Encode directly into ``buf`` at ``offset``; returns the end offset.

    Byte-identical to :func:`serialize`, but array data is copied exactly
    once (into the destination) instead of materializing intermediate
    bytes objects. The caller sizes ``buf`` via :func:`payload_size`.
    """
    off = offset
    for f in schema.fields:
        if f.name not in values:
            raise SerializationError(f"missing value for field {f.name!r}")
        v = values[f.name]
        t = f.type
        if isinstance(t, str):
            if t == "string":
                if not isinstance(v, str):
                    raise SerializationError(f"field {f.name!r}: expected str, got {type(v).__name__}")
                raw = v.encode("utf-8")
                _U32.pack_into(buf, off, len(raw))
                off += 4
                buf[off:off + len(raw)] = raw
                off += len(raw)
            else:
                s = _SCALAR_STRUCTS[t]
                try:
                    s.pack_into(buf, off, (1 if v else 0) if t == "bool" else v)
                except (struct.error, TypeError) as e:
                    raise SerializationError(f"field {f.name!r}: {e}")
                off += s.size
        else:
            arr = _as_array(f, v)
            if t.dynamic:
                buf[off] = DTYPE_CODES[t.kind]
                buf[off + 1] = arr.ndim
                off += 2
                for d in arr.shape:
                    _U32.pack_into(buf, off, d)
                    off += 4
            nbytes = arr.nbytes
            if 0 < nbytes <= 4096:
                buf[off:off + nbytes] = arr.tobytes()  # cheaper than copyto when small
            elif nbytes:
                dst = np.frombuffer(buf, dtype=np.uint8, count=nbytes, offset=off)
                np.copyto(dst, arr.view(np.uint8).ravel())
            off += nbytes
    return off


def payload_size(values: Mapping[str, Any], schema: MessageSchema) -> int:
    """Exact serialized size, computed from the schema and dynamic dims only."""
    size = 0
    for f in schema.fields:
        t = f.type
        v = values[f.name]
        if isinstance(t, str):
            if t == "string":
                size += 4 + len(v.encode("utf-8"))
            else:
                size += _SCALAR_STRUCTS[t].size
        else:
            dtype = NUMPY_DTYPES[t.kind]
            if t.dynamic:
                shape = np.shape(v)
                size += 2 + 4 * len(shape) + dtype.itemsize * math.prod(shape)
            else:
                size += dtype.itemsize * math.prod(t.shape)
    return size


def deserialize(
    payload: bytes | memoryview,
    schema: MessageSchema,
    header_hash: int | None = None,
) -> dict[str, Any]:
    """Decode a payload; rejects on hash mismatch before touching any bytes.

    Array fields are returned as read-only views into ``payload`` (zero-copy);
    they remain valid only as long as the underlying buffer does.
    """
    if header_hash is not None:
        expected = schema_hash(schema)
        if header_hash != expected:
            raise TypeMismatchError(expected, header_hash)
    buf = memoryview(payload)
    n = len(buf)
    off = 0
    out: dict[str, Any] = {}

    def need(count: int, fname: str) -> int:
        nonlocal off
        if off + count > n:
            raise FramingError(
                f"payload truncated in field {fname!r}: need {count} bytes at offset {off}, have {n - off}"
            )
        prev = off
        off += count
        return prev

    for f in schema.fields:
        t = f.type
        if isinstance(t, str):
            if t == "string":
                p = need(4, f.name)
                (slen,) = _U32.unpack_from(buf, p)
                p = need(slen, f.name)
                out[f.name] = bytes(buf[p:p + slen]).decode("utf-8")
            else:
                s = _SCALAR_STRUCTS[t]
                p = need(s.size, f.name)
                (val,) = s.unpack_from(buf, p)
                out[f.name] = bool(val) if t == "bool" else val
        else:
            if t.dynamic:
                p = need(2, f.name)
                code, rank = buf[p], buf[p + 1]
                kind = DTYPE_FROM_CODE.get(code)
                if kind != t.kind:
                    raise FramingError(
                        f"field {f.name!r}: wire dtype code {code} does not match declared {t.kind}"
                    )
                if rank != t.rank:
                    raise FramingError(
                        f"field {f.name!r}: wire rank {rank} does not match declared rank {t.rank}"
                    )
                dims = []
                for _ in range(rank):
                    p = need(4, f.name)
                    dims.append(_U32.unpack_from(buf, p)[0])
                shape = tuple(dims)
            else:
                shape = t.shape
            dtype = NUMPY_DTYPES[t.kind]
            count = math.prod(shape) if shape else 1
            p = need(dtype.itemsize * count, f.name)
            arr = np.frombuffer(buf, dtype=dtype, count=count, offset=p).reshape(shape)
            if t.kind == "bool":
                arr = arr.astype(np.bool_)  # copies; u8 view would leak wire repr
            else:
                arr.flags.writeable = False
            out[f.name] = arr
    if off != n:
        raise FramingError(f"{n - off} trailing bytes after last field")
    return out
