#!/usr/bin/env python3
"""Generate the golden byte corpus for cross-language wire-contract tests.

Writes golden/corpus.json: 20 schema declarations with their hashes and a
set of deterministic messages, each with payload and full-frame hex. Any
client implementation must decode these bytes to the same values and
re-encode them to the same bytes.

64-bit integers are stored as decimal strings in the JSON (JavaScript
numbers lose precision past 2^53); everything else is plain JSON.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from evsim.messaging import (  # noqa: E402
    canonical_schema_string,
    frame_encode,
    parse_schema,
    schema_hash,
    serialize,
)

DECLARATIONS = [
    # simulator topic schemas
    "Intensity{step_id:u64;t_us:u64;values:f32[*][*]}",
    "Depth{step_id:u64;t_us:u64;values:f32[*][*]}",
    "Events{step_id:u64;t_us:u64;dropped:u64;t:u64[*];x:u16[*];y:u16[*];polarity:i8[*]}",
    "ImuBatch{step_id:u64;t:u64[*];accel:f64[*][*];gyro:f64[*][*]}",
    "Pose{step_id:u64;t_us:u64;position:f64[3];orientation:f64[4];velocity:f64[3];angular_velocity:f64[3]}",
    "Command{step_id:u64;t_cmd_us:u64;mode:u8;rotor_speeds:f64[4];thrust:f64;torque:f64[3]}",
    # coverage of every scalar kind and layout feature
    "Scalars8{a:u8;b:i8;c:bool}",
    "Scalars16{a:u16;b:i16}",
    "Scalars32{a:u32;b:i32;c:f32}",
    "Scalars64{a:u64;b:i64;c:f64}",
    "Imu{accel:f32[3];gyro:f32[3];t:u64}",
    "Text{name:string;tag:string}",
    "FixedGrid{m:f64[2,3]}",
    "FixedCube{v:i16[2,2,2]}",
    "Dyn1{data:f32[*]}",
    "Dyn2{img:u8[*][*]}",
    "Dyn3{vol:i32[*][*][*]}",
    "EmptyDims{data:f64[*];n:u32}",
    "MixedBag{id:u64;name:string;ok:bool;vec:f32[4];hist:u32[*]}",
    "BoolArray{mask:bool[*];fixed:bool[2,2]}",
]


def _json_value(kind: str, v):
    if kind in ("u64", "i64"):
        return str(int(v))
    if kind == "bool":
        return bool(v)
    if kind.startswith("f"):
        return float(v)
    return int(v)


def _values_to_json(schema, values):
    out = {}
    for f in schema.fields:
        t = f.type
        v = values[f.name]
        if t == "string":
            out[f.name] = v
        elif isinstance(t, str):
            out[f.name] = _json_value(t, v)
        else:
            arr = np.asarray(v)
            out[f.name] = {
                "shape": list(arr.shape),
                "data": [_json_value(t.kind, x) for x in arr.ravel().tolist()],
            }
    return out


def _random_values(schema, rng):
    from evsim.messaging.schema import NUMPY_DTYPES
    out = {}
    for f in schema.fields:
        t = f.type
        if t == "string":
            n = int(rng.integers(0, 10))
            out[f.name] = "".join(chr(int(c)) for c in rng.integers(0x20, 0x7F, n))
        elif t == "bool":
            out[f.name] = bool(rng.integers(0, 2))
        elif isinstance(t, str):
            if t == "f32":
                # store the value the wire will carry, not the raw double
                out[f.name] = float(np.float32(rng.normal() * 10))
            elif t == "f64":
                out[f.name] = float(rng.normal() * 10)
            else:
                info = np.iinfo(NUMPY_DTYPES[t])
                out[f.name] = int(rng.integers(info.min, min(info.max, 2**62)))
        else:
            shape = t.shape if not t.dynamic else tuple(
                int(d) for d in rng.integers(0, 5, t.rank))
            if t.kind.startswith("f"):
                arr = rng.normal(size=shape) * 3
            elif t.kind == "bool":
                arr = rng.integers(0, 2, shape).astype(bool)
            else:
                info = np.iinfo(NUMPY_DTYPES[t.kind])
                arr = rng.integers(info.min, min(info.max, 2**62), shape)
            out[f.name] = np.asarray(arr).astype(NUMPY_DTYPES[t.kind])
    return out


def main() -> int:
    rng = np.random.default_rng(20260810)
    corpus = {"format": 1, "schemas": []}
    for decl in DECLARATIONS:
        schema = parse_schema(decl)
        assert canonical_schema_string(schema) == decl
        h = schema_hash(schema)
        entry = {
            "declaration": decl,
            "hash": f"0x{h:016x}",
            "messages": [],
        }
        for i in range(3):
            values = _random_values(schema, rng)
            payload = serialize(values, schema)
            topic = f"/golden/{schema.name.lower()}"
            t_ns = 1_700_000_000_000_000_000 + i
            frame = frame_encode(topic, h, t_ns, payload)
            entry["messages"].append({
                "topic": topic,
                "publish_time_ns": str(t_ns),
                "values": _values_to_json(schema, values),
                "payload_hex": payload.hex(),
                "frame_hex": frame.hex(),
            })
        corpus["schemas"].append(entry)

    out_path = Path(__file__).resolve().parent.parent / "golden" / "corpus.json"
    out_path.parent.mkdir(exist_ok=True)
    out_path.write_text(json.dumps(corpus, indent=1) + "\n")
    print(f"wrote {out_path} ({len(corpus['schemas'])} schemas)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
