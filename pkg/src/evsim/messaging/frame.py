"""Wire frame layout: topic prefix + fixed 32-byte header + payload.

Layout (all integers little-endian):
  u8          topic length (topic <= 255 UTF-8 bytes)
  bytes       topic
  4 bytes     magic "CTX1"
  u8          version (1)
  u8          flags
  u16         reserved (0)
  u64         schema hash
  u64         publish time, nanoseconds
  u64         payload length
  bytes       payload
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import FramingError, ProtocolError

MAGIC = b"CTX1"
VERSION = 1
HEADER = struct.Struct("<4sBBHQQQ")
HEADER_SIZE = HEADER.size  # 32
MAX_TOPIC_BYTES = 255


@dataclass
class WireFrame:
    topic: str
    schema_hash: int
    publish_time_ns: int
    payload: bytes | memoryview
    flags: int = 0


def frame_encode(
    topic: str, schema_hash: int, publish_time_ns: int, payload: bytes, flags: int = 0
) -> bytes:
    """Encode one frame to bytes."""
    traw = topic.encode("utf-8")
    if len(traw) > MAX_TOPIC_BYTES:
        raise ValueError(f"topic exceeds {MAX_TOPIC_BYTES} UTF-8 bytes: {topic!r}")
    header = HEADER.pack(MAGIC, VERSION, flags, 0, schema_hash, publish_time_ns, len(payload))
    return bytes([len(traw)]) + traw + header + payload


def frame_decode(buf: bytes | memoryview) -> WireFrame:
    """Decode exactly one frame; trailing bytes are an error."""
    frame, consumed = frame_decode_prefix(buf)
    if frame is None:
        raise FramingError("incomplete frame")
    if consumed != len(buf):
        raise FramingError(f"{len(buf) - consumed} trailing bytes after frame")
    return frame


@dataclass
class FrameHeader:
    """Parsed topic + fixed header of a frame (payload not yet consumed)."""

    topic: str
    flags: int
    schema_hash: int
    publish_time_ns: int
    payload_len: int
    header_size: int  # bytes up to the start of the payload


def frame_header_prefix(buf, off: int = 0) -> FrameHeader | None:
    """Parse the topic + header at ``buf[off:]`` without copying the payload.

    Returns None when more bytes are needed; raises ProtocolError on bad
    magic or version. Used by stream readers to dimension payload reads.
    """
    n = len(buf) - off
    if n < 1:
        return None
    tlen = buf[off]
    header_size = 1 + tlen + HEADER_SIZE
    if n < header_size:
        return None
    magic, version, flags, _reserved, shash, t_ns, plen = HEADER.unpack_from(buf, off + 1 + tlen)
    if magic != MAGIC:
        raise ProtocolError(f"bad frame magic {bytes(magic)!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported frame version {version}")
    topic = bytes(buf[off + 1:off + 1 + tlen]).decode("utf-8")
    return FrameHeader(
        topic=topic, flags=flags, schema_hash=shash, publish_time_ns=t_ns,
        payload_len=plen, header_size=header_size,
    )


def frame_decode_prefix(buf: bytes | memoryview) -> tuple[WireFrame | None, int]:
    """Try to decode a frame from the start of ``buf``.

    Returns (frame, bytes_consumed), or (None, 0) when more bytes are needed.
    Raises on structurally invalid data so stream readers fail fast.
    """
    view = memoryview(buf)
    n = len(view)
    if n < 1:
        return None, 0
    tlen = view[0]
    head_end = 1 + tlen + HEADER_SIZE
    if n < head_end:
        return None, 0
    magic, version, flags, _reserved, shash, t_ns, plen = HEADER.unpack_from(view, 1 + tlen)
    if magic != MAGIC:
        raise ProtocolError(f"bad frame magic {bytes(magic)!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported frame version {version}")
    total = head_end + plen
    if n < total:
        return None, 0
    topic = bytes(view[1:1 + tlen]).decode("utf-8")
    payload = view[head_end:total]
    return WireFrame(
        topic=topic, schema_hash=shash, publish_time_ns=t_ns, payload=payload, flags=flags
    ), total
