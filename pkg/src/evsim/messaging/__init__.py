"""Typed low-latency pub-sub messaging: schemas, wire frames, discovery, transport."""

from .discovery import (
    DAEMON_ADDR_ENV,
    DEFAULT_DISCOVERY_PORT,
    DiscoveryClient,
    DiscoveryDaemon,
    NodeInfo,
    Publication,
    default_daemon_addr,
)
from .errors import (
    FramingError,
    ProtocolError,
    SchemaError,
    SerializationError,
    TypeMismatchError,
)
from .frame import (
    HEADER_SIZE,
    MAGIC,
    VERSION,
    WireFrame,
    frame_decode,
    frame_decode_prefix,
    frame_encode,
)
from .pubsub import Publisher, SendQueuePolicy, Subscriber, connect_endpoint, make_endpoint
from .schema import (
    ArraySpec,
    FieldSpec,
    MessageSchema,
    canonical_schema_string,
    deserialize,
    fnv1a64,
    parse_schema,
    payload_size,
    schema_hash,
    serialize,
)

__all__ = [
    "ArraySpec",
    "DAEMON_ADDR_ENV",
    "DEFAULT_DISCOVERY_PORT",
    "DiscoveryClient",
    "DiscoveryDaemon",
    "FieldSpec",
    "FramingError",
    "HEADER_SIZE",
    "MAGIC",
    "MessageSchema",
    "NodeInfo",
    "ProtocolError",
    "Publication",
    "Publisher",
    "SchemaError",
    "SendQueuePolicy",
    "SerializationError",
    "Subscriber",
    "TypeMismatchError",
    "VERSION",
    "WireFrame",
    "canonical_schema_string",
    "connect_endpoint",
    "default_daemon_addr",
    "deserialize",
    "fnv1a64",
    "frame_decode",
    "frame_decode_prefix",
    "frame_encode",
    "make_endpoint",
    "parse_schema",
    "payload_size",
    "schema_hash",
    "serialize",
]
