"""Event-camera simulation: contrast-threshold model and parallel aggregation."""

from .model import (
    accumulate_events_to_image,
    generate_events_serial,
    init_pixel_states,
    inject_noise_events,
    limit_bandwidth,
    log_transform,
)
from .parallel import (
    CHUNK_WIDTH,
    AggregationStats,
    ChunkMask,
    ReservationCursor,
    canonical_sort,
    compute_chunk_mask,
    generate_events_parallel,
    reserve_block,
)
from .types import (
    CROSSING_TOL,
    MIN_THRESHOLD,
    DepthFrame,
    Event,
    EventBatch,
    EventCameraConfig,
    IntensityFrame,
    PixelStateGrid,
    concat_batches,
)

__all__ = [
    "AggregationStats",
    "CHUNK_WIDTH",
    "CROSSING_TOL",
    "ChunkMask",
    "DepthFrame",
    "Event",
    "EventBatch",
    "EventCameraConfig",
    "IntensityFrame",
    "MIN_THRESHOLD",
    "PixelStateGrid",
    "ReservationCursor",
    "accumulate_events_to_image",
    "canonical_sort",
    "compute_chunk_mask",
    "concat_batches",
    "generate_events_parallel",
    "generate_events_serial",
    "init_pixel_states",
    "inject_noise_events",
    "limit_bandwidth",
    "log_transform",
    "reserve_block",
]
