"""Core event-camera data types.

Time is integer microseconds everywhere. Event batches are stored as
structure-of-arrays for cheap slicing and serialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

# Effective per-pixel contrast thresholds are clamped to this floor so that
# jitter cannot produce near-zero thresholds (which would emit unbounded
# event counts for tiny intensity changes).
MIN_THRESHOLD = 0.01

# Threshold-crossing comparisons tolerate this fraction of a threshold to
# absorb float32 state rounding; without it, a ramp of exactly k thresholds
# can emit k-1 events depending on how it is split across frames.
CROSSING_TOL = 1e-4


class Event(NamedTuple):
    """A single polarity event: log intensity at (x, y) crossed a threshold."""

    t: int
    x: int
    y: int
    polarity: int


@dataclass
class EventBatch:
    """A batch of events plus the count discarded by capacity/bandwidth limits."""

    t: np.ndarray  # uint64, microseconds
    x: np.ndarray  # uint16
    y: np.ndarray  # uint16
    polarity: np.ndarray  # int8, +1 or -1
    dropped_count: int = 0

    @staticmethod
    def empty(dropped_count: int = 0) -> "EventBatch":
        return EventBatch(
            t=np.empty(0, np.uint64),
            x=np.empty(0, np.uint16),
            y=np.empty(0, np.uint16),
            polarity=np.empty(0, np.int8),
            dropped_count=dropped_count,
        )

    @staticmethod
    def from_events(events: list[Event], dropped_count: int = 0) -> "EventBatch":
        return EventBatch(
            t=np.array([e.t for e in events], np.uint64),
            x=np.array([e.x for e in events], np.uint16),
            y=np.array([e.y for e in events], np.uint16),
            polarity=np.array([e.polarity for e in events], np.int8),
            dropped_count=dropped_count,
        )

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self.t)):
            yield Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.polarity[i]))

    def same_events(self, other: "EventBatch") -> bool:
        """Exact elementwise equality of the event arrays (order-sensitive)."""
        return (
            len(self) == len(other)
            and bool(np.array_equal(self.t, other.t))
            and bool(np.array_equal(self.x, other.x))
            and bool(np.array_equal(self.y, other.y))
            and bool(np.array_equal(self.polarity, other.polarity))
        )


def concat_batches(batches: list[EventBatch]) -> EventBatch:
    """Concatenate batches in order; dropped counts add."""
    if not batches:
        return EventBatch.empty()
    return EventBatch(
        t=np.concatenate([b.t for b in batches]),
        x=np.concatenate([b.x for b in batches]),
        y=np.concatenate([b.y for b in batches]),
        polarity=np.concatenate([b.polarity for b in batches]),
        dropped_count=sum(b.dropped_count for b in batches),
    )


@dataclass
class IntensityFrame:
    """Linear intensity image in [0, 1], row-major, with a microsecond timestamp."""

    width: int
    height: int
    t: int
    values: np.ndarray  # float32, shape (height, width)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, np.float32)
        if self.values.shape != (self.height, self.width):
            raise ValueError(
                f"frame values shape {self.values.shape} != (height={self.height}, width={self.width})"
            )


@dataclass
class DepthFrame:
    """Per-pixel z-depth in meters; misses are +inf."""

    width: int
    height: int
    t: int
    values: np.ndarray  # float32, shape (height, width)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, np.float32)
        if self.values.shape != (self.height, self.width):
            raise ValueError(
                f"depth values shape {self.values.shape} != (height={self.height}, width={self.width})"
            )


@dataclass
class EventCameraConfig:
    """Contrast-threshold sensor parameters and non-ideality knobs."""

    c_pos: float = 0.2
    c_neg: float = 0.2
    sigma_c: float = 0.0
    refractory_us: int = 0
    log_eps: float = 0.01
    noise_rate_hz: float = 0.0
    max_events_per_frame: int | None = None  # None -> 8 * width * height

    def __post_init__(self) -> None:
        if self.c_pos <= 0 or self.c_neg <= 0:
            raise ValueError("contrast thresholds must be positive")
        if self.log_eps <= 0:
            raise ValueError("log_eps must be positive")
        if self.refractory_us < 0:
            raise ValueError("refractory_us must be >= 0")
        if self.noise_rate_hz < 0:
            raise ValueError("noise_rate_hz must be >= 0")
        if self.sigma_c < 0:
            raise ValueError("sigma_c must be >= 0")

    def capacity(self, width: int, height: int) -> int:
        if self.max_events_per_frame is not None:
            return self.max_events_per_frame
        return 8 * width * height


@dataclass
class PixelStateGrid:
    """Per-pixel sensor state: reference log intensity, last event time, thresholds."""

    width: int
    height: int
    ref_log: np.ndarray = field(repr=False)  # float32 (h, w)
    last_event_t: np.ndarray = field(repr=False)  # int64 (h, w), microseconds
    thresholds_pos: np.ndarray = field(repr=False)  # float32 (h, w)
    thresholds_neg: np.ndarray = field(repr=False)  # float32 (h, w)

    def copy(self) -> "PixelStateGrid":
        return PixelStateGrid(
            width=self.width,
            height=self.height,
            ref_log=self.ref_log.copy(),
            last_event_t=self.last_event_t.copy(),
            thresholds_pos=self.thresholds_pos.copy(),
            thresholds_neg=self.thresholds_neg.copy(),
        )
