"""Shared test utilities: log-space frame construction and state builders."""

from __future__ import annotations

import numpy as np

from evsim.events.types import EventCameraConfig, IntensityFrame, PixelStateGrid


def frame_from_log(log_vals: np.ndarray, t: int, log_eps: float = 0.01) -> IntensityFrame:
    """Frame whose log-transform equals ``log_vals`` (up to float32 storage)."""
    vals = np.exp(np.asarray(log_vals, np.float64)) - log_eps
    h, w = vals.shape
    return IntensityFrame(width=w, height=h, t=t,
                          values=np.clip(vals, 0.0, 1.0).astype(np.float32))


def single_pixel_state(
    ref_log: float,
    c_pos: float = 0.2,
    c_neg: float = 0.2,
    last_event_t: int = -10**9,
) -> PixelStateGrid:
    return PixelStateGrid(
        width=1, height=1,
        ref_log=np.full((1, 1), ref_log, np.float32),
        last_event_t=np.full((1, 1), last_event_t, np.int64),
        thresholds_pos=np.full((1, 1), c_pos, np.float32),
        thresholds_neg=np.full((1, 1), c_neg, np.float32),
    )


def random_walk_sequence(
    rng: np.random.Generator,
    width: int,
    height: int,
    frames: int,
    step_std: float = 0.08,
    lo: float = -4.0,
    hi: float = -0.1,
    tick_us: int = 10000,
) -> list[IntensityFrame]:
    """Random-walk log-intensity frames, first frame at t=0."""
    L = rng.uniform(lo + 1.0, hi - 1.0, (height, width))
    out = [frame_from_log(L, 0)]
    for k in range(1, frames):
        L = np.clip(L + rng.normal(0.0, step_std, (height, width)), lo, hi)
        out.append(frame_from_log(L, k * tick_us))
    return out


def quiet_config(**kwargs) -> EventCameraConfig:
    return EventCameraConfig(**kwargs)
