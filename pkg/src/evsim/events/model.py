"""Contrast-threshold event generation: the serial reference model.

A pixel keeps the log intensity of its last event (``ref_log``). When a new
frame moves the pixel's log intensity by at least one effective threshold,
events are emitted at times interpolated linearly in log intensity between
the two frame timestamps, and the reference advances by whole thresholds
(sub-threshold residuals persist across frames).

The arithmetic here is the definition of the model: the chunk-parallel
backend in :mod:`evsim.events.parallel` must reproduce these event streams
exactly (same counts, timestamps, polarities, and final state).
"""

from __future__ import annotations

import numpy as np

from .types import (
    CROSSING_TOL,
    MIN_THRESHOLD,
    EventBatch,
    EventCameraConfig,
    IntensityFrame,
    PixelStateGrid,
)


def log_transform(frame: IntensityFrame, log_eps: float) -> np.ndarray:
    """Per-pixel ln(I + log_eps) as float64; validates the frame."""
    if log_eps <= 0:
        raise ValueError("log_eps must be positive")
    vals = frame.values
    bad = ~np.isfinite(vals) | (vals < 0.0) | (vals > 1.0)
    if bad.any():
        yy, xx = np.nonzero(bad)
        raise ValueError(
            f"invalid intensity {vals[yy[0], xx[0]]!r} at pixel (x={xx[0]}, y={yy[0]})"
        )
    return np.log(vals.astype(np.float64) + log_eps)


def init_pixel_states(
    frame0: IntensityFrame, config: EventCameraConfig, seed: int
) -> PixelStateGrid:
    """Initial per-pixel state from the first frame.

    ``last_event_t`` is backdated by the refractory period so that the first
    frame interval is never refractory-blocked. Thresholds are jittered
    per pixel and per polarity with ``Normal(c, sigma_c^2)``, clamped to
    ``MIN_THRESHOLD``; a fixed seed gives identical grids.
    """
    h, w = frame0.height, frame0.width
    ref = log_transform(frame0, config.log_eps).astype(np.float32)
    rng = np.random.default_rng(seed)
    if config.sigma_c > 0:
        thp = rng.normal(config.c_pos, config.sigma_c, size=(h, w))
        thn = rng.normal(config.c_neg, config.sigma_c, size=(h, w))
    else:
        thp = np.full((h, w), config.c_pos)
        thn = np.full((h, w), config.c_neg)
    thp = np.maximum(thp, MIN_THRESHOLD).astype(np.float32)
    thn = np.maximum(thn, MIN_THRESHOLD).astype(np.float32)
    last_t = np.full((h, w), int(frame0.t) - int(config.refractory_us), np.int64)
    return PixelStateGrid(
        width=w, height=h, ref_log=ref, last_event_t=last_t,
        thresholds_pos=thp, thresholds_neg=thn,
    )


def _check_step(state: PixelStateGrid, frame: IntensityFrame, t_prev: int, t_now: int) -> None:
    if frame.width != state.width or frame.height != state.height:
        raise ValueError(
            f"frame {frame.width}x{frame.height} does not match state {state.width}x{state.height}"
        )
    if t_now <= t_prev:
        raise ValueError(f"t_now ({t_now}) must be greater than t_prev ({t_prev})")


def generate_events_serial(
    state: PixelStateGrid,
    frame: IntensityFrame,
    t_prev: int,
    t_now: int,
    config: EventCameraConfig,
) -> EventBatch:
    """Reference event generator: plain per-pixel loop, pixel-major emission.

    Per pixel, with ``L_start = ref_log`` and ``L_new = ln(I + log_eps)``:
    the number of crossings is ``n = floor(|L_new - L_start| / th + tol)``
    and the j-th event time is ``t_prev + floor((j*th/|diff|) * dt)``,
    clamped into ``[t_prev, t_now - 1]``. Events closer than the refractory
    period to the pixel's last kept event are discarded; the reference level
    advances to the last crossed level either way. Over the frame capacity,
    later events (emission order) are dropped and counted.

    Mutates ``state`` in place.
    """
    _check_step(state, frame, t_prev, t_now)
    lnew = log_transform(frame, config.log_eps)
    h, w = state.height, state.width
    npix = h * w
    dt_us = int(t_now) - int(t_prev)
    cap = config.capacity(w, h)
    refr = int(config.refractory_us)

    # Plain Python lists keep the per-pixel loop honest and fast enough.
    lnew_l = lnew.ravel().tolist()
    ref_l = state.ref_log.astype(np.float64).ravel().tolist()
    thp_l = state.thresholds_pos.astype(np.float64).ravel().tolist()
    thn_l = state.thresholds_neg.astype(np.float64).ravel().tolist()
    last_l = state.last_event_t.ravel().tolist()

    ref_flat = state.ref_log.ravel()
    last_flat = state.last_event_t.ravel()

    ts: list[int] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    emitted = 0
    dropped = 0
    t_rel_max = dt_us - 1

    for i in range(npix):
        l_start = ref_l[i]
        diff = lnew_l[i] - l_start
        if diff > 0.0:
            th = thp_l[i]
            pol = 1
            adiff = diff
        elif diff < 0.0:
            th = thn_l[i]
            pol = -1
            adiff = -diff
        else:
            continue
        n = int(adiff / th + CROSSING_TOL)
        if n == 0:
            continue
        x = i % w
        y = i // w
        last = last_l[i]
        for j in range(1, n + 1):
            t_rel = int(((j * th) / adiff) * dt_us)
            if t_rel > t_rel_max:
                t_rel = t_rel_max
            t_abs = t_prev + t_rel
            if refr and t_abs - last < refr:
                continue  # refractory: discard, reference still advances
            last = t_abs
            if emitted < cap:
                ts.append(t_abs)
                xs.append(x)
                ys.append(y)
                ps.append(pol)
            else:
                dropped += 1
            emitted += 1
        if pol == 1:
            ref_flat[i] = l_start + n * th
        else:
            ref_flat[i] = l_start - n * th
        last_flat[i] = last

    return EventBatch(
        t=np.array(ts, np.uint64),
        x=np.array(xs, np.uint16),
        y=np.array(ys, np.uint16),
        polarity=np.array(ps, np.int8),
        dropped_count=dropped,
    )


def inject_noise_events(
    width: int,
    height: int,
    t_prev: int,
    t_now: int,
    noise_rate_hz: float,
    seed: int,
) -> EventBatch:
    """Background noise: per pixel Poisson(rate * dt) events at uniform times.

    Polarity is uniform in {+1, -1}; output is pixel-major with timestamps
    non-decreasing within each pixel. Deterministic for a fixed seed.
    """
    if noise_rate_hz < 0:
        raise ValueError("noise_rate_hz must be >= 0")
    if t_now <= t_prev:
        raise ValueError(f"t_now ({t_now}) must be greater than t_prev ({t_prev})")
    if noise_rate_hz == 0:
        return EventBatch.empty()
    dt_us = int(t_now) - int(t_prev)
    rng = np.random.default_rng(seed)
    lam = noise_rate_hz * (dt_us * 1e-6)
    counts = rng.poisson(lam, size=width * height)
    total = int(counts.sum())
    if total == 0:
        return EventBatch.empty()
    pix = np.repeat(np.arange(width * height, dtype=np.int64), counts)
    t_rel = np.floor(rng.random(total) * dt_us).astype(np.int64)
    pol = (rng.integers(0, 2, size=total, dtype=np.int8) * 2 - 1).astype(np.int8)
    order = np.lexsort((t_rel, pix))
    pix = pix[order]
    t_rel = t_rel[order]
    pol = pol[order]
    return EventBatch(
        t=(t_prev + t_rel).astype(np.uint64),
        x=(pix % width).astype(np.uint16),
        y=(pix // width).astype(np.uint16),
        polarity=pol,
    )


def limit_bandwidth(
    batch: EventBatch, max_events_per_sec: float, window_us: int
) -> EventBatch:
    """Sensor readout saturation: cap events per time window, earliest first.

    Windows of ``window_us`` tile forward from the first event's timestamp;
    each retains at most ``floor(max_events_per_sec * window)`` events.
    Input must be sorted by timestamp.
    """
    if window_us <= 0:
        raise ValueError("window_us must be positive")
    if max_events_per_sec < 0:
        raise ValueError("max_events_per_sec must be >= 0")
    if len(batch) == 0:
        return EventBatch.empty(dropped_count=batch.dropped_count)
    t = batch.t.astype(np.int64)
    if np.any(np.diff(t) < 0):
        raise ValueError("limit_bandwidth requires a timestamp-sorted batch")
    cap = int(max_events_per_sec * window_us * 1e-6)
    win = (t - t[0]) // window_us
    # rank of each event within its window (input is sorted, windows contiguous)
    starts = np.searchsorted(win, np.unique(win), side="left")
    rank = np.arange(len(t)) - np.repeat(starts, np.diff(np.append(starts, len(t))))
    keep = rank < cap
    n_drop = int((~keep).sum())
    return EventBatch(
        t=batch.t[keep],
        x=batch.x[keep],
        y=batch.y[keep],
        polarity=batch.polarity[keep],
        dropped_count=batch.dropped_count + n_drop,
    )


def accumulate_events_to_image(
    batch: EventBatch, window_us: int, t_end: int, width: int, height: int
) -> np.ndarray:
    """Signed per-pixel polarity sum over events with t in [t_end - window, t_end)."""
    if len(batch) and (int(batch.x.max()) >= width or int(batch.y.max()) >= height):
        raise ValueError("event coordinates out of bounds for the given dimensions")
    grid = np.zeros((height, width), np.int64)
    if len(batch) == 0:
        return grid
    t = batch.t.astype(np.int64)
    mask = (t >= t_end - window_us) & (t < t_end)
    np.add.at(grid, (batch.y[mask].astype(np.int64), batch.x[mask].astype(np.int64)),
              batch.polarity[mask].astype(np.int64))
    return grid
