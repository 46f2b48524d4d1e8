#!/usr/bin/env python3
"""Fly the default circle trajectory and render polarity-colored event images.

Accumulates events over short windows (20 ms by default) and writes one PNG
per window: positive events red, negative blue, brighter with count.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from evsim.events import accumulate_events_to_image, concat_batches  # noqa: E402
from evsim.sim import SimNode, load_config  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(Path(__file__).resolve().parent.parent
                                            / "configs" / "default.yaml"))
    ap.add_argument("--seconds", type=float, default=2.0)
    ap.add_argument("--window-ms", type=float, default=20.0)
    ap.add_argument("--out", default="events_out")
    args = ap.parse_args()

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cfg = load_config(args.config)
    node = SimNode(cfg)
    ticks = int(args.seconds * cfg.sensor_rate_hz)
    bundles = [node.step_once() for _ in range(ticks)]
    events = concat_batches([b.events for b in bundles])
    print(f"{len(events)} events over {args.seconds}s "
          f"({len(events) / args.seconds:,.0f} ev/s)")

    out_dir = Path(args.out)
    out_dir.mkdir(exist_ok=True)
    window_us = int(args.window_ms * 1000)
    w, h = cfg.camera.width, cfg.camera.height
    t_end = window_us
    idx = 0
    last_t = int(bundles[-1].t_us)
    while t_end <= last_t:
        grid = accumulate_events_to_image(events, window_us, t_end, w, h)
        img = np.zeros((h, w, 3))
        scale = max(1.0, float(np.abs(grid).max()))
        img[..., 0] = np.clip(grid, 0, None) / scale
        img[..., 2] = np.clip(-grid, 0, None) / scale
        plt.imsave(out_dir / f"events_{idx:04d}.png", img)
        idx += 1
        t_end += window_us
    print(f"wrote {idx} images to {out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
