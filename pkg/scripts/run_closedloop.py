#!/usr/bin/env python3
"""Spawn a lockstep simnode plus echo controller and print latency stats."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from evsim.bench import run_lockstep_session, summarize  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ticks", type=int, default=500)
    ap.add_argument("--rate", type=float, default=100.0)
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--height", type=int, default=48)
    ap.add_argument("--skip-every", type=int, default=0)
    args = ap.parse_args()

    sim_report, stats = run_lockstep_session(
        ticks=args.ticks, rate_hz=args.rate, width=args.width, height=args.height,
        skip_every=args.skip_every,
    )
    lat = summarize(stats.latencies_s) if stats.latencies_s else None
    print(f"ticks={sim_report['ticks']} zoh={sim_report['zoh_activations']} "
          f"stale={sim_report['stale_discarded']} observations={stats.observations}")
    if lat:
        print(f"latency mean={lat['mean'] * 1e3:.3f} ms median={lat['median'] * 1e3:.3f} ms "
              f"p99={lat['p99'] * 1e3:.3f} ms; achieved {stats.achieved_rate_hz():.1f} Hz")
    return 0


if __name__ == "__main__":
    sys.exit(main())
