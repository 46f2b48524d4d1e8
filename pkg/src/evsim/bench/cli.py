"""bench command-line entry: events | messaging | closedloop."""

from __future__ import annotations

import argparse
import sys

from .closedloop_bench import bench_closedloop
from .events_bench import bench_events
from .messaging_bench import bench_messaging


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="bench", description="Benchmark harness")
    sub = ap.add_subparsers(dest="which", required=True)

    ev = sub.add_parser("events", help="event-generation latency")
    ev.add_argument("--width", type=int, default=640)
    ev.add_argument("--height", type=int, default=480)
    ev.add_argument("--frames", type=int, default=100)
    ev.add_argument("--backend", choices=["serial", "parallel"], default="parallel")
    ev.add_argument("--workers", type=int, default=2)

    ms = sub.add_parser("messaging", help="pub-sub rate and throughput")
    ms.add_argument("--payload-bytes", type=_int_list, default=[40, 1024, 65536, 1000000])
    ms.add_argument("--duration", type=float, default=3.0)
    ms.add_argument("--subscribers", type=int, default=1)
    ms.add_argument("--transport", choices=["local", "tcp"], default="local")

    cl = sub.add_parser("closedloop", help="lockstep command-to-observation latency")
    cl.add_argument("--rates", type=_float_list, default=[50.0, 100.0, 200.0])
    cl.add_argument("--ticks", type=int, default=300)
    cl.add_argument("--width", type=int, default=64)
    cl.add_argument("--height", type=int, default=48)

    for p in (ev, ms, cl):
        p.add_argument("--json", help="write the full report as JSON")
        p.add_argument("--csv", help="write the sample rows as CSV")

    args = ap.parse_args(argv)
    if args.which == "events":
        report = bench_events(width=args.width, height=args.height, frames=args.frames,
                              backend=args.backend, workers=args.workers)
    elif args.which == "messaging":
        report = bench_messaging(payload_bytes=args.payload_bytes, duration_s=args.duration,
                                 subscribers=args.subscribers, transport=args.transport)
    else:
        report = bench_closedloop(rates_hz=args.rates, ticks=args.ticks,
                                  width=args.width, height=args.height)
    print(report.table())
    report.write(json_path=args.json, csv_path=args.csv)
    return 0


if __name__ == "__main__":
    sys.exit(main())
