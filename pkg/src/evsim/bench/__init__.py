"""Benchmark harness: event simulation, messaging, and closed-loop latency."""

from .closedloop_bench import bench_closedloop, run_lockstep_session
from .events_bench import bench_events
from .messaging_bench import bench_messaging
from .report import BenchReport, host_fingerprint, summarize

__all__ = [
    "BenchReport",
    "bench_closedloop",
    "bench_events",
    "bench_messaging",
    "host_fingerprint",
    "run_lockstep_session",
    "summarize",
]
