"""Closed-loop latency: command sent to next observation received.

A simnode subprocess runs lockstep; an echo controller paced at the target
rate replies to each observation and times the gap to the next one. The
achieved observation rate plateaus once the requested rate exceeds what
simulation plus transport can deliver.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import yaml

from ..messaging import DiscoveryDaemon
from ..sim.controllers import run_echo_controller
from .report import BenchReport, summarize


def _sim_config_doc(width: int, height: int, daemon_port: int, zoh_timeout_s: float) -> dict:
    return {
        "sim": {
            "dynamics_rate_hz": 1000, "sensor_rate_hz": 100, "mode": "lockstep",
            "control": "external", "zoh_timeout_s": zoh_timeout_s, "seed": 0,
            "event_backend": "parallel", "event_workers": 2,
            "initial_position": [0.0, 0.0, 1.0],
        },
        "camera": {"width": width, "height": height, "fx": width * 0.9375,
                   "fy": width * 0.9375, "cx": width / 2.0, "cy": height / 2.0,
                   "mount_quat": [-0.5, 0.5, -0.5, 0.5]},
        "scene": {
            "ambient": 0.15,
            "planes": [{
                "axis": "x", "offset": 4.0, "bounds": [-6.0, 6.0, -2.0, 4.0],
                "texture": {"type": "checker", "cell": 0.5,
                            "intensity_a": 0.2, "intensity_b": 0.9},
            }],
        },
        "vehicle": {"drag": 0.05},
        "messaging": {"transport": "local", "daemon_host": "127.0.0.1",
                      "daemon_port": daemon_port},
    }


def run_lockstep_session(
    ticks: int,
    rate_hz: float = 0.0,
    width: int = 64,
    height: int = 48,
    skip_every: int = 0,
    zoh_timeout_s: float = 1.0,
    daemon: DiscoveryDaemon | None = None,
):
    """Spawn simnode + echo controller; returns (sim report dict, echo stats)."""
    own_daemon = daemon is None
    if own_daemon:
        daemon = DiscoveryDaemon(port=0, lease_ttl=6.0).start()
    tmp = Path(tempfile.mkdtemp(prefix="evsim-bench-"))
    cfg_path = tmp / "sim.yaml"
    report_path = tmp / "report.json"
    cfg_path.write_text(yaml.safe_dump(
        _sim_config_doc(width, height, daemon.port, zoh_timeout_s)))
    proc = subprocess.Popen(
        [sys.executable, "-m", "evsim.sim.cli", "--config", str(cfg_path),
         "--ticks", str(ticks), "--report", str(report_path)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    try:
        stats = run_echo_controller(
            (daemon.host, daemon.port), ticks, skip_every=skip_every, rate_hz=rate_hz,
            receive_timeout=max(30.0, 3 * zoh_timeout_s + 5.0),
        )
        out, err = proc.communicate(timeout=120)
        if proc.returncode != 0:
            raise RuntimeError(f"simnode failed (rc={proc.returncode}): {err[-2000:]}")
        sim_report = json.loads(report_path.read_text())
    finally:
        if proc.poll() is None:
            proc.kill()
        if own_daemon:
            daemon.stop()
    return sim_report, stats


def bench_closedloop(
    rates_hz: list[float],
    ticks: int = 300,
    width: int = 64,
    height: int = 48,
) -> BenchReport:
    """Latency and achieved observation rate at each requested controller rate."""
    report = BenchReport(
        name="closedloop",
        parameters={"rates_hz": list(rates_hz), "ticks": ticks,
                    "width": width, "height": height},
        units={"latency_s": "s", "achieved_rate_hz": "Hz"},
    )
    daemon = DiscoveryDaemon(port=0, lease_ttl=6.0).start()
    try:
        for rate in rates_hz:
            sim_report, stats = run_lockstep_session(
                ticks=ticks, rate_hz=rate, width=width, height=height, daemon=daemon)
            lat = summarize(stats.latencies_s) if stats.latencies_s else {
                "mean": float("nan"), "median": float("nan"), "p99": float("nan")}
            report.samples.append({
                "requested_rate_hz": rate,
                "achieved_rate_hz": stats.achieved_rate_hz(),
                "latency_s": lat["mean"],
                "latency_p99_s": lat["p99"],
                "zoh_activations": sim_report["zoh_activations"],
                "observations": stats.observations,
            })
    finally:
        daemon.stop()
    return report.finalize(["latency_s", "achieved_rate_hz"])
