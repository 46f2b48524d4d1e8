"""Reference controllers for closed-loop runs: echo and skip variants.

These subscribe to the pose topic and reply with a hover wrench carrying
the observed step id, which is exactly what lockstep latency measurements
and ZOH-counting tests need.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field

from ..dynamics import ControlCommand, VehicleParams, hover_command
from ..messaging import Publisher, Subscriber
from . import schemas
from .config import DEFAULT_TOPICS


@dataclass
class EchoStats:
    replies: int = 0
    skipped: int = 0
    observations: int = 0
    latencies_s: list[float] = field(default_factory=list)
    t_first_obs: float = 0.0
    t_last_obs: float = 0.0

    def achieved_rate_hz(self) -> float:
        span = self.t_last_obs - self.t_first_obs
        return (self.observations - 1) / span if span > 0 and self.observations > 1 else 0.0


def run_echo_controller(
    daemon_addr: tuple[str, int],
    ticks: int,
    pose_topic: str = DEFAULT_TOPICS["pose"],
    cmd_topic: str = DEFAULT_TOPICS["cmd"],
    skip_every: int = 0,
    rate_hz: float = 0.0,
    transport: str = "local",
    vehicle: VehicleParams | None = None,
    receive_timeout: float = 10.0,
) -> EchoStats:
    """Reply to each observation until ``ticks`` replies-or-skips happen.

    ``skip_every=n`` withholds the reply whenever step_id % n == 0.
    ``rate_hz`` > 0 paces replies on absolute deadlines; the time from
    command send to next observation arrival is recorded per cycle.
    """
    vehicle = vehicle or VehicleParams()
    stats = EchoStats()
    sub = Subscriber(pose_topic, schemas.POSE_SCHEMA, daemon_addr=daemon_addr,
                     poll_interval=0.1)
    if not sub.wait_connected(1, timeout=receive_timeout):
        sub.close()
        raise ConnectionError("echo controller never saw the pose publisher")
    # The command publisher appears only after the pose subscription is
    # confirmed; a lockstep peer can treat it as the ready signal.
    pub = Publisher(cmd_topic, schemas.COMMAND_SCHEMA, daemon_addr=daemon_addr,
                    transport=transport, node_name="echo-controller")
    base = hover_command(vehicle)
    t0 = time.perf_counter()
    sent_at: float | None = None
    try:
        handled = 0
        while handled < ticks:
            v = sub.receive(timeout=receive_timeout)
            if v is None:
                break
            now = time.perf_counter()
            if stats.observations == 0:
                stats.t_first_obs = now
                t0 = now  # pacing baseline: steady-state observation flow
            stats.t_last_obs = now
            stats.observations += 1
            if sent_at is not None:
                stats.latencies_s.append(now - sent_at)
                sent_at = None
            k = int(v["step_id"])
            if skip_every and k % skip_every == 0:
                stats.skipped += 1
                handled += 1
                continue
            if rate_hz > 0:
                deadline = t0 + (handled + 1) / rate_hz
                delay = deadline - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
            cmd = ControlCommand(mode="wrench", thrust=base.thrust, torque=base.torque,
                                 step_id=k, t_cmd=int(v["t_us"]))
            sent_at = time.perf_counter()
            pub.publish(schemas.command_values(cmd))
            stats.replies += 1
            handled += 1
    finally:
        sub.close()
        pub.close()
    return stats


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description="Echo controller for lockstep runs")
    ap.add_argument("--daemon", required=True, help="host:port")
    ap.add_argument("--ticks", type=int, required=True)
    ap.add_argument("--skip-every", type=int, default=0)
    ap.add_argument("--rate", type=float, default=0.0)
    ap.add_argument("--pose-topic", default=DEFAULT_TOPICS["pose"])
    ap.add_argument("--cmd-topic", default=DEFAULT_TOPICS["cmd"])
    args = ap.parse_args(argv)
    host, _, port = args.daemon.rpartition(":")
    stats = run_echo_controller(
        (host or "127.0.0.1", int(port)), args.ticks,
        pose_topic=args.pose_topic, cmd_topic=args.cmd_topic,
        skip_every=args.skip_every, rate_hz=args.rate,
    )
    lat = sorted(stats.latencies_s)
    mean = sum(lat) / len(lat) if lat else 0.0
    print(f"replies={stats.replies} skipped={stats.skipped} "
          f"observations={stats.observations} mean_latency_s={mean:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
