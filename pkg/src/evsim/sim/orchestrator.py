"""The simulator node: dynamics, rendering, and event generation in a tick
loop, published over the message bus in streaming or lockstep mode.

A tick advances the vehicle by ``dynamics_rate/sensor_rate`` substeps using
the newest control command (held under zeroth-order hold when none is
fresh), renders intensity and depth at the new pose, generates events over
the elapsed interval, and bundles everything under one step id.
"""

from __future__ import annotations

import json
import logging
import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import (
    ControlCommand,
    ImuSample,
    VehicleState,
    eval_trajectory,
    hover_command,
    quat,
    sample_imu,
    se3_controller,
    step_dynamics,
)
from ..events import (
    AggregationStats,
    EventBatch,
    canonical_sort,
    concat_batches,
    generate_events_parallel,
    generate_events_serial,
    init_pixel_states,
    inject_noise_events,
)
from ..events.types import DepthFrame, IntensityFrame
from ..messaging import Publisher, Subscriber, TypeMismatchError
from ..render import Pose, render_pair
from . import schemas
from .config import SimConfig

logger = logging.getLogger(__name__)


def _mix64(*parts: int) -> int:
    h = 0xCBF29CE484222325
    for p in parts:
        h ^= p & 0xFFFFFFFFFFFFFFFF
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass
class CommandCache:
    """Last received command; initialized to hover so ZOH never free-falls."""

    last_command: ControlCommand
    t_received: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def store(self, cmd: ControlCommand, now_us: int) -> None:
        with self._lock:
            self.last_command = cmd
            self.t_received = now_us

    def snapshot(self) -> tuple[ControlCommand, int]:
        with self._lock:
            return self.last_command, self.t_received


def apply_zoh(cache: CommandCache, now_us: int) -> tuple[ControlCommand, int]:
    """Zeroth-order hold: the most recent command plus its age for diagnostics."""
    cmd, t_recv = cache.snapshot()
    return cmd, now_us - t_recv


@dataclass
class ObservationBundle:
    step_id: int
    t_us: int
    intensity: IntensityFrame
    depth: DepthFrame
    events: EventBatch
    imu: list[ImuSample]
    state: VehicleState


@dataclass
class RunReport:
    mode: str
    ticks: int = 0
    zoh_activations: int = 0
    stale_discarded: int = 0
    duration_s: float = 0.0
    achieved_rate_hz: float = 0.0
    dropped_frames: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


class SimNode:
    """Owns vehicle, sensor, and pixel state; one instance per simulation."""

    def __init__(self, config: SimConfig):
        self.cfg = config
        if config.control == "internal" and config.trajectory is None:
            raise ValueError("internal control requires a trajectory")
        self.step_id = 0
        self.zoh_activations = 0
        if config.trajectory is not None:
            ref0 = eval_trajectory(config.trajectory, 0.0)
            p0 = ref0.pos
        else:
            p0 = np.asarray(config.initial_position, np.float64)
        self.state = VehicleState(p=p0, t=0)
        self.cache = CommandCache(hover_command(config.vehicle))
        frame0, _ = render_pair(config.scene, self._camera_pose(), config.camera, t=0)
        self.pix_state = init_pixel_states(frame0, config.event_camera,
                                           seed=_mix64(config.seed, 0x70697865))
        self.prev_frame_t = 0
        self.last_event_stats = AggregationStats()

    # -- core tick ----------------------------------------------------------

    def _camera_pose(self) -> Pose:
        q_wc = quat.multiply(self.state.q, self.cfg.camera_mount)
        return Pose(position=tuple(self.state.p), orientation=quat.normalize(q_wc))

    def _substep_command(self, k: int, i: int, t_target_s: float) -> ControlCommand:
        if self.cfg.control == "internal":
            ref = eval_trajectory(self.cfg.trajectory, t_target_s)
            return se3_controller(self.state, ref, self.cfg.gains, self.cfg.vehicle, step_id=k)
        cmd, _age = apply_zoh(self.cache, self.state.t)
        return cmd

    def step_once(self) -> ObservationBundle:
        cfg = self.cfg
        k = self.step_id
        tick_us = cfg.tick_us
        t_k = (k + 1) * tick_us
        dt = cfg.dt
        imu: list[ImuSample] = []
        for i in range(cfg.substeps):
            t_target = (k * tick_us + (i + 1) * tick_us / cfg.substeps) * 1e-6
            cmd = self._substep_command(k, i, t_target)
            v_old = self.state.v
            self.state = step_dynamics(self.state, cmd, dt, cfg.vehicle)
            accel_world = (self.state.v - v_old) / dt
            imu.append(sample_imu(self.state, accel_world, cfg.imu_noise,
                                  seed=_mix64(cfg.seed, 0x696D75, k * cfg.substeps + i)))
        frame, depth = render_pair(cfg.scene, self._camera_pose(), cfg.camera, t=t_k)
        stats = AggregationStats()
        if cfg.event_backend == "parallel":
            events = generate_events_parallel(
                self.pix_state, frame, self.prev_frame_t, t_k, cfg.event_camera,
                workers=cfg.event_workers, stats=stats)
        else:
            events = generate_events_serial(
                self.pix_state, frame, self.prev_frame_t, t_k, cfg.event_camera)
        if cfg.event_camera.noise_rate_hz > 0:
            noise = inject_noise_events(
                cfg.camera.width, cfg.camera.height, self.prev_frame_t, t_k,
                cfg.event_camera.noise_rate_hz, seed=_mix64(cfg.seed, 0x6E6F6973, k))
            events = concat_batches([events, noise])
        events = canonical_sort(events)
        self.last_event_stats = stats
        self.prev_frame_t = t_k
        self.step_id += 1
        return ObservationBundle(step_id=k, t_us=t_k, intensity=frame, depth=depth,
                                 events=events, imu=imu, state=self.state)

    # -- networked runs -------------------------------------------------------

    def _make_publishers(self) -> dict[str, Publisher]:
        pubs = {}
        for key in ("intensity", "depth", "events", "imu", "pose"):
            pubs[key] = Publisher(
                self.cfg.topics[key], schemas.TOPIC_SCHEMAS[key],
                daemon_addr=self.cfg.daemon_addr(), transport=self.cfg.transport,
                node_name=f"simnode-{key}",
            )
        return pubs

    def _publish_bundle(self, pubs: dict[str, Publisher], b: ObservationBundle) -> int:
        t_ns = b.t_us * 1000
        dropped = 0
        dropped += pubs["intensity"].publish(schemas.frame_values(b.step_id, b.intensity), t_ns)
        dropped += pubs["depth"].publish(schemas.frame_values(b.step_id, b.depth), t_ns)
        dropped += pubs["events"].publish(schemas.events_values(b.step_id, b.t_us, b.events), t_ns)
        dropped += pubs["imu"].publish(schemas.imu_values(b.step_id, b.imu), t_ns)
        # pose last: a controller keyed on pose has then seen the full bundle
        dropped += pubs["pose"].publish(schemas.pose_values(b.step_id, b.t_us, b.state), t_ns)
        return dropped

    def run_streaming(self, ticks: int | None = None,
                      stop: threading.Event | None = None) -> RunReport:
        """Free-running or wall-clock-paced publishing; commands arrive async."""
        cfg = self.cfg
        pubs = self._make_publishers()
        sub = Subscriber(cfg.topics["cmd"], schemas.COMMAND_SCHEMA,
                         daemon_addr=cfg.daemon_addr(), poll_interval=0.25)
        report = RunReport(mode="streaming")
        stop = stop or threading.Event()

        def ingest() -> None:
            while not stop.is_set():
                try:
                    v = sub.receive(timeout=0.1)
                except TypeMismatchError:
                    continue
                if v is not None:
                    self.cache.store(schemas.command_from_values(v), self.state.t)

        ingest_thread = None
        if cfg.control == "external":
            ingest_thread = threading.Thread(target=ingest, daemon=True)
            ingest_thread.start()
        t0 = time.perf_counter()
        tick_s = 1.0 / cfg.sensor_rate_hz
        try:
            k = 0
            while (ticks is None or k < ticks) and not stop.is_set():
                if cfg.pacing == "wall_clock":
                    deadline = t0 + (k + 1) * tick_s
                    delay = deadline - time.perf_counter()
                    if delay > 0:
                        time.sleep(delay)
                bundle = self.step_once()
                report.dropped_frames += self._publish_bundle(pubs, bundle)
                report.ticks += 1
                k += 1
        finally:
            stop.set()
            report.duration_s = time.perf_counter() - t0
            if report.duration_s > 0:
                report.achieved_rate_hz = report.ticks / report.duration_s
            if ingest_thread is not None:
                ingest_thread.join(timeout=1.0)
            for p in pubs.values():
                p.close()
            sub.close()
        return report

    def run_lockstep(self, ticks: int, stop: threading.Event | None = None) -> RunReport:
        """Publish step k, wait for the step-k command, hold on timeout.

        Stale replies (step id below the current tick) are discarded; the
        accepted or held command drives tick k+1.
        """
        cfg = self.cfg
        if cfg.control != "external":
            raise ValueError("lockstep mode requires external control")
        pubs = self._make_publishers()
        sub = Subscriber(cfg.topics["cmd"], schemas.COMMAND_SCHEMA,
                         daemon_addr=cfg.daemon_addr(), poll_interval=0.25)
        report = RunReport(mode="lockstep")
        stop = stop or threading.Event()
        # Wait for the controller's command publisher before tick 0 so the
        # first observation cannot be lost to the slow-joiner window.
        sync_deadline = time.monotonic() + cfg.peer_timeout_s
        while not stop.is_set() and time.monotonic() < sync_deadline:
            if sub.wait_connected(1, timeout=0.05):
                break
        t0 = time.perf_counter()
        try:
            for k in range(ticks):
                if stop.is_set():
                    break
                bundle = self.step_once()
                report.dropped_frames += self._publish_bundle(pubs, bundle)
                report.ticks += 1
                deadline = (None if math.isinf(cfg.zoh_timeout_s)
                            else time.monotonic() + cfg.zoh_timeout_s)
                got_reply = False
                while True:
                    timeout = None if deadline is None else max(deadline - time.monotonic(), 0.0)
                    if timeout == 0.0:
                        break
                    try:
                        v = sub.receive(timeout=timeout)
                    except TypeMismatchError:
                        continue
                    if v is None:
                        break
                    cmd = schemas.command_from_values(v)
                    if cmd.step_id == k:
                        self.cache.store(cmd, self.state.t)
                        got_reply = True
                        break
                    report.stale_discarded += 1
                    logger.debug("discarding command with step_id %d at tick %d", cmd.step_id, k)
                if not got_reply:
                    self.zoh_activations += 1
                    report.zoh_activations += 1
        finally:
            stop.set()
            report.duration_s = time.perf_counter() - t0
            if report.duration_s > 0:
                report.achieved_rate_hz = report.ticks / report.duration_s
            for p in pubs.values():
                p.close()
            sub.close()
        return report
