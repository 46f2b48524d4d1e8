"""Simulation configuration: dataclasses plus the YAML file format.

One file configures the whole node; see configs/ for complete examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..dynamics import ControllerGains, ImuNoise, Trajectory, VehicleParams, trajectory_from_dict
from ..events.types import EventCameraConfig
from ..render import CameraIntrinsics, SceneSpec, scene_from_dict

# camera z (forward) along body +x, camera x (right) along body -y
FRONT_MOUNT = (-0.5, 0.5, -0.5, 0.5)

DEFAULT_TOPICS = {
    "intensity": "/sim/intensity",
    "depth": "/sim/depth",
    "events": "/sim/events",
    "imu": "/sim/imu",
    "pose": "/sim/pose",
    "cmd": "/sim/cmd",
}


@dataclass
class SimConfig:
    dynamics_rate_hz: int = 1000
    sensor_rate_hz: int = 100
    mode: str = "streaming"  # streaming | lockstep
    pacing: str = "wall_clock"  # wall_clock | free_running
    zoh_timeout_s: float = 0.1  # math.inf allowed
    peer_timeout_s: float = 30.0  # lockstep: max wait for a command publisher
    seed: int = 0
    control: str = "internal"  # internal | external
    event_backend: str = "parallel"  # parallel | serial
    event_workers: int = 2

    camera: CameraIntrinsics = field(default_factory=lambda: CameraIntrinsics(
        fx=60.0, fy=60.0, cx=32.0, cy=24.0, width=64, height=48))
    camera_mount: tuple[float, float, float, float] = FRONT_MOUNT
    event_camera: EventCameraConfig = field(default_factory=EventCameraConfig)
    scene: SceneSpec = field(default_factory=lambda: SceneSpec(planes=()))
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    imu_noise: ImuNoise = field(default_factory=ImuNoise)
    trajectory: Trajectory | None = None
    initial_position: tuple[float, float, float] = (0.0, 0.0, 1.0)

    transport: str = "local"  # data-plane transport: local | tcp
    daemon_host: str = "127.0.0.1"
    daemon_port: int = 7780
    topics: dict = field(default_factory=lambda: dict(DEFAULT_TOPICS))

    def __post_init__(self) -> None:
        if self.dynamics_rate_hz < self.sensor_rate_hz:
            raise ValueError("dynamics_rate_hz must be >= sensor_rate_hz")
        if self.dynamics_rate_hz % self.sensor_rate_hz != 0:
            raise ValueError("dynamics_rate_hz must be divisible by sensor_rate_hz")
        if self.mode not in ("streaming", "lockstep"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.pacing not in ("wall_clock", "free_running"):
            raise ValueError(f"unknown pacing {self.pacing!r}")
        if self.control not in ("internal", "external"):
            raise ValueError(f"unknown control {self.control!r}")
        if self.event_backend not in ("parallel", "serial"):
            raise ValueError(f"unknown event backend {self.event_backend!r}")
        if self.zoh_timeout_s < 0:
            raise ValueError("zoh_timeout_s must be >= 0 (inf allowed)")

    @property
    def substeps(self) -> int:
        return self.dynamics_rate_hz // self.sensor_rate_hz

    @property
    def tick_us(self) -> int:
        return round(1e6 / self.sensor_rate_hz)

    @property
    def dt(self) -> float:
        return 1.0 / self.dynamics_rate_hz

    def daemon_addr(self) -> tuple[str, int]:
        return (self.daemon_host, self.daemon_port)


def _camera_from_dict(d: dict) -> CameraIntrinsics:
    return CameraIntrinsics(fx=float(d["fx"]), fy=float(d["fy"]),
                            cx=float(d["cx"]), cy=float(d["cy"]),
                            width=int(d["width"]), height=int(d["height"]))


def _event_camera_from_dict(d: dict) -> EventCameraConfig:
    return EventCameraConfig(
        c_pos=float(d.get("c_pos", 0.2)),
        c_neg=float(d.get("c_neg", 0.2)),
        sigma_c=float(d.get("sigma_c", 0.0)),
        refractory_us=int(d.get("refractory_us", 0)),
        log_eps=float(d.get("log_eps", 0.01)),
        noise_rate_hz=float(d.get("noise_rate_hz", 0.0)),
        max_events_per_frame=(int(d["max_events_per_frame"])
                              if "max_events_per_frame" in d else None),
    )


def _vehicle_from_dict(d: dict) -> VehicleParams:
    return VehicleParams(
        mass=float(d.get("mass", 1.0)),
        inertia=tuple(float(v) for v in d.get("inertia", (0.01, 0.01, 0.02))),
        arm_length=float(d.get("arm_length", 0.2)),
        k_f=float(d.get("k_f", 1.0e-5)),
        k_m=float(d.get("k_m", 1.0e-7)),
        drag=float(d.get("drag", 0.0)),
        g=float(d.get("g", 9.81)),
    )


def config_from_dict(doc: dict) -> SimConfig:
    sim = doc.get("sim", {})
    zoh = sim.get("zoh_timeout_s", 0.1)
    if isinstance(zoh, str) and zoh.lower() in ("inf", "infinite"):
        zoh = math.inf
    msg = doc.get("messaging", {})
    topics = dict(DEFAULT_TOPICS)
    topics.update(msg.get("topics", {}))
    kwargs = dict(
        dynamics_rate_hz=int(sim.get("dynamics_rate_hz", 1000)),
        sensor_rate_hz=int(sim.get("sensor_rate_hz", 100)),
        mode=sim.get("mode", "streaming"),
        pacing=sim.get("pacing", "wall_clock"),
        zoh_timeout_s=float(zoh),
        peer_timeout_s=float(sim.get("peer_timeout_s", 30.0)),
        seed=int(sim.get("seed", 0)),
        control=sim.get("control", "internal"),
        event_backend=sim.get("event_backend", "parallel"),
        event_workers=int(sim.get("event_workers", 2)),
        transport=msg.get("transport", "local"),
        daemon_host=msg.get("daemon_host", "127.0.0.1"),
        daemon_port=int(msg.get("daemon_port", 7780)),
        topics=topics,
    )
    if "camera" in doc:
        cam = doc["camera"]
        kwargs["camera"] = _camera_from_dict(cam)
        if "mount_quat" in cam:
            kwargs["camera_mount"] = tuple(float(v) for v in cam["mount_quat"])
    if "event_camera" in doc:
        kwargs["event_camera"] = _event_camera_from_dict(doc["event_camera"])
    if "scene" in doc:
        kwargs["scene"] = scene_from_dict(doc["scene"])
    if "vehicle" in doc:
        kwargs["vehicle"] = _vehicle_from_dict(doc["vehicle"])
    if "gains" in doc:
        g = doc["gains"]
        kwargs["gains"] = ControllerGains(kp=float(g.get("kp", 8.0)), kv=float(g.get("kv", 4.0)),
                                          kR=float(g.get("kR", 20.0)), kw=float(g.get("kw", 0.6)))
    if "imu_noise" in doc:
        n = doc["imu_noise"]
        kwargs["imu_noise"] = ImuNoise(
            std_accel=float(n.get("std_accel", 0.0)), std_gyro=float(n.get("std_gyro", 0.0)),
            bias_std_accel=float(n.get("bias_std_accel", 0.0)),
            bias_std_gyro=float(n.get("bias_std_gyro", 0.0)),
            bias_seed=int(n.get("bias_seed", 0)))
    if "trajectory" in doc:
        kwargs["trajectory"] = trajectory_from_dict(doc["trajectory"])
    if "initial_position" in sim:
        kwargs["initial_position"] = tuple(float(v) for v in sim["initial_position"])
    return SimConfig(**kwargs)


def load_config(path: str | Path) -> SimConfig:
    with open(path, "r", encoding="utf-8") as f:
        doc = yaml.safe_load(f) or {}
    return config_from_dict(doc)
