"""Parametric reference trajectories with analytic derivatives.

Outside its time domain a trajectory clamps to a hover at the nearest
endpoint (zero velocity and acceleration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass
class TrajectoryRef:
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    yaw: float = 0.0
    yaw_rate: float = 0.0

    def __post_init__(self) -> None:
        self.pos = np.asarray(self.pos, np.float64)
        self.vel = np.asarray(self.vel, np.float64)
        self.acc = np.asarray(self.acc, np.float64)


def _hover_ref(pos, yaw: float = 0.0) -> TrajectoryRef:
    return TrajectoryRef(pos=np.asarray(pos, np.float64), vel=np.zeros(3),
                         acc=np.zeros(3), yaw=yaw, yaw_rate=0.0)


@dataclass(frozen=True)
class Hover:
    point: tuple[float, float, float]
    yaw: float = 0.0


@dataclass(frozen=True)
class Line:
    """Constant-velocity segment from start to end over [0, duration]."""

    start: tuple[float, float, float]
    end: tuple[float, float, float]
    duration: float
    yaw: float = 0.0

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("line duration must be positive")


@dataclass(frozen=True)
class Circle:
    """Horizontal circle at constant angular rate; yaw tracks the tangent."""

    center: tuple[float, float, float]
    radius: float
    omega: float
    tangent_yaw: bool = True
    fixed_yaw: float = 0.0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("circle radius must be positive")


@dataclass(frozen=True)
class Lissajous:
    center: tuple[float, float, float]
    amplitude: tuple[float, float, float]
    frequency: tuple[float, float, float]  # Hz per axis
    phase: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw_rate: float = 0.0


@dataclass(frozen=True)
class PolySegment:
    """One polynomial piece over [t0, t1]; coefficients ascending per axis."""

    t0: float
    t1: float
    coeffs_x: tuple[float, ...]
    coeffs_y: tuple[float, ...]
    coeffs_z: tuple[float, ...]
    coeffs_yaw: tuple[float, ...] = (0.0,)

    def __post_init__(self) -> None:
        if self.t1 <= self.t0:
            raise ValueError("segment must have t1 > t0")


@dataclass(frozen=True)
class PolynomialTrajectory:
    segments: tuple[PolySegment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("polynomial trajectory needs at least one segment")
        for a, b in zip(self.segments, self.segments[1:]):
            if b.t0 < a.t1:
                raise ValueError("segments must be ordered and non-overlapping")


Trajectory = Union[Hover, Line, Circle, Lissajous, PolynomialTrajectory]


def _polyval(coeffs, tau: float, deriv: int = 0) -> float:
    out = 0.0
    for k in range(len(coeffs) - 1, deriv - 1, -1):
        fac = 1.0
        for j in range(deriv):
            fac *= (k - j)
        out = out * tau + coeffs[k] * fac
    return out


def eval_trajectory(traj: Trajectory, t: float) -> TrajectoryRef:
    """Analytic reference at time t (seconds); clamps outside the domain."""
    if isinstance(traj, Hover):
        return _hover_ref(traj.point, traj.yaw)

    if isinstance(traj, Line):
        if t <= 0:
            return _hover_ref(traj.start, traj.yaw)
        if t >= traj.duration:
            return _hover_ref(traj.end, traj.yaw)
        p0 = np.asarray(traj.start, np.float64)
        p1 = np.asarray(traj.end, np.float64)
        vel = (p1 - p0) / traj.duration
        return TrajectoryRef(pos=p0 + vel * t, vel=vel, acc=np.zeros(3),
                             yaw=traj.yaw, yaw_rate=0.0)

    if isinstance(traj, Circle):
        if t < 0:
            t = 0.0
        c = np.asarray(traj.center, np.float64)
        r, om = traj.radius, traj.omega
        a = om * t
        pos = c + r * np.array([math.cos(a), math.sin(a), 0.0])
        vel = r * om * np.array([-math.sin(a), math.cos(a), 0.0])
        acc = -r * om * om * np.array([math.cos(a), math.sin(a), 0.0])
        if traj.tangent_yaw:
            yaw = a + math.pi / 2.0  # unwrapped heading of the velocity vector
            yaw_rate = om
        else:
            yaw, yaw_rate = traj.fixed_yaw, 0.0
        return TrajectoryRef(pos=pos, vel=vel, acc=acc, yaw=yaw, yaw_rate=yaw_rate)

    if isinstance(traj, Lissajous):
        if t < 0:
            t = 0.0
        c = np.asarray(traj.center, np.float64)
        amp = np.asarray(traj.amplitude, np.float64)
        om = 2.0 * math.pi * np.asarray(traj.frequency, np.float64)
        ph = np.asarray(traj.phase, np.float64)
        arg = om * t + ph
        pos = c + amp * np.sin(arg)
        vel = amp * om * np.cos(arg)
        acc = -amp * om * om * np.sin(arg)
        return TrajectoryRef(pos=pos, vel=vel, acc=acc,
                             yaw=traj.yaw_rate * t, yaw_rate=traj.yaw_rate)

    if isinstance(traj, PolynomialTrajectory):
        segs = traj.segments
        if t <= segs[0].t0:
            s = segs[0]
            return _hover_ref([_polyval(s.coeffs_x, 0.0), _polyval(s.coeffs_y, 0.0),
                               _polyval(s.coeffs_z, 0.0)], _polyval(s.coeffs_yaw, 0.0))
        if t >= segs[-1].t1:
            s = segs[-1]
            tau = s.t1 - s.t0
            return _hover_ref([_polyval(s.coeffs_x, tau), _polyval(s.coeffs_y, tau),
                               _polyval(s.coeffs_z, tau)], _polyval(s.coeffs_yaw, tau))
        for s in segs:
            if s.t0 <= t <= s.t1:
                tau = t - s.t0
                pos = np.array([_polyval(s.coeffs_x, tau), _polyval(s.coeffs_y, tau),
                                _polyval(s.coeffs_z, tau)])
                vel = np.array([_polyval(s.coeffs_x, tau, 1), _polyval(s.coeffs_y, tau, 1),
                                _polyval(s.coeffs_z, tau, 1)])
                acc = np.array([_polyval(s.coeffs_x, tau, 2), _polyval(s.coeffs_y, tau, 2),
                                _polyval(s.coeffs_z, tau, 2)])
                return TrajectoryRef(pos=pos, vel=vel, acc=acc,
                                     yaw=_polyval(s.coeffs_yaw, tau),
                                     yaw_rate=_polyval(s.coeffs_yaw, tau, 1))
        # gap between segments: hold the previous segment's endpoint
        prev = max(s for s in segs if s.t1 <= t)
        tau = prev.t1 - prev.t0
        return _hover_ref([_polyval(prev.coeffs_x, tau), _polyval(prev.coeffs_y, tau),
                           _polyval(prev.coeffs_z, tau)], _polyval(prev.coeffs_yaw, tau))

    raise TypeError(f"unknown trajectory type {type(traj).__name__}")


def trajectory_from_dict(d: dict) -> Trajectory:
    kind = d.get("type")
    if kind == "hover":
        return Hover(point=tuple(d["point"]), yaw=float(d.get("yaw", 0.0)))
    if kind == "line":
        return Line(start=tuple(d["start"]), end=tuple(d["end"]),
                    duration=float(d["duration"]), yaw=float(d.get("yaw", 0.0)))
    if kind == "circle":
        return Circle(center=tuple(d["center"]), radius=float(d["radius"]),
                      omega=float(d["omega"]),
                      tangent_yaw=bool(d.get("tangent_yaw", True)),
                      fixed_yaw=float(d.get("fixed_yaw", 0.0)))
    if kind == "lissajous":
        return Lissajous(center=tuple(d["center"]), amplitude=tuple(d["amplitude"]),
                         frequency=tuple(d["frequency"]),
                         phase=tuple(d.get("phase", (0.0, 0.0, 0.0))),
                         yaw_rate=float(d.get("yaw_rate", 0.0)))
    if kind == "polynomial":
        segs = tuple(
            PolySegment(t0=float(s["t0"]), t1=float(s["t1"]),
                        coeffs_x=tuple(s["coeffs_x"]), coeffs_y=tuple(s["coeffs_y"]),
                        coeffs_z=tuple(s["coeffs_z"]),
                        coeffs_yaw=tuple(s.get("coeffs_yaw", (0.0,))))
            for s in d["segments"]
        )
        return PolynomialTrajectory(segments=segs)
    raise ValueError(f"unknown trajectory type {kind!r}")
