"""Rigid-body quadrotor: rotor mixing and a semi-implicit Euler integrator.

X configuration, body frame x forward / y left / z up. Rotors sit at 45
degree diagonals with lever arm ``arm_length/sqrt(2)``; handedness
alternates (rotors 0 and 2 spin counter-clockwise). Reaction torque on the
body opposes each rotor's spin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quat

GRAVITY = 9.81


class IntegrationError(RuntimeError):
    """Dynamics produced a non-finite state; carries the last valid state."""

    def __init__(self, message: str, last_state: "VehicleState"):
        super().__init__(message)
        self.last_state = last_state


@dataclass
class VehicleParams:
    mass: float = 1.0
    inertia: tuple[float, float, float] = (0.01, 0.01, 0.02)
    arm_length: float = 0.2
    k_f: float = 1.0e-5  # N/(rad/s)^2
    k_m: float = 1.0e-7  # N*m/(rad/s)^2
    drag: float = 0.0    # N*s/m, linear
    g: float = GRAVITY

    def __post_init__(self) -> None:
        if self.mass <= 0 or self.arm_length <= 0 or self.k_f <= 0:
            raise ValueError("mass, arm_length, and k_f must be positive")
        if any(i <= 0 for i in self.inertia):
            raise ValueError("inertia components must be positive")
        if self.drag < 0:
            raise ValueError("drag must be >= 0")

    def hover_thrust(self) -> float:
        return self.mass * self.g


@dataclass
class VehicleState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: tuple[float, float, float, float] = quat.IDENTITY
    w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t: int = 0  # microseconds

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, np.float64)
        self.v = np.asarray(self.v, np.float64)
        self.w = np.asarray(self.w, np.float64)
        self.q = tuple(float(c) for c in self.q)


@dataclass
class ControlCommand:
    """Either a body wrench or four rotor speeds, tagged with a step id."""

    mode: str = "wrench"  # "wrench" | "rotor_speeds"
    thrust: float = 0.0
    torque: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotor_speeds: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    step_id: int = 0
    t_cmd: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("wrench", "rotor_speeds"):
            raise ValueError(f"unknown command mode {self.mode!r}")
        if self.mode == "rotor_speeds" and any(s < 0 for s in self.rotor_speeds):
            raise ValueError("rotor speeds must be >= 0")


def hover_command(params: VehicleParams, step_id: int = 0, t_cmd: int = 0) -> ControlCommand:
    return ControlCommand(mode="wrench", thrust=params.hover_thrust(),
                          torque=(0.0, 0.0, 0.0), step_id=step_id, t_cmd=t_cmd)


# rotor x/y positions in units of arm_length/sqrt(2), and spin handedness
_ROTOR_X = (1.0, -1.0, -1.0, 1.0)
_ROTOR_Y = (1.0, 1.0, -1.0, -1.0)
_ROTOR_SPIN = (1.0, -1.0, 1.0, -1.0)  # +1 = counter-clockwise about body z


def rotor_to_wrench(rotor_speeds, params: VehicleParams) -> tuple[float, tuple[float, float, float]]:
    """Map four rotor speeds (rad/s) to total thrust and body torque."""
    speeds = [float(s) for s in rotor_speeds]
    if len(speeds) != 4:
        raise ValueError("expected exactly 4 rotor speeds")
    if any(s < 0 for s in speeds):
        raise ValueError("rotor speeds must be >= 0")
    d = params.arm_length / math.sqrt(2.0)
    thrust = 0.0
    tx = ty = tz = 0.0
    for i in range(4):
        f = params.k_f * speeds[i] * speeds[i]
        thrust += f
        tx += _ROTOR_Y[i] * d * f
        ty -= _ROTOR_X[i] * d * f
        tz -= _ROTOR_SPIN[i] * params.k_m * speeds[i] * speeds[i]
    return thrust, (tx, ty, tz)


def resolve_wrench(cmd: ControlCommand, params: VehicleParams) -> tuple[float, tuple[float, float, float]]:
    if cmd.mode == "rotor_speeds":
        return rotor_to_wrench(cmd.rotor_speeds, params)
    return float(cmd.thrust), (float(cmd.torque[0]), float(cmd.torque[1]), float(cmd.torque[2]))


def step_dynamics(state: VehicleState, cmd: ControlCommand, dt: float,
                  params: VehicleParams) -> VehicleState:
    """One semi-implicit Euler step.

    Velocity updates before position and body rate before attitude, so
    constant-force trajectories stay energy-stable. The quaternion is
    renormalized every step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    thrust, (tau_x, tau_y, tau_z) = resolve_wrench(cmd, params)

    qw, qx, qy, qz = state.q
    # body z axis in world coordinates (third column of R(q))
    zx = 2.0 * (qx * qz + qw * qy)
    zy = 2.0 * (qy * qz - qw * qx)
    zz = 1.0 - 2.0 * (qx * qx + qy * qy)

    inv_m = 1.0 / params.mass
    s = thrust * inv_m
    dcoef = params.drag * inv_m
    vx, vy, vz = float(state.v[0]), float(state.v[1]), float(state.v[2])
    ax = zx * s - dcoef * vx
    ay = zy * s - dcoef * vy
    az = zz * s - dcoef * vz - params.g
    vx += ax * dt
    vy += ay * dt
    vz += az * dt
    px = float(state.p[0]) + vx * dt
    py = float(state.p[1]) + vy * dt
    pz = float(state.p[2]) + vz * dt

    Ix, Iy, Iz = params.inertia
    wx, wy, wz = float(state.w[0]), float(state.w[1]), float(state.w[2])
    # w x (I w)
    gx = wy * Iz * wz - wz * Iy * wy
    gy = wz * Ix * wx - wx * Iz * wz
    gz = wx * Iy * wy - wy * Ix * wx
    wx += (tau_x - gx) / Ix * dt
    wy += (tau_y - gy) / Iy * dt
    wz += (tau_z - gz) / Iz * dt

    half = 0.5 * dt
    q_new = quat.normalize(quat.multiply(state.q, quat.exp_pure(wx * half, wy * half, wz * half)))

    vals = (px, py, pz, vx, vy, vz, wx, wy, wz)
    if not all(math.isfinite(c) for c in vals) or not all(math.isfinite(c) for c in q_new):
        raise IntegrationError(
            f"dynamics diverged at t={state.t} us (dt={dt}, thrust={thrust})", state
        )
    return VehicleState(
        p=np.array((px, py, pz)),
        v=np.array((vx, vy, vz)),
        q=q_new,
        w=np.array((wx, wy, wz)),
        t=state.t + int(round(dt * 1e6)),
    )
