"""Geometric SE(3) tracking controller producing a body wrench."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quat
from .trajectory import TrajectoryRef
from .vehicle import ControlCommand, VehicleParams, VehicleState

E3 = np.array([0.0, 0.0, 1.0])


class DegenerateAttitudeError(ValueError):
    """Desired force points down or vanishes; no upright attitude tracks it."""


@dataclass(frozen=True)
class ControllerGains:
    kp: float = 8.0
    kv: float = 4.0
    kR: float = 20.0
    kw: float = 0.6


def _vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def se3_controller(
    state: VehicleState,
    ref: TrajectoryRef,
    gains: ControllerGains,
    params: VehicleParams,
    step_id: int = 0,
) -> ControlCommand:
    """Wrench tracking a position/yaw reference.

    Desired force combines gravity compensation, feedforward acceleration,
    and PD position feedback; thrust is its projection on the current body
    z axis. Attitude errors use the standard rotation-log form
    ``e_R = 1/2 vee(Rd^T R - R^T Rd)``.
    """
    e_p = ref.pos - state.p
    e_v = ref.vel - state.v
    f_des = params.mass * (params.g * E3 + ref.acc + gains.kp * e_p + gains.kv * e_v)
    if f_des[2] <= 0.0:
        raise DegenerateAttitudeError(
            f"desired force has non-positive vertical component: {f_des}"
        )
    R = quat.to_matrix(state.q)
    thrust = float(f_des @ R[:, 2])

    b3 = f_des / np.linalg.norm(f_des)
    b1_yaw = np.array([math.cos(ref.yaw), math.sin(ref.yaw), 0.0])
    b2 = np.cross(b3, b1_yaw)
    n2 = np.linalg.norm(b2)
    if n2 < 1e-9:
        raise DegenerateAttitudeError("yaw heading parallel to desired thrust axis")
    b2 /= n2
    b1 = np.cross(b2, b3)
    R_des = np.column_stack([b1, b2, b3])

    e_R = 0.5 * _vee(R_des.T @ R - R.T @ R_des)
    w_des_body = R.T @ (R_des @ np.array([0.0, 0.0, ref.yaw_rate]))
    e_w = state.w - w_des_body
    torque = -gains.kR * e_R - gains.kw * e_w
    return ControlCommand(
        mode="wrench",
        thrust=thrust,
        torque=(float(torque[0]), float(torque[1]), float(torque[2])),
        step_id=step_id,
        t_cmd=state.t,
    )
