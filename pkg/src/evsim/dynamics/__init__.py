"""Quadrotor dynamics, SE(3) control, reference trajectories, IMU model."""

from . import quat
from .controller import ControllerGains, DegenerateAttitudeError, se3_controller
from .imu import G_WORLD, ImuNoise, ImuSample, sample_imu
from .trajectory import (
    Circle,
    Hover,
    Line,
    Lissajous,
    PolySegment,
    PolynomialTrajectory,
    Trajectory,
    TrajectoryRef,
    eval_trajectory,
    trajectory_from_dict,
)
from .vehicle import (
    GRAVITY,
    ControlCommand,
    IntegrationError,
    VehicleParams,
    VehicleState,
    hover_command,
    resolve_wrench,
    rotor_to_wrench,
    step_dynamics,
)

__all__ = [
    "Circle",
    "ControlCommand",
    "ControllerGains",
    "DegenerateAttitudeError",
    "G_WORLD",
    "GRAVITY",
    "Hover",
    "ImuNoise",
    "ImuSample",
    "IntegrationError",
    "Line",
    "Lissajous",
    "PolySegment",
    "PolynomialTrajectory",
    "Trajectory",
    "TrajectoryRef",
    "VehicleParams",
    "VehicleState",
    "eval_trajectory",
    "hover_command",
    "quat",
    "resolve_wrench",
    "rotor_to_wrench",
    "sample_imu",
    "se3_controller",
    "step_dynamics",
    "trajectory_from_dict",
]
