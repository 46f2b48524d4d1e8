"""IMU measurement model: specific-force accelerometer plus body-rate gyro."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quat
from .vehicle import VehicleState

G_WORLD = np.array([0.0, 0.0, -9.81])


@dataclass(frozen=True)
class ImuNoise:
    """White-noise std-devs plus constant biases drawn once per bias seed."""

    std_accel: float = 0.0
    std_gyro: float = 0.0
    bias_std_accel: float = 0.0
    bias_std_gyro: float = 0.0
    bias_seed: int = 0

    def biases(self) -> tuple[np.ndarray, np.ndarray]:
        if self.bias_std_accel == 0.0 and self.bias_std_gyro == 0.0:
            return np.zeros(3), np.zeros(3)
        rng = np.random.default_rng(self.bias_seed)
        return (rng.normal(0.0, self.bias_std_accel, 3) if self.bias_std_accel else np.zeros(3),
                rng.normal(0.0, self.bias_std_gyro, 3) if self.bias_std_gyro else np.zeros(3))


@dataclass
class ImuSample:
    accel: np.ndarray  # specific force, m/s^2, body frame
    gyro: np.ndarray   # rad/s, body frame
    t: int             # microseconds

    def __post_init__(self) -> None:
        self.accel = np.asarray(self.accel, np.float64)
        self.gyro = np.asarray(self.gyro, np.float64)


def sample_imu(
    state: VehicleState,
    accel_world,
    noise: ImuNoise,
    seed: int,
) -> ImuSample:
    """Measure specific force and body rates at the vehicle state.

    ``accel_world`` is the vehicle's total world-frame acceleration
    (gravity included); a hovering vehicle therefore reads (0, 0, +9.81).
    Deterministic for a fixed (noise config, seed) pair.
    """
    specific_world = np.asarray(accel_world, np.float64) - G_WORLD
    accel = np.array(quat.rotate_inverse(state.q, specific_world))
    gyro = state.w.copy()
    bias_a, bias_g = noise.biases()
    accel += bias_a
    gyro += bias_g
    if noise.std_accel > 0.0 or noise.std_gyro > 0.0:
        rng = np.random.default_rng(seed)
        if noise.std_accel > 0.0:
            accel += rng.normal(0.0, noise.std_accel, 3)
        if noise.std_gyro > 0.0:
            gyro += rng.normal(0.0, noise.std_gyro, 3)
    return ImuSample(accel=accel, gyro=gyro, t=state.t)
