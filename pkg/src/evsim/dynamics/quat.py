"""Scalar-first (w, x, y, z) unit quaternion helpers.

Plain-float internals: the integrator steps millions of times, and small
numpy temporaries dominate its cost otherwise.
"""

from __future__ import annotations

import math

import numpy as np

IDENTITY = (1.0, 0.0, 0.0, 0.0)


def normalize(q) -> tuple[float, float, float, float]:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("cannot normalize a zero quaternion")
    return (w / n, x / n, y / n, z / n)


def multiply(q1, q2) -> tuple[float, float, float, float]:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return (
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    )


def conjugate(q) -> tuple[float, float, float, float]:
    w, x, y, z = q
    return (w, -x, -y, -z)


def rotate(q, v) -> tuple[float, float, float]:
    """Rotate vector v by quaternion q (body-to-world for world-from-body q)."""
    w, x, y, z = q
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    # t = 2 q_vec x v; v' = v + w t + q_vec x t
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + y * tz - z * ty,
        vy + w * ty + z * tx - x * tz,
        vz + w * tz + x * ty - y * tx,
    )


def rotate_inverse(q, v) -> tuple[float, float, float]:
    return rotate(conjugate(q), v)


def to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def from_axis_angle(axis, angle: float) -> tuple[float, float, float, float]:
    ax = np.asarray(axis, np.float64)
    ax = ax / np.linalg.norm(ax)
    h = 0.5 * angle
    s = math.sin(h)
    return (math.cos(h), s * ax[0], s * ax[1], s * ax[2])


def exp_pure(vx: float, vy: float, vz: float) -> tuple[float, float, float, float]:
    """Quaternion exponential of the pure quaternion (0, v)."""
    n = math.sqrt(vx * vx + vy * vy + vz * vz)
    if n < 1e-300:
        return IDENTITY
    s = math.sin(n) / n
    return (math.cos(n), s * vx, s * vy, s * vz)


def from_matrix(R: np.ndarray) -> tuple[float, float, float, float]:
    """Unit quaternion from a rotation matrix (Shepperd's method)."""
    m = np.asarray(R, np.float64)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        return normalize((0.25 * s, (m[2, 1] - m[1, 2]) / s,
                          (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s))
    i = int(np.argmax([m[0, 0], m[1, 1], m[2, 2]]))
    if i == 0:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = ((m[2, 1] - m[1, 2]) / s, 0.25 * s,
             (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
    elif i == 1:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = ((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s,
             0.25 * s, (m[1, 2] + m[2, 1]) / s)
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = ((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s,
             (m[1, 2] + m[2, 1]) / s, 0.25 * s)
    return normalize(q)
