"""Trajectory evaluation: analytic values, derivative consistency, clamping."""

import numpy as np
import pytest

from evsim.dynamics import (
    Circle,
    Hover,
    Line,
    Lissajous,
    PolySegment,
    PolynomialTrajectory,
    eval_trajectory,
    trajectory_from_dict,
)


def _fd_check(traj, times, h=1e-5, atol=1e-5):
    for t in times:
        r = eval_trajectory(traj, t)
        rp = eval_trajectory(traj, t + h)
        rm = eval_trajectory(traj, t - h)
        np.testing.assert_allclose((rp.pos - rm.pos) / (2 * h), r.vel, atol=atol)
        np.testing.assert_allclose((rp.vel - rm.vel) / (2 * h), r.acc, atol=atol)


class TestCircle:
    def test_kinematics_at_zero(self):
        r = eval_trajectory(Circle(center=(0, 0, 2.0), radius=1.0, omega=1.0), 0.0)
        np.testing.assert_allclose(r.pos, [1.0, 0.0, 2.0])
        np.testing.assert_allclose(r.vel, [0.0, 1.0, 0.0])
        np.testing.assert_allclose(r.acc, [-1.0, 0.0, 0.0])
        assert r.yaw_rate == 1.0

    def test_finite_differences(self):
        traj = Circle(center=(1, -2, 3), radius=0.7, omega=2.3)
        rng = np.random.default_rng(0)
        _fd_check(traj, rng.uniform(0.1, 9.0, 20))


class TestHover:
    def test_constant(self):
        traj = Hover(point=(1.0, 2.0, 3.0), yaw=0.4)
        for t in (0.0, 5.0, 1e6):
            r = eval_trajectory(traj, t)
            np.testing.assert_allclose(r.pos, [1, 2, 3])
            assert np.all(r.vel == 0.0) and np.all(r.acc == 0.0)
            assert r.yaw == 0.4 and r.yaw_rate == 0.0


class TestLine:
    def test_interior_velocity(self):
        traj = Line(start=(0, 0, 0), end=(2, 0, 0), duration=4.0)
        r = eval_trajectory(traj, 1.0)
        np.testing.assert_allclose(r.pos, [0.5, 0, 0])
        np.testing.assert_allclose(r.vel, [0.5, 0, 0])

    def test_clamps_to_endpoint_hover(self):
        traj = Line(start=(0, 0, 0), end=(2, 0, 0), duration=4.0)
        r = eval_trajectory(traj, 10.0)
        np.testing.assert_allclose(r.pos, [2, 0, 0])
        assert np.all(r.vel == 0.0) and np.all(r.acc == 0.0)
        r = eval_trajectory(traj, -1.0)
        np.testing.assert_allclose(r.pos, [0, 0, 0])
        assert np.all(r.vel == 0.0)


class TestLissajous:
    def test_finite_differences(self):
        traj = Lissajous(center=(0, 0, 1.5), amplitude=(1.0, 0.8, 0.2),
                         frequency=(0.3, 0.2, 0.5), phase=(0.1, 0.0, 1.2))
        rng = np.random.default_rng(1)
        _fd_check(traj, rng.uniform(0.1, 20.0, 20))


class TestPolynomial:
    def test_segment_evaluation_and_derivatives(self):
        # x(tau) = 1 + 2 tau + 3 tau^2; y = tau^3; z = 2
        seg = PolySegment(t0=1.0, t1=3.0, coeffs_x=(1.0, 2.0, 3.0),
                          coeffs_y=(0.0, 0.0, 0.0, 1.0), coeffs_z=(2.0,))
        traj = PolynomialTrajectory(segments=(seg,))
        r = eval_trajectory(traj, 2.0)  # tau = 1
        np.testing.assert_allclose(r.pos, [6.0, 1.0, 2.0])
        np.testing.assert_allclose(r.vel, [8.0, 3.0, 0.0])
        np.testing.assert_allclose(r.acc, [6.0, 6.0, 0.0])
        _fd_check(traj, [1.3, 1.9, 2.5], atol=1e-4)

    def test_clamps_beyond_last_segment(self):
        seg = PolySegment(t0=0.0, t1=1.0, coeffs_x=(0.0, 1.0), coeffs_y=(0.0,),
                          coeffs_z=(1.0,))
        r = eval_trajectory(PolynomialTrajectory(segments=(seg,)), 5.0)
        np.testing.assert_allclose(r.pos, [1.0, 0.0, 1.0])
        assert np.all(r.vel == 0.0)


class TestFromDict:
    def test_circle_roundtrip(self):
        traj = trajectory_from_dict({"type": "circle", "center": [0, 0, 1],
                                     "radius": 1.0, "omega": 2.0})
        assert isinstance(traj, Circle) and traj.omega == 2.0

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            trajectory_from_dict({"type": "spiral"})
