import math

import numpy as np
import pytest

from hjjumps.errors import BlowUpError
from hjjumps.integrate import OdeSystem, integrate_path, step_grid


def linear(rate):
    return OdeSystem(dim=1, rhs=lambda t, y: rate * y)


class TestIntegratePath:
    def test_zero_field_is_constant(self):
        sys = OdeSystem(dim=1, rhs=lambda t, y: 0.0 * y)
        traj = integrate_path(sys, np.array([5.0]), 0.0, 3.7, 0.1)
        assert traj.end[0] == 5.0
        assert traj.value_at(1.234)[0] == 5.0

    def test_exponential_growth(self):
        traj = integrate_path(linear(1.0), np.array([1.0]), 0.0, 1.0, 0.01)
        assert abs(traj.end[0] - math.e) <= 1e-8

    def test_exponential_decay(self):
        traj = integrate_path(linear(-1.0), np.array([1.0]), 0.0, 1.0, 0.01)
        assert abs(traj.end[0] - math.exp(-1.0)) <= 1e-8

    def test_fourth_order_convergence(self):
        errors = []
        for step in (0.02, 0.01):
            traj = integrate_path(linear(1.0), np.array([1.0]), 0.0, 1.0, step)
            errors.append(abs(traj.end[0] - math.e))
        assert errors[0] / errors[1] >= 8.0

    def test_time_reversal(self):
        fwd = integrate_path(linear(1.0), np.array([1.0]), 0.0, 1.0, 0.01)
        sys_back = OdeSystem(dim=1, rhs=lambda t, y: -y)  # reversed clock
        back = integrate_path(sys_back, fwd.end, 0.0, 1.0, 0.01)
        assert abs(back.end[0] - 1.0) <= 1e-9

    def test_last_step_lands_exactly(self):
        grid = step_grid(0.0, 0.25, 0.1)
        np.testing.assert_allclose(grid, [0.0, 0.1, 0.2, 0.25])
        traj = integrate_path(linear(-1.0), np.array([1.0]), 0.0, 0.25, 0.1)
        assert traj.t1 == 0.25

    def test_dense_output_accuracy(self):
        traj = integrate_path(linear(-1.0), np.array([1.0]), 0.0, 1.0, 0.05)
        for t in np.linspace(0.0, 1.0, 17):
            assert abs(traj.value_at(t)[0] - math.exp(-t)) <= 1e-7

    def test_empty_span(self):
        traj = integrate_path(linear(1.0), np.array([2.0]), 0.5, 0.5, 0.1)
        assert traj.end[0] == 2.0
        assert traj.value_at(0.5)[0] == 2.0

    def test_blow_up_reports_time(self):
        sys = OdeSystem(dim=1, rhs=lambda t, y: y * y)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(BlowUpError) as err:
                integrate_path(sys, np.array([1.0]), 0.0, 3.0, 0.01)
        assert 0.0 < err.value.time <= 3.0

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            integrate_path(linear(1.0), np.array([1.0]), 1.0, 0.0, 0.1)
        with pytest.raises(ValueError):
            integrate_path(linear(1.0), np.array([1.0]), 0.0, 1.0, -0.1)

    def test_batched_rows(self):
        rates = np.array([[-1.0], [1.0], [0.5]])
        sys = OdeSystem(dim=1, rhs=lambda t, y: rates * y)
        traj = integrate_path(sys, np.ones((3, 1)), 0.0, 1.0, 0.01)
        ts = np.array([0.3, 0.7, 1.0])
        rows = traj.rows_at(ts)
        expected = np.exp(rates[:, 0] * ts)
        np.testing.assert_allclose(rows[:, 0], expected, atol=1e-8)

    def test_vector_system(self):
        # harmonic oscillator keeps energy to RK4 accuracy
        sys = OdeSystem(dim=2, rhs=lambda t, y: np.stack([y[1], -y[0]]))
        traj = integrate_path(sys, np.array([1.0, 0.0]), 0.0, 2 * math.pi, 0.01)
        np.testing.assert_allclose(traj.end, [1.0, 0.0], atol=1e-8)
