import math

import numpy as np
import pytest

from hjjumps.errors import ContainmentWarning
from hjjumps.flow import (
    check_commute,
    flow_jacobian,
    flow_map,
    flow_map_batch,
    lie_bracket,
)
from hjjumps.problem import JumpSchedule, NumericsConfig, ProblemSpec


def two_field_spec(g1, g2, **overrides):
    kwargs = dict(
        name="pair",
        regime="theorem2",
        n=2,
        m=1,
        u_star=0.0,
        x_star=[0.0, 0.0],
        gamma=1.0,
        L="u",
        alphas=["0.1*u", "0.1*u"],
        gfields=[g1, g2],
        h=["-u"],
        u0="0.1*sin(x1 + x2)",
        schedule=JumpSchedule.periodic(0.125, [0.75], 1.0),
        numerics=NumericsConfig(step=0.005),
    )
    kwargs.update(overrides)
    return ProblemSpec.from_strings(**kwargs)


class TestFlowMap:
    def test_linear_field_closed_form(self, problem_a):
        out = flow_map(problem_a, 0, 0.1, np.array([1.0]))
        assert out[0] == pytest.approx(math.exp(0.1), abs=1e-9)
        assert out[0] == pytest.approx(1.105171, abs=1e-6)

    def test_zero_time_is_identity_exactly(self, problem_a):
        x = np.array([0.731])
        assert flow_map(problem_a, 0, 0.0, x)[0] == x[0]

    def test_constant_field_translates(self):
        spec = two_field_spec(["1", "0"], ["0", "1"])
        out = flow_map(spec, 0, 0.3, np.array([0.0, 0.0]))
        np.testing.assert_allclose(out, [0.3, 0.0], atol=1e-12)

    def test_backward_flow(self, problem_a):
        out = flow_map(problem_a, 0, -0.2, np.array([1.0]))
        assert out[0] == pytest.approx(math.exp(-0.2), abs=1e-9)

    def test_group_law(self, problem_a):
        x = np.array([0.4])
        for s, sp in [(0.3, 0.5), (-0.4, 0.7), (0.9, -0.2)]:
            once = flow_map(problem_a, 0, s + sp, x)
            twice = flow_map(problem_a, 0, s, flow_map(problem_a, 0, sp, x))
            assert abs(once[0] - twice[0]) <= 1e-8

    def test_inverse_law(self, problem_a):
        x = np.array([0.8])
        for s in (0.25, 0.9, -0.6):
            back = flow_map(problem_a, 0, -s, flow_map(problem_a, 0, s, x))
            assert abs(back[0] - x[0]) <= 1e-8

    def test_batch_per_row_times(self, problem_a):
        sig = np.array([0.1, -0.3, 0.0])
        xs = np.array([[1.0], [0.5], [1.5]])
        out = flow_map_batch(problem_a, 0, sig, xs)
        np.testing.assert_allclose(out[:, 0], xs[:, 0] * np.exp(sig), atol=1e-9)

    def test_leaving_containment_ball_warns(self, problem_a):
        with pytest.warns(ContainmentWarning):
            flow_map(problem_a, 0, 1.0, np.array([0.9]))  # 0.9 e^1 > 2 gamma


class TestFlowJacobian:
    def test_zero_time_identity(self, problem_a):
        np.testing.assert_array_equal(
            flow_jacobian(problem_a, 0, 0.0, np.array([0.5])), np.eye(1)
        )

    def test_linear_field_closed_form(self, problem_a):
        jac = flow_jacobian(problem_a, 0, 0.1, np.array([1.0]))
        assert jac[0, 0] == pytest.approx(1.105171, abs=1e-6)

    def test_constant_field_identity(self):
        spec = two_field_spec(["1", "0"], ["0", "1"])
        jac = flow_jacobian(spec, 1, 0.7, np.array([0.2, -0.4]))
        np.testing.assert_allclose(jac, np.eye(2), atol=1e-12)

    def test_matches_finite_differences(self):
        spec = two_field_spec(["-x2", "x1"], ["x1", "x2"])
        x = np.array([0.3, -0.2])
        sigma = 0.4
        jac = flow_jacobian(spec, 0, sigma, x)
        eps = 1e-6
        for i in range(2):
            shift = np.zeros(2)
            shift[i] = eps
            fd = (
                flow_map(spec, 0, sigma, x + shift) - flow_map(spec, 0, sigma, x - shift)
            ) / (2 * eps)
            np.testing.assert_allclose(jac[:, i], fd, atol=1e-5)


class TestLieBracket:
    def test_rotation_scaling_commute(self):
        spec = two_field_spec(["-x2", "x1"], ["x1", "x2"])
        out = lie_bracket(spec, 0, 1, np.array([0.7, -1.3]))
        np.testing.assert_array_equal(out, [0.0, 0.0])

    def test_shear_pair_closed_form(self):
        spec = two_field_spec(["x2", "0"], ["0", "x1"])
        out = lie_bracket(spec, 0, 1, np.array([1.0, 1.0]))
        np.testing.assert_allclose(out, [1.0, -1.0], atol=1e-12)

    def test_bracket_with_itself_vanishes(self):
        spec = two_field_spec(["-x2", "x1"], ["x1", "x2"])
        out = lie_bracket(spec, 0, 0, np.array([0.4, 0.9]))
        np.testing.assert_array_equal(out, [0.0, 0.0])


class TestCheckCommute:
    def test_rotation_scaling_passes(self):
        spec = two_field_spec(["-x2", "x1"], ["x1", "x2"])
        report = check_commute(spec, 0, 1)
        assert report.passed
        assert report.max_bracket_norm <= 1e-12

    def test_shear_pair_fails_near_boundary(self):
        spec = two_field_spec(["x2", "0"], ["0", "x1"])
        report = check_commute(spec, 0, 1)
        assert not report.bracket_passed
        # |[g1,g2]| = |x| peaks at the sampled ball edge
        assert report.max_bracket_norm == pytest.approx(3.0, abs=0.01)
        assert np.linalg.norm(report.bracket_witness) == pytest.approx(3.0, abs=0.01)

    def test_single_field_is_vacuous(self, problem_a):
        report = check_commute(problem_a, 0, 0)
        assert report.passed
        assert report.max_bracket_norm == 0.0

    def test_translations_flow_order_exact(self):
        spec = two_field_spec(["1", "0"], ["0", "1"])
        report = check_commute(spec, 0, 1)
        assert report.max_flow_order_deviation <= 1e-12
