import numpy as np
import pytest

from conftest import a_u, a_u_hat, a_x_hat
from hjjumps.errors import StencilError
from hjjumps.problem import JumpSchedule, NumericsConfig, ProblemSpec
from hjjumps.solver import (
    check_jump_condition,
    flow_derivative_bounds,
    hj_residual,
    hj_residual_batch,
    lemma_suite,
    run_verification,
    u_at,
    u_at_batch,
    verify_decay,
)


def spec_with(u0="0.5*tanh(x1)", delta=0.75, **overrides):
    kwargs = dict(
        name="variant",
        regime="theorem1",
        n=1,
        m=1,
        u_star=0.0,
        x_star=[0.0],
        gamma=1.0,
        L="u",
        alphas=["u"],
        gfields=[["x1"]],
        h=["-u"],
        u0=u0,
        schedule=JumpSchedule.periodic(0.5, [delta], 5.0),
        numerics=NumericsConfig(step=0.01),
    )
    kwargs.update(overrides)
    return ProblemSpec.from_strings(**kwargs)


class TestUAt:
    def test_known_post_jump_value(self, problem_a):
        sample = u_at(problem_a, 0.5, [a_x_hat(0.5, 0.4)])
        assert sample.u == pytest.approx(0.25 * a_u_hat(0.5 - 1e-12, 0.4), abs=1e-8)
        assert sample.u == pytest.approx(0.028807, abs=1e-6)
        assert sample.interval == 1

    def test_initial_surface_exact(self, problem_a):
        for x in (-0.8, -0.1, 0.63):
            sample = u_at(problem_a, 0.0, [x])
            assert sample.u == float(problem_a.u0_value(np.array([[x]]))[0])

    def test_flat_surface_constant(self):
        spec = spec_with(u0="0")
        sample = u_at(spec, 1.7, [0.4])
        assert sample.u == 0.0
        assert sample.p[0] == 0.0

    def test_gradient_matches_finite_differences(self, problem_a):
        eps = 1e-5
        for t, x in [(0.3, 0.2), (1.2, -0.5), (2.6, 0.45)]:
            sample = u_at(problem_a, t, [x])
            fd = (u_at(problem_a, t, [x + eps]).u - u_at(problem_a, t, [x - eps]).u) / (
                2 * eps
            )
            assert sample.p[0] == pytest.approx(fd, abs=1e-4)

    def test_right_continuity_at_jumps(self, problem_a):
        for j in (1, 4, 9):
            t_j = 0.5 * j
            at = u_at(problem_a, t_j, [0.3]).u
            after = u_at(problem_a, t_j + 1e-9, [0.3]).u
            assert abs(at - after) <= 1e-7

    def test_closed_form_solution_values(self, problem_a):
        for t, x in [(0.25, 0.2), (0.8, -0.4), (1.6, 0.5), (3.1, 0.7)]:
            assert u_at(problem_a, t, [x]).u == pytest.approx(a_u(t, x), abs=1e-7)

    def test_theorem2_field_order_is_immaterial(self, translations):
        swapped = ProblemSpec.from_strings(
            name="swapped",
            regime="theorem2",
            n=2,
            m=1,
            u_star=0.0,
            x_star=[0.0, 0.0],
            gamma=1.0,
            L="u",
            alphas=["0.25*u", "0.5*u"],
            gfields=[["0", "1"], ["1", "0"]],
            h=["-u"],
            u0="0.25*sin(x1 + x2)",
            schedule=JumpSchedule.periodic(0.125, [0.6], 1.25),
            numerics=NumericsConfig(step=0.005),
        )
        for t, x in [(0.3, [0.2, -0.1]), (0.9, [-0.3, 0.4])]:
            u1 = u_at(translations, t, x).u
            u2 = u_at(swapped, t, x).u
            assert abs(u1 - u2) <= 1e-8


class TestResidual:
    def test_flat_surface_zero(self):
        spec = spec_with(u0="0")
        assert hj_residual(spec, 0.25, [0.2]) == 0.0

    def test_problem_a_interior(self, problem_a):
        assert abs(hj_residual(problem_a, 0.25, [0.2])) <= 1e-5

    def test_translations_interior(self, translations):
        res = hj_residual_batch(
            translations,
            np.array([0.0625, 0.3, 0.69]),
            np.array([[0.2, 0.1], [-0.3, 0.2], [0.1, -0.4]]),
        )
        assert float(np.max(np.abs(res))) <= 1e-5

    def test_stencil_near_jump_shrinks(self, problem_a):
        # close to an event the time stencil shrinks instead of crossing
        res = hj_residual(problem_a, 0.5 + 5e-5, [0.2])
        assert abs(res) <= 1e-3

    def test_stencil_on_jump_rejected(self, problem_a):
        with pytest.raises(StencilError):
            hj_residual(problem_a, 0.5, [0.2])

    def test_stencil_outside_ball_rejected(self, problem_a):
        with pytest.raises(StencilError):
            hj_residual(problem_a, 0.25, [1.0])


class TestJumpCondition:
    def test_problem_a_first_jump(self, problem_a):
        xs = np.linspace(-0.5, 0.5, 21).reshape(-1, 1)
        check = check_jump_condition(problem_a, 1, xs)
        assert check.max_violation <= 1e-7

    def test_flat_surface_no_violation(self):
        spec = spec_with(u0="0")
        xs = np.linspace(-0.5, 0.5, 5).reshape(-1, 1)
        assert check_jump_condition(spec, 1, xs).max_violation == 0.0

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_zero_magnitude_schedule(self):
        spec = spec_with(delta=0.0)  # fails the strong window; best-effort run
        xs = np.linspace(-0.4, 0.4, 5).reshape(-1, 1)
        assert check_jump_condition(spec, 2, xs).max_violation <= 1e-9

    def test_index_bounds(self, problem_a):
        with pytest.raises(ValueError):
            check_jump_condition(problem_a, 0, np.array([[0.1]]))
        with pytest.raises(ValueError):
            check_jump_condition(problem_a, 11, np.array([[0.1]]))


class TestDecay:
    def test_problem_a_bounds_hold(self, problem_a):
        report = verify_decay(problem_a, intervals=10, grid_points=5)
        assert report.passed
        sup = [iv.sup_u_deviation for iv in report.intervals]
        assert sup[3] <= 0.125  # halving bound at the fourth interval
        # interval sups contract monotonically
        assert all(b <= a + 1e-12 for a, b in zip(sup, sup[1:]))

    def test_flow_derivative_bound_closed_form(self, problem_a):
        bounds = flow_derivative_bounds(problem_a)
        assert bounds[0] == pytest.approx(np.e, abs=1e-6)

    def test_gradient_bounds_hold(self, problem_a):
        report = verify_decay(problem_a, intervals=6, grid_points=5)
        for iv in report.intervals:
            assert iv.gradient_passed

    def test_interval_budget_checked(self, problem_a):
        with pytest.raises(ValueError):
            verify_decay(problem_a, intervals=11)

    def test_modulus_tracked(self, problem_a):
        report = verify_decay(problem_a, intervals=3, grid_points=5)
        rho = problem_a.validation().constants.rho
        assert report.max_modulus <= rho + 1e-6

    def test_rotation_scaling_all_intervals(self, rotation_scaling):
        report = verify_decay(rotation_scaling, intervals=10, grid_points=5)
        assert report.passed


class TestLemmaSuite:
    def test_general_regime_contracts(self, lemma1_general):
        report = lemma_suite(lemma1_general)
        assert report.passed
        assert report.max_jump_expansion <= 1e-9


class TestRunVerification:
    def test_translations_full_pipeline(self, translations):
        outcome = run_verification(
            translations, intervals=10, grid_points=5, round_trips=10, residual_points=6
        )
        assert outcome.passed, outcome.failures
        assert outcome.mode == "inversion"
        assert outcome.max_jump_violation <= 1e-6
        assert outcome.round_trip.forward_max <= 1e-7

    def test_simulation_mode_for_general_regime(self, lemma1_general):
        outcome = run_verification(lemma1_general, grid_points=5)
        assert outcome.mode == "simulation"
        assert outcome.passed

    def test_unvalidated_requires_force(self):
        weak = spec_with(delta=0.1)
        outcome = run_verification(weak, grid_points=3, round_trips=0, residual_points=0)
        assert not outcome.passed
        assert "hypotheses" in outcome.failures[0]

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_too_weak_jumps_fail_decay_under_force(self):
        # zero-size jumps leave only the continuous decay e^{-d} = 0.61 per
        # interval, which cannot keep up with the halving bound forever
        weak = spec_with(delta=0.0)
        outcome = run_verification(
            weak, intervals=10, grid_points=3, force=True, round_trips=0, residual_points=0
        )
        assert not outcome.passed
        assert any("decay" in f for f in outcome.failures)
