import numpy as np
import pytest

from conftest import a_tau, a_x_hat
from hjjumps.characteristics import solve_characteristic, solve_characteristics
from hjjumps.errors import UnsupportedRegimeError
from hjjumps.inversion import flow_times, invert_point, invert_points, pull_back
from hjjumps.problem import JumpSchedule, NumericsConfig, ProblemSpec


def flat_spec():
    return ProblemSpec.from_strings(
        name="flat",
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
        u0="0",
        schedule=JumpSchedule.periodic(0.5, [0.75], 2.0),
        numerics=NumericsConfig(step=0.01),
    )


class TestFlowTimes:
    def test_closed_form(self, problem_a):
        tau, grads = flow_times(problem_a, [0.4], 0.5)
        assert tau[0] == pytest.approx(a_tau(0.5, 0.4), abs=1e-8)
        assert tau[0] == pytest.approx(0.074749, abs=1e-6)
        assert grads.shape == (1, 1)

    def test_zero_surface_means_zero_flow_time(self):
        spec = flat_spec()
        for t in (0.3, 1.0, 2.0):
            tau, _ = flow_times(spec, [0.5], t)
            assert tau[0] == 0.0

    def test_budget_bound_on_validated_problem(self, problem_a):
        beta = problem_a.validation().constants.beta
        for lam in (-0.9, -0.2, 0.5, 0.9):
            path = solve_characteristic(problem_a, [lam])
            for t in np.linspace(0.1, 5.0, 12):
                tau, _ = flow_times(problem_a, [lam], float(t), path)
                assert abs(tau[0]) <= beta + 1e-9

    def test_beyond_stored_horizon(self, problem_a):
        path = solve_characteristic(problem_a, [0.4], T=1.0)
        with pytest.raises(ValueError):
            flow_times(problem_a, [0.4], 2.0, path)


class TestPullBack:
    def test_closed_form_inverse_point(self, problem_a):
        x = a_x_hat(0.5, 0.4)
        out = pull_back(problem_a, 0.5, [x], [0.4])
        assert out[0] == pytest.approx(0.4, abs=1e-8)

    def test_time_zero_returns_x(self, problem_a):
        out = pull_back(problem_a, 0.0, [0.77], [0.3])
        assert out[0] == 0.77

    def test_translation_pair_subtracts_flow_times(self, translations):
        lam = np.array([0.2, -0.1])
        t = 0.8
        tau, _ = flow_times(translations, lam, t)
        x = np.array([0.4, 0.3])
        out = pull_back(translations, t, x, lam)
        np.testing.assert_allclose(out, x - tau, atol=1e-12)

    def test_general_regime_unsupported(self, lemma1_general):
        with pytest.raises(UnsupportedRegimeError):
            pull_back(lemma1_general, 0.5, [0.2], [0.1])


class TestInvertPoint:
    def test_problem_a_recovers_parameter(self, problem_a):
        x = a_x_hat(0.5, 0.4)
        result = invert_point(problem_a, 0.5, [x])
        assert result.param[0] == pytest.approx(0.4, abs=1e-8)
        assert result.iterations <= 40
        assert result.residual <= 1e-12
        assert result.contained

    def test_time_zero_immediate(self, problem_a):
        result = invert_point(problem_a, 0.0, [0.6])
        assert result.param[0] == 0.6
        assert result.iterations <= 2

    def test_flat_surface_identity(self):
        spec = flat_spec()
        for t in (0.0, 0.7, 1.9):
            result = invert_point(spec, t, [0.5])
            assert result.param[0] == 0.5

    def test_modulus_below_bound(self, problem_a):
        rho = problem_a.validation().constants.rho
        result = invert_point(problem_a, 2.3, [0.4])
        assert result.modulus <= rho + 1e-6

    def test_geometric_residuals(self, problem_a):
        result = invert_point(problem_a, 1.7, [0.52], tol=1e-12)
        rho = problem_a.validation().constants.rho
        hist = result.residual_history
        for prev, cur in zip(hist, hist[1:]):
            if prev < 1e-11:  # float noise floor near the stopping tolerance
                break
            assert cur <= (rho + 0.05) * prev

    def test_resolvent_derivatives_match_finite_differences(self, problem_a):
        t, x = 1.2, 0.35
        result = invert_point(problem_a, t, [x])
        eps = 1e-6
        fd_x = (
            invert_point(problem_a, t, [x + eps]).param[0]
            - invert_point(problem_a, t, [x - eps]).param[0]
        ) / (2 * eps)
        assert result.dparam_dx[0, 0] == pytest.approx(fd_x, abs=1e-5)
        fd_t = (
            invert_point(problem_a, t + eps, [x]).param[0]
            - invert_point(problem_a, t - eps, [x]).param[0]
        ) / (2 * eps)
        assert result.dparam_dt[0] == pytest.approx(fd_t, abs=1e-4)


class TestRoundTrips:
    def test_forward_then_invert(self, problem_a):
        rng = np.random.default_rng(7)
        lams = (rng.uniform(-0.5, 0.5, size=12)).reshape(-1, 1)
        ts = rng.uniform(0.0, 5.0, size=12)
        fwd = solve_characteristics(problem_a, lams)
        x_fwd = fwd.states_at(ts)[:, fwd.layout.x]
        inv = invert_points(problem_a, ts, x_fwd)
        assert float(np.max(np.abs(inv.param - lams))) <= 1e-7

    def test_invert_then_forward(self, problem_a):
        rng = np.random.default_rng(8)
        xs = rng.uniform(-0.5, 0.5, size=12).reshape(-1, 1)
        ts = rng.uniform(0.0, 5.0, size=12)
        inv = invert_points(problem_a, ts, xs)
        back = solve_characteristics(problem_a, inv.param)
        x_back = back.states_at(ts)[:, back.layout.x]
        assert float(np.max(np.abs(x_back - xs))) <= 1e-7

    def test_translation_pair_round_trip(self, translations):
        rng = np.random.default_rng(9)
        lams = rng.uniform(-0.35, 0.35, size=(10, 2))
        ts = rng.uniform(0.0, 1.25, size=10)
        fwd = solve_characteristics(translations, lams)
        x_fwd = fwd.states_at(ts)[:, fwd.layout.x]
        inv = invert_points(translations, ts, x_fwd)
        assert float(np.max(np.abs(inv.param - lams))) <= 1e-7


class TestCandidateDerivative:
    def test_matches_central_difference(self, problem_a):
        # dV/dlam from the field/flow-time formula against a direct stencil
        t, x, lam = 1.3, 0.42, 0.37
        tau, dtau = flow_times(problem_a, [lam], t)
        v = pull_back(problem_a, t, [x], [lam])
        m = -(problem_a.g_value(0, v.reshape(1, -1))[0, 0] * dtau[0, 0])
        eps = 1e-5
        fd = (
            pull_back(problem_a, t, [x], [lam + eps])[0]
            - pull_back(problem_a, t, [x], [lam - eps])[0]
        ) / (2 * eps)
        assert m == pytest.approx(fd, abs=1e-5)


class TestTransportIdentity:
    def test_resolvent_derivatives_satisfy_transport(self, problem_a):
        # d(param)/dt + <d(param)/dx, g(x, u)> = 0 away from jumps
        from hjjumps.solver import u_at

        for t, x in [(0.7, 0.3), (1.3, -0.4), (2.2, 0.1)]:
            result = invert_point(problem_a, t, [x])
            sample = u_at(problem_a, t, [x])
            g_val = sample.u * x  # coupling u times field x
            residual = result.dparam_dt[0] + result.dparam_dx[0, 0] * g_val
            assert abs(residual) <= 1e-4

    def test_finite_difference_transport(self, problem_a):
        from hjjumps.solver import u_at

        t, x, eps = 1.1, 0.25, 1e-4
        psi = lambda tt, xx: invert_point(problem_a, tt, [xx]).param[0]
        dpsi_dt = (psi(t + eps, x) - psi(t - eps, x)) / (2 * eps)
        dpsi_dx = (psi(t, x + eps) - psi(t, x - eps)) / (2 * eps)
        sample = u_at(problem_a, t, [x])
        assert abs(dpsi_dt + dpsi_dx * sample.u * x) <= 1e-4
