"""Recover the start parameter of the characteristic through (t, x).

The forward map lam -> x(t; lam) is inverted through its flow
representation: with tau_k(t; lam) the accumulated flow times, the
candidate

    pull_back(t, x; lam) = G_l(-tau_l) o ... o G_1(-tau_1) [x]

is a contraction in lam whose fixed point is the start parameter.  Plain
Picard iteration from lam_0 = x* is used; every iterate re-solves the
scalar characteristic subsystem for the current lam to refresh the flow
times, and convergence is geometric with ratio bounded by the problem's
contraction modulus.

Derivatives of the fixed point come from the resolvent form

    dpsi = (I - M)^{-1} dV,       M = dV/dlam = -sum_k g_k(V) (dtau_k)^T

with dV/dx the composed flow Jacobian and dV/dt by a one-sided difference
that never crosses a jump time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import flow as flowmod
from .characteristics import CharacteristicPath, solve_characteristic, solve_characteristics
from .errors import (
    ContainmentWarning,
    MaxIterError,
    NonContractionError,
    UnsupportedRegimeError,
)
from .problem import ProblemSpec
from .utils import row_norms

DT_PROBE = 1e-5  # one-sided time-difference step for dV/dt


def _require_invertible(spec: ProblemSpec) -> None:
    if not spec.invertible:
        raise UnsupportedRegimeError(
            f"regime {spec.regime!r} has no inversion map (x-dependent L or h)"
        )
    if spec.field_count > 2:
        raise UnsupportedRegimeError("inversion supports at most two fields")
    if spec.field_count == 2 and spec.regime != "theorem2":
        raise UnsupportedRegimeError(
            "two-field inversion relies on the commuting-flow representation; "
            "declare the problem under the theorem2 regime"
        )


def flow_times(
    spec: ProblemSpec,
    lam: np.ndarray,
    t: float,
    path: CharacteristicPath | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulated flow times tau_k(t; lam) and their lam-gradients.

    A pre-solved path covering [0, t] may be passed to avoid re-solving.
    """
    if path is None:
        path = solve_characteristic(spec, lam, T=min(float(t), spec.schedule.horizon))
    elif t > path.horizon + 1e-12:
        raise ValueError(f"t={t} beyond the stored horizon {path.horizon}")
    return path.flow_times(t), path.flow_time_gradients(t)


def _compose_flows(spec: ProblemSpec, taus: np.ndarray, xs: np.ndarray) -> np.ndarray:
    y = xs
    for k in range(spec.field_count):
        y = flowmod.flow_map_batch(spec, k, -taus[:, k], y, check_containment=False)
    return y


def _modulus(spec: ProblemSpec, v: np.ndarray, dtau: np.ndarray) -> np.ndarray:
    m = np.zeros((len(v), spec.n, spec.n))
    for k in range(spec.field_count):
        m -= spec.g_value(k, v)[:, :, None] * dtau[:, k, None, :]
    return m


def _spectral_norm(m: np.ndarray) -> np.ndarray:
    return np.linalg.svd(m, compute_uv=False)[:, 0]


def pull_back(
    spec: ProblemSpec,
    t: float,
    x: np.ndarray,
    lam: np.ndarray,
    path: CharacteristicPath | None = None,
) -> np.ndarray:
    """Candidate parameter G_l(-tau_l) o ... o G_1(-tau_1)[x] at one point."""
    _require_invertible(spec)
    taus, _ = flow_times(spec, lam, t, path)
    out = _compose_flows(spec, taus.reshape(1, -1), np.asarray(x, dtype=float).reshape(1, -1))[0]
    radius = flowmod.containment_radius(spec)
    if radius is not None and float(row_norms(out - spec.x_star)) > radius + 1e-9:
        warnings.warn(
            "pulled-back point left the containment ball", ContainmentWarning, stacklevel=2
        )
    return out


@dataclass
class BatchInversion:
    """Vectorized inversion output for B query points."""

    ts: np.ndarray
    xs: np.ndarray
    param: np.ndarray  # (B, n) recovered start parameters
    iterations: np.ndarray
    residual: np.ndarray
    modulus: np.ndarray  # max |dV/dlam| observed per row (spectral norm)
    dparam_dt: np.ndarray
    dparam_dx: np.ndarray  # (B, n, n); [b, a, i] = d param_a / d x_i
    u_value: np.ndarray  # scalar characteristic at (t, param)
    u_sensitivity: np.ndarray  # (B, n)
    contained: np.ndarray
    max_flow_time: float
    residual_history: list[np.ndarray]

    @property
    def size(self) -> int:
        return len(self.param)


@dataclass
class InversionResult:
    """Single-point inversion output; see :class:`BatchInversion`."""

    param: np.ndarray
    iterations: int
    residual: float
    modulus: float
    dparam_dt: np.ndarray
    dparam_dx: np.ndarray
    u_value: float
    u_sensitivity: np.ndarray
    contained: bool
    max_flow_time: float
    residual_history: list[float]


def invert_points(
    spec: ProblemSpec,
    ts: np.ndarray,
    xs: np.ndarray,
    tol: float | None = None,
    max_iter: int | None = None,
) -> BatchInversion:
    """Solve the fixed-point equation at every (ts[i], xs[i]) in lockstep.

    Raises MaxIterError when any row fails to converge, NonContractionError
    when an observed modulus reaches 1 and numpy's LinAlgError when the
    resolvent is singular.  Query points outside the gamma ball of a
    validated problem only warn; results there are best-effort.
    """
    _require_invertible(spec)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if len(ts) != len(xs):
        raise ValueError("need one time per query point")
    tol = tol if tol is not None else spec.numerics.tol
    max_iter = max_iter if max_iter is not None else spec.numerics.max_iter
    nrows, n = xs.shape
    lay_fields = spec.field_count

    report = spec.validation()
    if not report.passed:
        warnings.warn(
            f"hypotheses for {spec.name!r} are not satisfied; inversion is best-effort",
            stacklevel=2,
        )
    elif np.any(row_norms(xs - spec.x_star) > spec.gamma + 1e-9):
        warnings.warn(
            "query point outside the gamma ball; inversion is best-effort",
            ContainmentWarning,
            stacklevel=2,
        )

    tmax = float(np.max(ts))
    lam = np.tile(spec.x_star, (nrows, 1))
    iterations = np.zeros(nrows, dtype=int)
    done = np.zeros(nrows, dtype=bool)
    modulus = np.zeros(nrows)
    max_flow_time = 0.0
    history: list[np.ndarray] = []

    for it in range(1, max_iter + 1):
        batch = solve_characteristics(spec, lam, T=tmax, include_x=False)
        states = batch.states_at(ts)
        _, _, _, tau, dtau = batch.split(states)
        max_flow_time = max(max_flow_time, float(np.max(np.abs(tau))) if tau.size else 0.0)
        v = _compose_flows(spec, tau, xs)
        mod = _spectral_norm(_modulus(spec, v, dtau))
        modulus = np.maximum(modulus, mod)
        if np.any(mod >= 1.0):
            raise NonContractionError(float(np.max(mod)))
        res = row_norms(v - lam)
        history.append(res)
        newly = ~done & (res <= tol)
        iterations[newly] = it
        done |= newly
        lam = v
        if bool(done.all()):
            break
    else:
        raise MaxIterError(max_iter, float(np.max(res)))

    # final pass at the fixed point: fresh characteristic solve for the
    # reported residual, modulus, scalar value and resolvent derivatives
    probe = DT_PROBE
    hmax = min(spec.schedule.horizon, tmax + 2.0 * probe)
    batch = solve_characteristics(spec, lam, T=hmax, include_x=False)
    states = batch.states_at(ts)
    _, u_val, du, tau, dtau = batch.split(states)
    v = _compose_flows(spec, tau, xs)
    residual = row_norms(v - lam)
    m = _modulus(spec, v, dtau)
    modulus = np.maximum(modulus, _spectral_norm(m))

    jac = np.broadcast_to(np.eye(n), (nrows, n, n)).copy()
    y = xs
    for k in range(lay_fields):
        y, jk = flowmod.flow_with_jacobian_batch(spec, k, -tau[:, k], y)
        jac = jk @ jac

    event_times = spec.schedule.times
    fwd_interval = np.searchsorted(event_times, ts + probe, side="right")
    cur_interval = np.searchsorted(event_times, ts, side="right")
    sign = np.where((fwd_interval == cur_interval) & (ts + probe <= hmax), 1.0, -1.0)
    states_probe = batch.states_at(ts + sign * probe)
    _, _, _, tau_probe, _ = batch.split(states_probe)
    v_probe = _compose_flows(spec, tau_probe, xs)
    dv_dt = (v_probe - v) / (sign * probe)[:, None]

    resolvent = np.broadcast_to(np.eye(n), (nrows, n, n)) - m
    dparam_dx = np.linalg.solve(resolvent, jac)
    dparam_dt = np.linalg.solve(resolvent, dv_dt[:, :, None])[:, :, 0]

    contained = row_norms(lam - spec.x_star) <= 2.0 * spec.gamma + 1e-9
    if report.passed:
        if not bool(np.all(contained)):
            warnings.warn(
                "fixed point left the 2-gamma ball on a validated problem",
                ContainmentWarning,
                stacklevel=2,
            )
        if max_flow_time > report.constants.beta + 1e-9:
            warnings.warn(
                f"flow time {max_flow_time:.6g} exceeded the budget "
                f"{report.constants.beta:.6g} on a validated problem",
                ContainmentWarning,
                stacklevel=2,
            )

    return BatchInversion(
        ts=ts,
        xs=xs,
        param=lam,
        iterations=iterations,
        residual=residual,
        modulus=modulus,
        dparam_dt=dparam_dt,
        dparam_dx=dparam_dx,
        u_value=u_val,
        u_sensitivity=du,
        contained=contained,
        max_flow_time=max_flow_time,
        residual_history=history,
    )


def invert_point(
    spec: ProblemSpec,
    t: float,
    x: np.ndarray,
    tol: float | None = None,
    max_iter: int | None = None,
) -> InversionResult:
    """Single-point inversion; the batched variant does the work."""
    batch = invert_points(
        spec,
        np.array([float(t)]),
        np.asarray(x, dtype=float).reshape(1, -1),
        tol=tol,
        max_iter=max_iter,
    )
    return InversionResult(
        param=batch.param[0],
        iterations=int(batch.iterations[0]),
        residual=float(batch.residual[0]),
        modulus=float(batch.modulus[0]),
        dparam_dt=batch.dparam_dt[0],
        dparam_dx=batch.dparam_dx[0],
        u_value=float(batch.u_value[0]),
        u_sensitivity=batch.u_sensitivity[0],
        contained=bool(batch.contained[0]),
        max_flow_time=batch.max_flow_time,
        residual_history=[float(r[0]) for r in batch.residual_history],
    )
