"""Flow maps of the spatial fields, their Jacobians and Lie brackets.

The time-sigma flow of field k solves dy/ds = g_k(y) from y(0) = x.  Flows
are computed by direct RK4 integration on a unit pseudo-time grid scaled by
sigma, which lets a whole batch of points with individual flow times share
one integration loop.  Spatial Jacobians ride along as variational state.

Points leaving the containment ball their regime guarantees raise a
:class:`ContainmentWarning`, never an error, so exploratory runs on
unvalidated problems keep going.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import grids
from .errors import ContainmentWarning
from .integrate import OdeSystem, integrate_path
from .problem import ProblemSpec
from .utils import row_norms


def containment_radius(spec: ProblemSpec) -> float | None:
    """Radius around x* the regime's flow queries are expected to stay in."""
    if spec.regime == "theorem1":
        return 2.0 * spec.gamma
    if spec.regime == "theorem2":
        return 3.0 * spec.gamma
    return None


def _warn_if_outside(spec: ProblemSpec, pts: np.ndarray) -> None:
    radius = containment_radius(spec)
    if radius is None:
        return
    worst = float(np.max(row_norms(np.atleast_2d(pts) - spec.x_star)))
    if worst > radius + 1e-9:
        warnings.warn(
            f"flow result left the containment ball (|y - x*| = {worst:.6g} "
            f"> {radius:.6g})",
            ContainmentWarning,
            stacklevel=3,
        )


def flow_map_batch(
    spec: ProblemSpec,
    k: int,
    sigmas: np.ndarray,
    xs: np.ndarray,
    step: float | None = None,
    check_containment: bool = True,
) -> np.ndarray:
    """Flow each row of xs for its own time sigmas[i]; shape (B, n) -> (B, n)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    sigmas = np.broadcast_to(np.asarray(sigmas, dtype=float), xs.shape[:1]).copy()
    span = float(np.max(np.abs(sigmas)))
    if span == 0.0:
        return xs.copy()
    step = step if step is not None else spec.step_size()
    scale = sigmas[:, None]

    def rhs(_s, y):
        return scale * spec.g_value(k, y)

    system = OdeSystem(dim=spec.n, rhs=rhs)
    out = integrate_path(system, xs, 0.0, 1.0, min(1.0, step / span)).end
    if check_containment:
        _warn_if_outside(spec, out)
    return out


def flow_map(spec: ProblemSpec, k: int, sigma: float, x: np.ndarray) -> np.ndarray:
    """Point of the field-k flow after time sigma (backward when negative)."""
    return flow_map_batch(spec, k, np.array([sigma]), np.asarray(x, dtype=float).reshape(1, -1))[0]


def flow_with_jacobian_batch(
    spec: ProblemSpec,
    k: int,
    sigmas: np.ndarray,
    xs: np.ndarray,
    step: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Flow endpoints plus d(endpoint)/d(start), shapes (B, n) and (B, n, n)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    b, n = xs.shape
    sigmas = np.broadcast_to(np.asarray(sigmas, dtype=float), (b,)).copy()
    span = float(np.max(np.abs(sigmas)))
    eye = np.broadcast_to(np.eye(n), (b, n, n)).copy()
    if span == 0.0:
        return xs.copy(), eye
    step = step if step is not None else spec.step_size()
    scale = sigmas[:, None]

    def rhs(_s, state):
        y = state[:, :n]
        jac = state[:, n:].reshape(b, n, n)
        dy = scale * spec.g_value(k, y)
        djac = scale[:, :, None] * (spec.g_jacobian(k, y) @ jac)
        return np.concatenate([dy, djac.reshape(b, n * n)], axis=1)

    state0 = np.concatenate([xs, eye.reshape(b, n * n)], axis=1)
    system = OdeSystem(dim=n + n * n, rhs=rhs)
    end = integrate_path(system, state0, 0.0, 1.0, min(1.0, step / span)).end
    return end[:, :n], end[:, n:].reshape(b, n, n)


def flow_jacobian(spec: ProblemSpec, k: int, sigma: float, x: np.ndarray) -> np.ndarray:
    """Spatial Jacobian of the sigma-time flow map at x."""
    _, jac = flow_with_jacobian_batch(
        spec, k, np.array([sigma]), np.asarray(x, dtype=float).reshape(1, -1)
    )
    return jac[0]


def lie_bracket(spec: ProblemSpec, k1: int, k2: int, x: np.ndarray) -> np.ndarray:
    """[g_k1, g_k2](x) = Dg_k1(x) g_k2(x) - Dg_k2(x) g_k1(x)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    j1 = spec.g_jacobian(k1, pts)
    j2 = spec.g_jacobian(k2, pts)
    v1 = spec.g_value(k1, pts)[..., None]
    v2 = spec.g_value(k2, pts)[..., None]
    out = (j1 @ v2 - j2 @ v1)[..., 0]
    return out[0] if np.asarray(x).ndim == 1 else out


@dataclass(frozen=True)
class CommuteReport:
    max_bracket_norm: float
    bracket_witness: tuple[float, ...]
    bracket_passed: bool
    max_flow_order_deviation: float
    flow_order_passed: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.bracket_passed and self.flow_order_passed


def check_commute(
    spec: ProblemSpec,
    k1: int,
    k2: int,
    tol: float | None = None,
    scale: int = 1,
    flow_span: float | None = None,
    pair_count: int = 16,
    rng_seed: int = 0,
) -> CommuteReport:
    """Sample the bracket on the 3-gamma ball and probe flow-order invariance.

    Single-field problems pass vacuously.  The flow-order probe composes the
    two flows in both orders for random time pairs within the flow budget
    and allows 10x the bracket tolerance.
    """
    cfg = spec.numerics.scaled(scale) if scale != 1 else spec.numerics
    tol = tol if tol is not None else cfg.commute_tol
    if spec.field_count < 2 or k1 == k2:
        return CommuteReport(0.0, tuple(float(v) for v in spec.x_star), True, 0.0, True, tol)

    region = grids.ball_sample(
        spec.x_star, 3.0 * spec.gamma, cfg.x_points_per_axis, cfg.lhs_points, cfg.lhs_seed
    )
    norms = row_norms(lie_bracket(spec, k1, k2, region))
    worst = int(np.argmax(norms))
    max_bracket = float(norms[worst])

    if flow_span is None:
        from .problem import derive_constants

        flow_span = derive_constants(spec, scale).beta
    rng = np.random.default_rng(rng_seed)
    xs = region[:: max(1, len(region) // 8)]
    max_dev = 0.0
    for _ in range(pair_count):
        s1, s2 = rng.uniform(-flow_span, flow_span, size=2)
        fwd = flow_map_batch(
            spec, k2, np.full(len(xs), s2),
            flow_map_batch(spec, k1, np.full(len(xs), s1), xs, check_containment=False),
            check_containment=False,
        )
        rev = flow_map_batch(
            spec, k1, np.full(len(xs), s1),
            flow_map_batch(spec, k2, np.full(len(xs), s2), xs, check_containment=False),
            check_containment=False,
        )
        max_dev = max(max_dev, float(np.max(row_norms(fwd - rev))))

    return CommuteReport(
        max_bracket_norm=max_bracket,
        bracket_witness=tuple(float(v) for v in region[worst]),
        bracket_passed=max_bracket <= tol,
        max_flow_order_deviation=max_dev,
        flow_order_passed=max_dev <= 10.0 * tol,
        tol=tol,
    )
