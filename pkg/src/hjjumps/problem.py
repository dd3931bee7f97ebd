"""Problem instances, derived constants and hypothesis validation.

A problem bundles the scalar dissipation term L, the coupling coefficients
alpha_k with their spatial fields g_k, the jump response h, the initial
surface u0, an equilibrium (u*, x*) with a working ball radius gamma, and a
jump schedule.  Each instance declares a regime, which selects the set of
conditions that ``validate_hypotheses`` samples and the constants formula
used for the contraction modulus.

Regimes
-------
``lemma1-general``   weak dissipativity with x-dependent L and h; simulation
                     only (no inversion map, no parameter sensitivity).
``lemma3-strongL``   u-only terms, strictly increasing L, weak jump window.
``lemma4-strongjump`` u-only terms, strong jump window [-1, -1/2].
``theorem1``         single field vanishing at x*, strong window, local ball.
``theorem2``         two commuting fields, strong window, tighter modulus.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from . import exprlang, grids
from .exprlang import Expr
from .utils import row_norms

REGIMES = (
    "lemma1-general",
    "lemma3-strongL",
    "lemma4-strongjump",
    "theorem1",
    "theorem2",
)

STRONG_WINDOW_REGIMES = ("lemma4-strongjump", "theorem1", "theorem2")

# regimes whose hypotheses support the contraction-inversion pipeline
INVERTIBLE_REGIMES = ("lemma3-strongL", "lemma4-strongjump", "theorem1", "theorem2")


# ---------------------------------------------------------------------------
# schedule


class JumpSchedule:
    """Strictly increasing jump times with nonnegative magnitudes.

    ``times[0]`` is always 0 and carries the initial condition; jumps apply
    at ``times[1:]``.  ``d`` is the largest gap between consecutive event
    times, counting the tail from the last time to the horizon.
    """

    def __init__(self, times: Sequence[float], magnitudes: Sequence[Sequence[float]], horizon: float):
        times_arr = np.asarray(times, dtype=float)
        mags = np.asarray(magnitudes, dtype=float)
        if mags.ndim == 1:
            mags = mags.reshape(len(times_arr) - 1, -1) if len(times_arr) > 1 else mags.reshape(0, 1)
        if times_arr.ndim != 1 or len(times_arr) == 0 or times_arr[0] != 0.0:
            raise ValueError("schedule times must start at 0")
        if np.any(np.diff(times_arr) <= 0.0):
            raise ValueError("schedule times must be strictly increasing")
        if horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if len(mags) != len(times_arr) - 1:
            raise ValueError("need one magnitude vector per jump time after 0")
        if mags.size and np.any(mags < 0.0):
            raise ValueError("jump magnitudes must be nonnegative")
        if times_arr[-1] > horizon + 1e-12:
            raise ValueError("jump times beyond the horizon")
        self.times = times_arr
        self.magnitudes = mags
        self.horizon = float(horizon)

    @classmethod
    def periodic(cls, period: float, delta: Sequence[float], horizon: float) -> "JumpSchedule":
        if period <= 0.0:
            raise ValueError("period must be positive")
        count = int(np.floor(horizon / period + 1e-12))
        times = [0.0] + [j * period for j in range(1, count + 1)]
        mags = [list(delta)] * count
        return cls(times, mags, horizon)

    @property
    def jump_count(self) -> int:
        return len(self.times) - 1

    @property
    def d(self) -> float:
        gaps = list(np.diff(self.times)) + [self.horizon - self.times[-1]]
        return float(max(g for g in gaps if g > 0.0)) if any(g > 0 for g in gaps) else float(self.horizon)

    def interval_index(self, t: float) -> int:
        """Index j with times[j] <= t (< times[j+1]); right-continuous at jumps."""
        if t < 0.0 or t > self.horizon + 1e-12:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        return int(np.searchsorted(self.times, t, side="right") - 1)

    def interval_bounds(self, j: int) -> tuple[float, float]:
        start = float(self.times[j])
        end = float(self.times[j + 1]) if j + 1 < len(self.times) else self.horizon
        return start, end


# ---------------------------------------------------------------------------
# numerics knobs


@dataclass(frozen=True)
class NumericsConfig:
    step: float | None = None  # None: min(1e-3, d/100)
    tol: float = 1e-12
    max_iter: int = 200
    u_grid_points: int = 1001
    x_points_per_axis: int = 41
    u_grid_points_2d: int = 201  # u resolution when paired with an x grid
    lhs_points: int = 100_000
    lhs_seed: int = 0
    wide_halfwidth: float = 10.0
    commute_tol: float = 1e-8
    zero_tol: float = 1e-9
    residual_dt: float = 1e-4
    residual_dx: float = 1e-4

    def scaled(self, factor: int) -> "NumericsConfig":
        return replace(
            self,
            u_grid_points=grids.refine_points(self.u_grid_points, factor),
            x_points_per_axis=grids.refine_points(self.x_points_per_axis, factor),
            u_grid_points_2d=grids.refine_points(self.u_grid_points_2d, factor),
            lhs_points=self.lhs_points * factor,
        )


# ---------------------------------------------------------------------------
# problem spec


class ProblemSpec:
    """Immutable-by-convention description of one jump problem."""

    def __init__(
        self,
        name: str,
        regime: str,
        n: int,
        m: int,
        u_star: float,
        x_star: Sequence[float],
        gamma: float,
        L: Expr,
        alphas: Sequence[Expr],
        gfields: Sequence[Sequence[Expr]],
        h: Sequence[Expr],
        u0: Expr,
        schedule: JumpSchedule,
        numerics: NumericsConfig | None = None,
    ):
        if regime not in REGIMES:
            raise ValueError(f"unknown regime {regime!r}")
        if n < 1 or m < 1:
            raise ValueError("n and m must be at least 1")
        x_star_arr = np.asarray(x_star, dtype=float)
        if x_star_arr.shape != (n,):
            raise ValueError("x_star length must match n")
        if gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if len(alphas) != len(gfields) or not alphas:
            raise ValueError("need one spatial field per coupling coefficient")
        if regime == "theorem1" and len(alphas) != 1:
            raise ValueError("theorem1 regime uses exactly one field")
        if regime == "theorem2" and len(alphas) != 2:
            raise ValueError("theorem2 regime uses exactly two fields")
        for comps in gfields:
            if len(comps) != n:
                raise ValueError("each spatial field needs n components")
        if len(h) != m:
            raise ValueError("need m jump response components")
        if schedule.magnitudes.size and schedule.magnitudes.shape[1] != m:
            raise ValueError("jump magnitudes must have m components")

        self.name = name
        self.regime = regime
        self.n = n
        self.m = m
        self.u_star = float(u_star)
        self.x_star = x_star_arr
        self.gamma = float(gamma)
        self.L = L
        self.alphas = tuple(alphas)
        self.gfields = tuple(tuple(comps) for comps in gfields)
        self.h = tuple(h)
        self.u0 = u0
        self.schedule = schedule
        self.numerics = numerics or NumericsConfig()

        self.general_form = regime == "lemma1-general"
        self.x_vars = tuple(f"x{i + 1}" for i in range(n))
        lh_vars = ("u",) + self.x_vars if self.general_form else ("u",)
        self._check_vars(L, lh_vars, "L")
        for k, a in enumerate(self.alphas):
            self._check_vars(a, ("u",), f"alphas[{k}]")
        for k, comps in enumerate(self.gfields):
            for i, g in enumerate(comps):
                self._check_vars(g, self.x_vars, f"gfields[{k}][{i}]")
        for i, hi in enumerate(self.h):
            self._check_vars(hi, lh_vars, f"h[{i}]")
        self._check_vars(u0, self.x_vars, "u0")

        self._L_c = exprlang.compile_expr(L, lh_vars)
        self._alpha_c = tuple(exprlang.compile_expr(a, ("u",)) for a in self.alphas)
        self._g_c = tuple(
            tuple(exprlang.compile_expr(g, self.x_vars) for g in comps)
            for comps in self.gfields
        )
        self._h_c = tuple(exprlang.compile_expr(hi, lh_vars) for hi in self.h)
        self._u0_c = exprlang.compile_expr(u0, self.x_vars)
        self._report_cache: dict[int, "HypothesisReport"] = {}

    @staticmethod
    def _check_vars(expr: Expr, allowed: tuple[str, ...], where: str) -> None:
        extra = exprlang.free_variables(expr) - set(allowed)
        if extra:
            raise ValueError(
                f"{where} references {sorted(extra)[0]!r}; allowed variables: {allowed}"
            )

    # -- convenience -------------------------------------------------------

    @classmethod
    def from_strings(
        cls,
        name: str,
        regime: str,
        n: int,
        m: int,
        u_star: float,
        x_star: Sequence[float],
        gamma: float,
        L: str,
        alphas: Sequence[str],
        gfields: Sequence[Sequence[str]],
        h: Sequence[str],
        u0: str,
        schedule: JumpSchedule,
        numerics: NumericsConfig | None = None,
    ) -> "ProblemSpec":
        x_vars = [f"x{i + 1}" for i in range(n)]
        lh_vars = (["u"] + x_vars) if regime == "lemma1-general" else ["u"]
        return cls(
            name=name,
            regime=regime,
            n=n,
            m=m,
            u_star=u_star,
            x_star=x_star,
            gamma=gamma,
            L=exprlang.parse(L, lh_vars),
            alphas=[exprlang.parse(a, ["u"]) for a in alphas],
            gfields=[[exprlang.parse(g, x_vars) for g in comps] for comps in gfields],
            h=[exprlang.parse(hi, lh_vars) for hi in h],
            u0=exprlang.parse(u0, x_vars),
            schedule=schedule,
            numerics=numerics,
        )

    @property
    def field_count(self) -> int:
        return len(self.alphas)

    @property
    def u_range(self) -> tuple[float, float]:
        return self.u_star - 1.0, self.u_star + 1.0

    @property
    def invertible(self) -> bool:
        return self.regime in INVERTIBLE_REGIMES

    def step_size(self) -> float:
        if self.numerics.step is not None:
            return self.numerics.step
        return min(1e-3, self.schedule.d / 100.0)

    # -- vectorized evaluation helpers --------------------------------------

    def _lh_args(self, u: np.ndarray, x: np.ndarray | None):
        if not self.general_form:
            return (u,)
        if x is None:
            raise ValueError("x values required for x-dependent L/h")
        return (u, *(x[..., i] for i in range(self.n)))

    def L_value_deriv(self, u: np.ndarray, x: np.ndarray | None = None):
        """L and its u-derivative on a batch."""
        u = np.asarray(u, dtype=float)
        return exprlang.batch_value_and_deriv(self._L_c, self._lh_args(u, x), 0, u.shape)

    def alpha_values_derivs(self, u: np.ndarray):
        """Coupling coefficients and u-derivatives, shape (l, B) each."""
        u = np.asarray(u, dtype=float)
        vals, ders = [], []
        for c in self._alpha_c:
            v, dv = exprlang.batch_value_and_deriv(c, (u,), 0, u.shape)
            vals.append(v)
            ders.append(dv)
        return np.stack(vals), np.stack(ders)

    def h_values_derivs(self, u: np.ndarray, x: np.ndarray | None = None):
        """Jump responses and u-derivatives, shape (m, B) each."""
        u = np.asarray(u, dtype=float)
        args = self._lh_args(u, x)
        vals, ders = [], []
        for c in self._h_c:
            v, dv = exprlang.batch_value_and_deriv(c, args, 0, u.shape)
            vals.append(v)
            ders.append(dv)
        return np.stack(vals), np.stack(ders)

    def g_value(self, k: int, x: np.ndarray) -> np.ndarray:
        """Spatial field k at points x of shape (B, n), result (B, n)."""
        x = np.asarray(x, dtype=float)
        cols = tuple(x[..., i] for i in range(self.n))
        out = [exprlang.batch_value(c, cols, x.shape[:-1]) for c in self._g_c[k]]
        return np.stack(out, axis=-1)

    def g_jacobian(self, k: int, x: np.ndarray) -> np.ndarray:
        """Spatial Jacobian of field k, shape (B, n, n)."""
        x = np.asarray(x, dtype=float)
        cols = tuple(x[..., i] for i in range(self.n))
        jac = np.empty((*x.shape[:-1], self.n, self.n), dtype=float)
        for i, c in enumerate(self._g_c[k]):
            for j in range(self.n):
                _, dv = exprlang.batch_value_and_deriv(c, cols, j, x.shape[:-1])
                jac[..., i, j] = dv
        return jac

    def u0_value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = tuple(x[..., i] for i in range(self.n))
        return exprlang.batch_value(self._u0_c, cols, x.shape[:-1])

    def u0_gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = tuple(x[..., i] for i in range(self.n))
        grad = np.empty_like(x)
        for j in range(self.n):
            _, dv = exprlang.batch_value_and_deriv(self._u0_c, cols, j, x.shape[:-1])
            grad[..., j] = dv
        return grad

    # -- validation ----------------------------------------------------------

    def validation(self, scale: int = 1) -> "HypothesisReport":
        report = self._report_cache.get(scale)
        if report is None:
            report = validate_hypotheses(self, scale)
            self._report_cache[scale] = report
        return report


# ---------------------------------------------------------------------------
# constants


@dataclass(frozen=True)
class Constants:
    """Sampled extrema feeding the contraction and containment conditions.

    c1     largest coupling slope sum  max_u sum_k |alpha_k'(u)|
    c2     largest field magnitude sum over the regime's spatial sample
    k0     sup |u0|, k1: sup |grad u0| (wide box, standing in for R^n)
    d      largest inter-event gap of the schedule
    beta   flow-time budget 2 d c1
    rho    contraction modulus bound for the regime
    delta  jump dissipativity margin  -max_u sum_i dh_i/du
    gamma_l  smallest dL/du (strong-dissipativity floor)
    """

    c1: float
    c2: float
    k0: float
    k1: float
    d: float
    beta: float
    rho: float
    delta: float
    gamma_l: float
    u_grid_points: int
    x_points_per_axis: int
    wide_halfwidth: float
    lhs_seed: int


def _u_grid(spec: ProblemSpec, cfg: NumericsConfig) -> np.ndarray:
    a, b = spec.u_range
    return grids.interval_grid(a, b, cfg.u_grid_points)


def _c2_sample(spec: ProblemSpec, cfg: NumericsConfig) -> np.ndarray:
    if spec.regime == "theorem1":
        return grids.ball_sample(
            spec.x_star, spec.gamma, cfg.x_points_per_axis, cfg.lhs_points, cfg.lhs_seed
        )
    if spec.regime == "theorem2":
        return grids.ball_sample(
            spec.x_star, 3.0 * spec.gamma, cfg.x_points_per_axis, cfg.lhs_points, cfg.lhs_seed
        )
    # lemma regimes: the bounded-field constants are global sups
    return grids.wide_grid(
        spec.x_star, cfg.wide_halfwidth, cfg.x_points_per_axis, cfg.lhs_points, cfg.lhs_seed
    )


def derive_constants(spec: ProblemSpec, scale: int = 1) -> Constants:
    """Grid maxima for the regime's constants; see :class:`Constants`."""
    cfg = spec.numerics.scaled(scale) if scale != 1 else spec.numerics
    ug = _u_grid(spec, cfg)

    _, alpha_d = spec.alpha_values_derivs(ug)
    c1 = float(np.max(np.sum(np.abs(alpha_d), axis=0)))

    xg = _c2_sample(spec, cfg)
    gsum = np.zeros(len(xg))
    for k in range(spec.field_count):
        gsum += row_norms(spec.g_value(k, xg))
    c2 = float(np.max(gsum))

    wide = grids.wide_grid(
        spec.x_star, cfg.wide_halfwidth, cfg.x_points_per_axis, cfg.lhs_points, cfg.lhs_seed
    )
    k0 = float(np.max(np.abs(spec.u0_value(wide))))
    k1 = float(np.max(row_norms(spec.u0_gradient(wide))))

    if spec.general_form:
        u2 = grids.interval_grid(*spec.u_range, cfg.u_grid_points_2d)
        uu, xx = _product_grid(u2, wide)
        _, l_d = spec.L_value_deriv(uu, xx)
        _, h_d = spec.h_values_derivs(uu, xx)
    else:
        _, l_d = spec.L_value_deriv(ug)
        _, h_d = spec.h_values_derivs(ug)
    gamma_l = float(np.min(l_d))
    delta = float(-np.max(np.sum(h_d, axis=0)))

    d = spec.schedule.d
    beta = 2.0 * d * c1
    if spec.regime == "lemma3-strongL":
        rho = c1 * c2 * k1 / gamma_l if gamma_l > 0.0 else float("inf")
    else:
        rho = 2.0 * d * c1 * c2 * k1
    return Constants(
        c1=c1,
        c2=c2,
        k0=k0,
        k1=k1,
        d=d,
        beta=beta,
        rho=rho,
        delta=delta,
        gamma_l=gamma_l,
        u_grid_points=cfg.u_grid_points,
        x_points_per_axis=cfg.x_points_per_axis,
        wide_halfwidth=cfg.wide_halfwidth,
        lhs_seed=cfg.lhs_seed,
    )


def _product_grid(u: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All (u, x) pairs: u repeated per point, x tiled per u value."""
    uu = np.repeat(u, len(x))
    xx = np.tile(x, (len(u), 1))
    return uu, xx


# ---------------------------------------------------------------------------
# hypothesis report


@dataclass(frozen=True)
class Condition:
    id: str
    description: str
    value: float
    bound: float
    strict: bool = False
    witness: Mapping | None = None

    @property
    def margin(self) -> float:
        return self.bound - self.value

    @property
    def passed(self) -> bool:
        if self.strict:
            return self.margin > 0.0
        return self.margin >= -1e-12


@dataclass(frozen=True)
class HypothesisReport:
    regime: str
    conditions: tuple[Condition, ...]
    constants: Constants

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def tightest_margin(self) -> float:
        return min(c.margin for c in self.conditions)

    def condition(self, cid: str) -> Condition:
        for c in self.conditions:
            if c.id == cid:
                return c
        raise KeyError(cid)


def _argmax_witness(values: np.ndarray, ug: np.ndarray | None, xg: np.ndarray | None):
    i = int(np.argmax(values))
    witness: dict = {}
    if ug is not None:
        witness["u"] = float(ug[i])
    if xg is not None:
        witness["x"] = [float(v) for v in np.atleast_2d(xg)[i]]
    return i, witness


def validate_hypotheses(spec: ProblemSpec, scale: int = 1) -> HypothesisReport:
    """Sample every condition of the problem's regime and report pass/fail.

    Violations never raise; each condition entry carries the worst sampled
    value, the bound it is compared against and the witness point.
    """
    cfg = spec.numerics.scaled(scale) if scale != 1 else spec.numerics
    constants = derive_constants(spec, scale)
    ztol = cfg.zero_tol
    conds: list[Condition] = []
    u_star, x_star = spec.u_star, spec.x_star
    regime = spec.regime

    if spec.general_form:
        wide = grids.wide_grid(
            x_star, cfg.wide_halfwidth, cfg.x_points_per_axis, cfg.lhs_points, cfg.lhs_seed
        )
        u2 = grids.interval_grid(*spec.u_range, cfg.u_grid_points_2d)
        uu, xx = _product_grid(u2, wide)
        ustar_arr = np.full(len(wide), u_star)
        l_at_star, _ = spec.L_value_deriv(ustar_arr, wide)
        _, witness = _argmax_witness(np.abs(l_at_star), None, wide)
        conds.append(
            Condition(
                "L-vanishes",
                "L(x, u*) = 0",
                float(np.max(np.abs(l_at_star))),
                ztol,
                witness=witness,
            )
        )
        _, l_d = spec.L_value_deriv(uu, xx)
        _, witness = _argmax_witness(-l_d, uu, xx)
        conds.append(
            Condition("L-monotone", "dL/du >= 0", float(-np.min(l_d)), 0.0, witness=witness)
        )
        h_at_star, _ = spec.h_values_derivs(ustar_arr, wide)
        worst = np.max(np.abs(h_at_star), axis=0)
        _, witness = _argmax_witness(worst, None, wide)
        conds.append(
            Condition("h-vanishes", "h_i(x, u*) = 0", float(np.max(worst)), ztol, witness=witness)
        )
        _, h_d = spec.h_values_derivs(uu, xx)
        worst = np.max(h_d, axis=0)
        _, witness = _argmax_witness(worst, uu, xx)
        conds.append(
            Condition("h-monotone", "dh_i/du <= 0", float(np.max(worst)), 0.0, witness=witness)
        )
        window_u, window_x, window_hd = uu, xx, h_d
    else:
        ug = _u_grid(spec, cfg)
        l_star, _ = spec.L_value_deriv(np.array([u_star]))
        conds.append(
            Condition("L-vanishes", "L(u*) = 0", abs(float(l_star[0])), ztol, witness={"u": u_star})
        )
        _, l_d = spec.L_value_deriv(ug)
        if regime == "lemma3-strongL":
            i = int(np.argmin(l_d))
            conds.append(
                Condition(
                    "L-strong-dissipative",
                    "dL/du >= gamma_L > 0",
                    float(-l_d[i]),
                    0.0,
                    strict=True,
                    witness={"u": float(ug[i])},
                )
            )
        else:
            i = int(np.argmin(l_d))
            conds.append(
                Condition(
                    "L-monotone", "dL/du >= 0", float(-l_d[i]), 0.0, witness={"u": float(ug[i])}
                )
            )
        alpha_star, _ = spec.alpha_values_derivs(np.array([u_star]))
        conds.append(
            Condition(
                "alpha-vanishes",
                "alpha_k(u*) = 0",
                float(np.max(np.abs(alpha_star))),
                ztol,
                witness={"u": u_star},
            )
        )
        h_star, _ = spec.h_values_derivs(np.array([u_star]))
        conds.append(
            Condition(
                "h-vanishes",
                "h_i(u*) = 0",
                float(np.max(np.abs(h_star))),
                ztol,
                witness={"u": u_star},
            )
        )
        _, h_d = spec.h_values_derivs(ug)
        worst = np.max(h_d, axis=0)
        i = int(np.argmax(worst))
        conds.append(
            Condition(
                "h-monotone", "dh_i/du <= 0", float(worst[i]), 0.0, witness={"u": float(ug[i])}
            )
        )
        window_u, window_x, window_hd = ug, None, h_d

    if regime in ("lemma4-strongjump", "theorem1", "theorem2"):
        sums = np.sum(window_hd, axis=0)
        i = int(np.argmax(sums))
        witness = {"u": float(window_u[i])}
        conds.append(
            Condition(
                "h-sum-negative",
                "sum_i dh_i/du <= -delta < 0",
                float(sums[i]),
                0.0,
                strict=True,
                witness=witness,
            )
        )

    conds.append(
        Condition("u0-bound", "sup |u0| = K0 < 1", constants.k0, 1.0, strict=True)
    )

    if regime == "theorem1":
        g_star = row_norms(spec.g_value(0, x_star.reshape(1, -1)))[0]
        conds.append(
            Condition(
                "g-vanishes-at-center",
                "g(x*) = 0",
                float(g_star),
                ztol,
                witness={"x": [float(v) for v in x_star]},
            )
        )
    if regime == "theorem2":
        u0_star = float(spec.u0_value(x_star.reshape(1, -1))[0])
        conds.append(
            Condition(
                "u0-vanishes-at-center",
                "u0(x*) = 0",
                abs(u0_star),
                ztol,
                witness={"x": [float(v) for v in x_star]},
            )
        )

    # contraction modulus and flow-domain budgets
    if regime != "lemma1-general":
        rho_bound = 0.5 if regime == "theorem2" else 1.0
        conds.append(
            Condition(
                "contraction-modulus",
                f"rho < {rho_bound}",
                constants.rho,
                rho_bound,
                strict=True,
            )
        )
    if regime == "theorem1":
        conds.append(
            Condition(
                "flow-domain",
                "2 d c1 c2 <= gamma",
                2.0 * constants.d * constants.c1 * constants.c2,
                spec.gamma,
            )
        )
    if regime == "theorem2":
        conds.append(
            Condition(
                "flow-domain",
                "beta c2 <= gamma / 2",
                constants.beta * constants.c2,
                spec.gamma / 2.0,
            )
        )

    # jump window over every scheduled jump and sampled u (and x when general)
    mags = spec.schedule.magnitudes
    if len(mags):
        window = mags @ window_hd  # (J, P)
        strong = regime in STRONG_WINDOW_REGIMES
        upper_bound = -0.5 if strong else 0.0
        ju, pu = np.unravel_index(int(np.argmax(window)), window.shape)
        witness_u = {"u": float(window_u[pu]), "j": int(ju + 1)}
        if window_x is not None:
            witness_u["x"] = [float(v) for v in np.atleast_2d(window_x)[pu]]
        conds.append(
            Condition(
                "jump-window-upper",
                f"<dh/du, dy(t_j)> <= {upper_bound}",
                float(window[ju, pu]),
                upper_bound,
                witness=witness_u,
            )
        )
        jl, pl = np.unravel_index(int(np.argmin(window)), window.shape)
        witness_l = {"u": float(window_u[pl]), "j": int(jl + 1)}
        if window_x is not None:
            witness_l["x"] = [float(v) for v in np.atleast_2d(window_x)[pl]]
        conds.append(
            Condition(
                "jump-window-lower",
                "<dh/du, dy(t_j)> >= -1",
                float(-window[jl, pl]),
                1.0,
                witness=witness_l,
            )
        )

    if regime == "theorem2":
        from . import flow  # local import to avoid a module cycle

        commute = flow.check_commute(
            spec, 0, 1, tol=cfg.commute_tol, scale=scale, flow_span=constants.beta
        )
        conds.append(
            Condition(
                "fields-commute-bracket",
                "max |[g_1, g_2]| on the 3-gamma ball <= tol",
                commute.max_bracket_norm,
                cfg.commute_tol,
                witness={"x": [float(v) for v in commute.bracket_witness]},
            )
        )
        conds.append(
            Condition(
                "fields-commute-flow-order",
                "flow composition order invariance",
                commute.max_flow_order_deviation,
                10.0 * cfg.commute_tol,
            )
        )

    return HypothesisReport(regime=regime, conditions=tuple(conds), constants=constants)
