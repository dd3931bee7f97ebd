"""Characteristic trajectories with scheduled jumps.

Between events the state follows

    dx/dt = sum_k alpha_k(u) g_k(x),      du/dt = -L(u)            (u-only)
    dx/dt = sum_k alpha_k(u) g_k(x),      du/dt = -L(x, u)         (general)

and at each event time t_j (j >= 1) the scalar component jumps by
<h(u-), dy(t_j)> while x stays continuous.  Stored trajectories are
right-continuous: the value held at t_j is the post-jump value.

Alongside u the solver carries, in the same RK4 pass,

* the start-point sensitivity du/dlam, whose jump factor is
  1 + <dh/du(u-), dy(t_j)> (u-only regimes),
* the accumulated flow times tau_k(t) = integral of alpha_k(u(s)) ds and
  their lam-gradients, as quadrature state of the same order as the
  integrator.

For the general regime (x-dependent L, h) the sensitivity would need the
spatial derivative of h along the path, so it is reported unavailable and
only (x, u, tau) are propagated.

Everything is batched: B start points integrate in lockstep through shared
numpy operations, and per-row times can be queried from the stored nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RangeViolationError, UnsupportedRegimeError
from .integrate import OdeSystem, Trajectory, integrate_path
from .problem import ProblemSpec


@dataclass(frozen=True)
class StateLayout:
    """Column layout of the packed characteristic state."""

    n: int
    fields: int
    include_x: bool
    has_sensitivity: bool

    @property
    def x(self) -> slice:
        return slice(0, self.n if self.include_x else 0)

    @property
    def u(self) -> int:
        return self.n if self.include_x else 0

    @property
    def du(self) -> slice:
        start = self.u + 1
        width = self.n if self.has_sensitivity else 0
        return slice(start, start + width)

    @property
    def tau(self) -> slice:
        start = self.du.stop
        return slice(start, start + self.fields)

    @property
    def dtau(self) -> slice:
        start = self.tau.stop
        width = self.fields * self.n if self.has_sensitivity else 0
        return slice(start, start + width)

    @property
    def dim(self) -> int:
        return self.dtau.stop


class CharacteristicBatch:
    """Lockstep-solved characteristics for B start points."""

    def __init__(
        self,
        spec: ProblemSpec,
        lams: np.ndarray,
        layout: StateLayout,
        horizon: float,
        segments: list[Trajectory],
        segment_starts: np.ndarray,
        jumps: list[tuple[int, np.ndarray, np.ndarray]],
    ):
        self.spec = spec
        self.lams = lams
        self.layout = layout
        self.horizon = horizon
        self.segments = segments
        self.segment_starts = segment_starts
        self.jumps = jumps  # (event index, u before, u after)

    @property
    def size(self) -> int:
        return len(self.lams)

    def _segment_index(self, ts: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.segment_starts, ts, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def states_at(self, ts: np.ndarray) -> np.ndarray:
        """Per-row state at per-row times, (B,) -> (B, dim); right-continuous."""
        ts = np.asarray(ts, dtype=float)
        if ts.shape != (self.size,):
            raise ValueError("need one query time per solved start point")
        if np.any(ts < -1e-12) or np.any(ts > self.horizon + 1e-9):
            raise ValueError("query time outside the solved span")
        out = np.empty((self.size, self.layout.dim), dtype=float)
        seg_idx = self._segment_index(ts)
        for s in np.unique(seg_idx):
            rows = np.nonzero(seg_idx == s)[0]
            traj = self.segments[s]
            out[rows] = traj.rows_at(np.clip(ts[rows], traj.t0, traj.t1), rows)
        return out

    def state_at(self, t: float) -> np.ndarray:
        """Common-time state for the whole batch, (B, dim)."""
        return self.states_at(np.full(self.size, float(t)))

    # -- component accessors -------------------------------------------------

    def u_at(self, ts: np.ndarray) -> np.ndarray:
        return self.states_at(ts)[:, self.layout.u]

    def x_at(self, ts: np.ndarray) -> np.ndarray:
        if not self.layout.include_x:
            raise ValueError("spatial component was not propagated in this solve")
        return self.states_at(ts)[:, self.layout.x]

    def split(self, states: np.ndarray):
        """Unpack packed rows into (x, u, du, tau, dtau) views."""
        lay = self.layout
        x = states[:, lay.x] if lay.include_x else None
        u = states[:, lay.u]
        du = states[:, lay.du] if lay.has_sensitivity else None
        tau = states[:, lay.tau]
        dtau = (
            states[:, lay.dtau].reshape(-1, lay.fields, lay.n)
            if lay.has_sensitivity
            else None
        )
        return x, u, du, tau, dtau


def _make_rhs(spec: ProblemSpec, layout: StateLayout):
    lay = layout

    def rhs(_t, y):
        out = np.zeros_like(y)
        u = y[:, lay.u]
        if spec.general_form:
            x = y[:, lay.x]
            l_val, _ = spec.L_value_deriv(u, x)
            alpha_v, _ = spec.alpha_values_derivs(u)
        else:
            l_val, l_der = spec.L_value_deriv(u)
            alpha_v, alpha_d = spec.alpha_values_derivs(u)
        out[:, lay.u] = -l_val
        if lay.include_x:
            x = y[:, lay.x]
            dx = np.zeros_like(x)
            for k in range(lay.fields):
                dx += alpha_v[k][:, None] * spec.g_value(k, x)
            out[:, lay.x] = dx
        out[:, lay.tau] = alpha_v.T
        if lay.has_sensitivity:
            du = y[:, lay.du]
            out[:, lay.du] = -l_der[:, None] * du
            dtau = alpha_d.T[:, :, None] * du[:, None, :]
            out[:, lay.dtau] = dtau.reshape(len(y), lay.fields * lay.n)
        return out

    return rhs


def _check_band(spec: ProblemSpec, traj: Trajectory, layout: StateLayout) -> None:
    a, b = spec.u_range
    u_nodes = traj.values[:, :, layout.u]
    bad = (u_nodes < a - 1e-9) | (u_nodes > b + 1e-9)
    if np.any(bad):
        node = int(np.argmax(np.any(bad, axis=1)))
        row = int(np.argmax(bad[node]))
        raise RangeViolationError(float(traj.times[node]), float(u_nodes[node, row]), a, b)


def solve_characteristics(
    spec: ProblemSpec,
    lams: np.ndarray,
    T: float | None = None,
    include_x: bool = True,
) -> CharacteristicBatch:
    """Integrate characteristics for every start point in ``lams`` up to T.

    Raises RangeViolationError if any scalar component leaves [u*-1, u*+1]
    and BlowUpError on non-finite values; both signal hypothesis failures.
    """
    lams = np.atleast_2d(np.asarray(lams, dtype=float))
    if lams.shape[1] != spec.n:
        raise ValueError("start points must have n components")
    horizon = spec.schedule.horizon if T is None else float(T)
    if horizon > spec.schedule.horizon + 1e-12:
        raise ValueError("T beyond the schedule horizon")
    layout = StateLayout(
        n=spec.n,
        fields=spec.field_count,
        include_x=include_x or spec.general_form,
        has_sensitivity=not spec.general_form,
    )
    b = len(lams)
    state = np.zeros((b, layout.dim), dtype=float)
    if layout.include_x:
        state[:, layout.x] = lams
    state[:, layout.u] = spec.u_star + spec.u0_value(lams)
    if layout.has_sensitivity:
        state[:, layout.du] = spec.u0_gradient(lams)

    a_lo, b_hi = spec.u_range
    u0 = state[:, layout.u]
    if np.any(u0 < a_lo - 1e-9) or np.any(u0 > b_hi + 1e-9):
        row = int(np.argmax((u0 < a_lo - 1e-9) | (u0 > b_hi + 1e-9)))
        raise RangeViolationError(0.0, float(u0[row]), a_lo, b_hi)

    step = spec.step_size()
    rhs = _make_rhs(spec, layout)
    system = OdeSystem(dim=layout.dim, rhs=rhs)

    # segment i runs [starts[i], events[i]] with a jump closing it; the last
    # segment runs out to the horizon (a single post-jump node when an event
    # lands exactly there, keeping queries at that time right-continuous)
    events = [float(t) for t in spec.schedule.times[1:] if t <= horizon + 1e-12]
    starts = [0.0] + events
    segments: list[Trajectory] = []
    jumps: list[tuple[int, np.ndarray, np.ndarray]] = []
    for i, start in enumerate(starts):
        end = events[i] if i < len(events) else horizon
        traj = integrate_path(system, state, start, end, step)
        _check_band(spec, traj, layout)
        segments.append(traj)
        state = traj.end.copy()
        if i < len(events):
            delta = spec.schedule.magnitudes[i]
            state, u_before, u_after = _apply_jump_state(spec, layout, state, delta, end)
            jumps.append((i + 1, u_before, u_after))
    return CharacteristicBatch(
        spec=spec,
        lams=lams,
        layout=layout,
        horizon=horizon,
        segments=segments,
        segment_starts=np.asarray(starts, dtype=float),
        jumps=jumps,
    )


def _apply_jump_state(
    spec: ProblemSpec,
    layout: StateLayout,
    state: np.ndarray,
    delta: np.ndarray,
    time: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    u_before = state[:, layout.u].copy()
    x = state[:, layout.x] if layout.include_x else None
    h_val, h_der = spec.h_values_derivs(u_before, x)
    u_after = u_before + delta @ h_val
    a_lo, b_hi = spec.u_range
    if np.any(u_after < a_lo - 1e-9) or np.any(u_after > b_hi + 1e-9):
        row = int(np.argmax((u_after < a_lo - 1e-9) | (u_after > b_hi + 1e-9)))
        raise RangeViolationError(time, float(u_after[row]), a_lo, b_hi)
    out = state.copy()
    out[:, layout.u] = u_after
    if layout.has_sensitivity:
        factor = 1.0 + delta @ h_der
        out[:, layout.du] = factor[:, None] * state[:, layout.du]
    return out, u_before, u_after


def apply_jump(
    u_minus: float,
    x: np.ndarray | None,
    delta: np.ndarray,
    spec: ProblemSpec,
    time: float = float("nan"),
) -> float:
    """Post-jump scalar value u- + <h(u-), dy>; x feeds the general form."""
    u = np.array([float(u_minus)])
    pts = None
    if spec.general_form:
        if x is None:
            raise ValueError("the general regime needs the spatial point")
        pts = np.asarray(x, dtype=float).reshape(1, -1)
    h_val, _ = spec.h_values_derivs(u, pts)
    result = float(u_minus + np.asarray(delta, dtype=float) @ h_val[:, 0])
    a_lo, b_hi = spec.u_range
    if not (a_lo - 1e-9 <= result <= b_hi + 1e-9):
        raise RangeViolationError(time, result, a_lo, b_hi)
    return result


# ---------------------------------------------------------------------------
# single-path facade


class CharacteristicPath:
    """One characteristic with jump records and dense accessors."""

    def __init__(self, batch: CharacteristicBatch):
        self._batch = batch

    @property
    def lam(self) -> np.ndarray:
        return self._batch.lams[0]

    @property
    def horizon(self) -> float:
        return self._batch.horizon

    @property
    def has_sensitivity(self) -> bool:
        return self._batch.layout.has_sensitivity

    @property
    def jump_records(self) -> list[dict]:
        return [
            {"j": j, "u_before": float(ub[0]), "u_after": float(ua[0])}
            for j, ub, ua in self._batch.jumps
        ]

    def _state(self, t: float) -> np.ndarray:
        return self._batch.state_at(t)[0]

    def x(self, t: float) -> np.ndarray:
        return self._state(t)[self._batch.layout.x].copy()

    def u(self, t: float) -> float:
        return float(self._state(t)[self._batch.layout.u])

    def u_sensitivity(self, t: float) -> np.ndarray:
        if not self.has_sensitivity:
            raise UnsupportedRegimeError(
                "start-point sensitivity is unavailable with x-dependent L or h"
            )
        return self._state(t)[self._batch.layout.du].copy()

    def flow_times(self, t: float) -> np.ndarray:
        return self._state(t)[self._batch.layout.tau].copy()

    def flow_time_gradients(self, t: float) -> np.ndarray:
        if not self.has_sensitivity:
            raise UnsupportedRegimeError(
                "flow-time gradients are unavailable with x-dependent L or h"
            )
        lay = self._batch.layout
        return self._state(t)[lay.dtau].reshape(lay.fields, lay.n).copy()


def solve_characteristic(
    spec: ProblemSpec, lam: np.ndarray, T: float | None = None
) -> CharacteristicPath:
    """Solve a single characteristic; see :func:`solve_characteristics`."""
    lam_arr = np.asarray(lam, dtype=float).reshape(1, -1)
    return CharacteristicPath(solve_characteristics(spec, lam_arr, T=T, include_x=True))
