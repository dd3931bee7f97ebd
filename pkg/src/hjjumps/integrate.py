"""Deterministic fixed-step Runge-Kutta integration with dense output.

The integrator is deliberately plain: classical RK4 on a fixed grid whose
last step is shortened to land exactly on the end time, plus cubic Hermite
interpolation between stored nodes.  Everything downstream (flows,
characteristics, sensitivities, quadrature state) rides on this one loop,
which keeps results bit-reproducible across runs.

State arrays may carry leading batch axes; the right-hand side is expected
to be vectorized over them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BlowUpError


@dataclass(frozen=True)
class OdeSystem:
    """Right-hand side bundle for an explicit first-order system."""

    dim: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    step_hint: float | None = None


class Trajectory:
    """Sampled solution nodes with values and derivatives, Hermite-queryable."""

    def __init__(self, times: np.ndarray, values: np.ndarray, derivs: np.ndarray):
        self.times = times
        self.values = values  # (N, ..., dim)
        self.derivs = derivs

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    @property
    def end(self) -> np.ndarray:
        return self.values[-1]

    def _bracket(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.searchsorted(self.times, t, side="right") - 1
        idx = np.clip(idx, 0, max(len(self.times) - 2, 0))
        return idx, np.asarray(t, dtype=float)

    def value_at(self, t: float) -> np.ndarray:
        """Cubic Hermite interpolation at a single time in [t0, t1]."""
        if len(self.times) == 1:
            return self.values[0]
        i, tq = self._bracket(np.asarray(t))
        i = int(i)
        h = self.times[i + 1] - self.times[i]
        theta = (float(tq) - self.times[i]) / h
        return _hermite(
            theta, h, self.values[i], self.derivs[i], self.values[i + 1], self.derivs[i + 1]
        )

    def rows_at(self, ts: np.ndarray, rows: np.ndarray | None = None) -> np.ndarray:
        """Per-row query on (N, B, dim) values: row ``rows[i]`` at time ``ts[i]``.

        ``rows`` defaults to all batch rows in order (ts of length B).
        """
        ts = np.asarray(ts, dtype=float)
        if rows is None:
            rows = np.arange(self.values.shape[1])
        if len(self.times) == 1:
            return self.values[0][rows].copy()
        idx, _ = self._bracket(ts)
        h = (self.times[idx + 1] - self.times[idx])[:, None]
        theta = ((ts - self.times[idx]) / (self.times[idx + 1] - self.times[idx]))[:, None]
        return _hermite(
            theta,
            h,
            self.values[idx, rows],
            self.derivs[idx, rows],
            self.values[idx + 1, rows],
            self.derivs[idx + 1, rows],
        )


def _hermite(theta, h, y0, d0, y1, d1):
    t2 = theta * theta
    t3 = t2 * theta
    return (
        (2 * t3 - 3 * t2 + 1) * y0
        + (t3 - 2 * t2 + theta) * h * d0
        + (-2 * t3 + 3 * t2) * y1
        + (t3 - t2) * h * d1
    )


def step_grid(t0: float, t1: float, step: float) -> np.ndarray:
    """Node times: uniform spacing, last step shortened onto t1."""
    span = t1 - t0
    if span <= 0.0:
        return np.array([t0], dtype=float)
    n_steps = max(1, int(np.ceil(span / step - 1e-12)))
    grid = t0 + step * np.arange(n_steps, dtype=float)
    return np.append(grid, t1)


def integrate_path(
    system: OdeSystem, y0: np.ndarray, t0: float, t1: float, step: float
) -> Trajectory:
    """Integrate dy/dt = rhs(t, y) from t0 to t1 with classical RK4."""
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    if step <= 0.0:
        raise ValueError("step must be positive")
    rhs = system.rhs
    grid = step_grid(t0, t1, step)
    y = np.array(y0, dtype=float)
    n_nodes = len(grid)
    values = np.empty((n_nodes, *y.shape), dtype=float)
    derivs = np.empty_like(values)
    values[0] = y
    d = np.asarray(rhs(grid[0], y), dtype=float)
    derivs[0] = d
    if not np.all(np.isfinite(d)):
        raise BlowUpError(float(grid[0]))
    for i in range(n_nodes - 1):
        t = grid[i]
        h = grid[i + 1] - t
        k1 = derivs[i]
        k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
        k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise BlowUpError(float(grid[i + 1]))
        values[i + 1] = y
        derivs[i + 1] = rhs(grid[i + 1], y)
    return Trajectory(grid, values, derivs)
