"""Deterministic sampling grids used by constant derivation and checks."""

from __future__ import annotations

import numpy as np

from .utils import row_norms


def refine_points(points: int, factor: int) -> int:
    """Refined point count whose grid contains the coarse grid's nodes."""
    return (points - 1) * factor + 1


def interval_grid(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 2 or hi <= lo:
        raise ValueError("interval grid needs points >= 2 and hi > lo")
    return np.linspace(lo, hi, points)


def box_grid(center: np.ndarray, halfwidth: float, per_axis: int) -> np.ndarray:
    """Tensor-product grid on the axis-aligned box around ``center``."""
    center = np.asarray(center, dtype=float)
    axes = [interval_grid(c - halfwidth, c + halfwidth, per_axis) for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def ball_grid(center: np.ndarray, radius: float, per_axis: int) -> np.ndarray:
    """Tensor grid on the bounding box, restricted to the closed ball."""
    pts = box_grid(center, radius, per_axis)
    mask = row_norms(pts - np.asarray(center, dtype=float)) <= radius + 1e-12
    return pts[mask]


def latin_hypercube(
    center: np.ndarray, halfwidth: float, count: int, seed: int
) -> np.ndarray:
    """Seeded Latin hypercube sample over the box, for dimensions > 3."""
    center = np.asarray(center, dtype=float)
    n = len(center)
    rng = np.random.default_rng(seed)
    unit = np.empty((count, n))
    for axis in range(n):
        perm = rng.permutation(count)
        unit[:, axis] = (perm + rng.uniform(size=count)) / count
    return center + halfwidth * (2.0 * unit - 1.0)


def wide_grid(
    center: np.ndarray,
    halfwidth: float,
    per_axis: int,
    lhs_points: int,
    lhs_seed: int,
) -> np.ndarray:
    """Box sample standing in for a supremum over all of R^n."""
    if len(center) <= 3:
        return box_grid(center, halfwidth, per_axis)
    return latin_hypercube(center, halfwidth, lhs_points, lhs_seed)


def ball_sample(
    center: np.ndarray,
    radius: float,
    per_axis: int,
    lhs_points: int,
    lhs_seed: int,
) -> np.ndarray:
    """Ball grid for low dimension, Latin hypercube filtered to the ball above it."""
    if len(center) <= 3:
        return ball_grid(center, radius, per_axis)
    pts = latin_hypercube(center, radius, lhs_points, lhs_seed)
    mask = row_norms(pts - np.asarray(center, dtype=float)) <= radius
    return pts[mask]
