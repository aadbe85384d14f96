"""Containers and L2 geometry for curves observed on a shared grid.

Curves live in L2([a, b]) and are stored by their values on a fixed grid
of sample points.  All inner products, norms and distances use composite
trapezoid quadrature, which is exact for piecewise-linear integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import GridMismatchError

__all__ = [
    "Grid",
    "FunctionalSample",
    "BivariateSurface",
    "trapezoid_weights",
    "inner_product",
    "l2_norm",
    "l2_distance",
    "center",
    "pairwise_distances",
    "cross_distances",
]


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Composite trapezoid quadrature weights for a strictly increasing grid."""
    pts = np.asarray(points, dtype=float)
    gaps = np.diff(pts)
    w = np.empty_like(pts)
    w[0] = gaps[0] / 2.0
    w[-1] = gaps[-1] / 2.0
    w[1:-1] = (gaps[:-1] + gaps[1:]) / 2.0
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing sample points t_1 < ... < t_r spanning [a, b]."""

    points: np.ndarray
    quad_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "quad_weights", trapezoid_weights(pts))

    @classmethod
    def uniform(cls, a: float, b: float, num: int) -> "Grid":
        return cls(np.linspace(a, b, num))

    @property
    def a(self) -> float:
        return float(self.points[0])

    @property
    def b(self) -> float:
        return float(self.points[-1])

    @property
    def size(self) -> int:
        return self.points.size

    def matches(self, other: "Grid") -> bool:
        return self.points.shape == other.points.shape and np.array_equal(
            self.points, other.points
        )


def _require_same_grid(a: Grid, b: Grid) -> None:
    if not a.matches(b):
        raise GridMismatchError("operands are defined on different grids")


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """n curves on a shared grid, stored as an (n, r) value matrix.

    Parameters
    ----------
    grid : Grid
        Common sample points.
    values : ndarray, shape (n, r)
        values[i, j] is the i-th curve evaluated at grid.points[j].  A
        single curve may be passed as a 1-d array and is reshaped.
    ids : list of str, optional
        Per-curve identifiers; defaults to "0", "1", ...
    """

    grid: Grid
    values: np.ndarray
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[np.newaxis, :]
        if vals.ndim != 2:
            raise ValueError("values must be a 2-d array of curves")
        if vals.shape[1] != self.grid.size:
            raise GridMismatchError(
                f"curves have {vals.shape[1]} points but the grid has {self.grid.size}"
            )
        if vals.shape[0] < 1:
            raise ValueError("a sample needs at least one curve")
        if not np.all(np.isfinite(vals)):
            raise ValueError("curve values must be finite")
        object.__setattr__(self, "values", vals)
        if self.ids is not None:
            ids = tuple(str(i) for i in self.ids)
            if len(ids) != vals.shape[0]:
                raise ValueError("ids length does not match the number of curves")
            object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def curve_ids(self) -> tuple[str, ...]:
        if self.ids is not None:
            return self.ids
        return tuple(str(i) for i in range(self.n))

    def mean_curve(self) -> np.ndarray:
        return self.values.mean(axis=0)


@dataclass(frozen=True, eq=False)
class BivariateSurface:
    """A kernel beta(s, t) tabulated on the product of two grids."""

    grid_s: Grid
    grid_t: Grid
    values: np.ndarray  # (r_s, r_t)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid_s.size, self.grid_t.size):
            raise GridMismatchError(
                f"surface shape {vals.shape} does not match grids "
                f"({self.grid_s.size}, {self.grid_t.size})"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("surface values must be finite")
        object.__setattr__(self, "values", vals)


def _check_curve(f: np.ndarray, grid: Grid) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.ndim != 1 or arr.size != grid.size:
        raise GridMismatchError("curve length does not match the grid")
    return arr


def inner_product(f, g, grid: Grid) -> float:
    """Trapezoid approximation of the L2 inner product of two curves."""
    f = _check_curve(f, grid)
    g = _check_curve(g, grid)
    return float(np.dot(f * g, grid.quad_weights))


def l2_norm(f, grid: Grid) -> float:
    f = _check_curve(f, grid)
    return float(np.sqrt(max(np.dot(f * f, grid.quad_weights), 0.0)))


def l2_distance(f, g, grid: Grid) -> float:
    f = _check_curve(f, grid)
    g = _check_curve(g, grid)
    return l2_norm(f - g, grid)


def center(sample: FunctionalSample) -> tuple[np.ndarray, FunctionalSample]:
    """Return (mean curve, sample with the mean subtracted)."""
    mean = sample.values.mean(axis=0)
    return mean, FunctionalSample(sample.grid, sample.values - mean, sample.ids)


def squared_norms(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Row-wise squared L2 norms of a value matrix."""
    return np.maximum((values * values) @ grid.quad_weights, 0.0)


def cross_distances(a: FunctionalSample, b: FunctionalSample) -> np.ndarray:
    """L2 distances between every curve of `a` and every curve of `b`.

    Computed row by row from the pointwise differences (no Gram-matrix
    shortcut), so d(f, f) is exactly zero and the matrix is symmetric
    when a is b.
    """
    _require_same_grid(a.grid, b.grid)
    w = a.grid.quad_weights
    out = np.empty((a.n, b.n))
    for i in range(a.n):
        diff = b.values - a.values[i]
        out[i] = np.sqrt(np.maximum((diff * diff) @ w, 0.0))
    return out


def pairwise_distances(sample: FunctionalSample) -> np.ndarray:
    """Symmetric n x n matrix of L2 distances with a zero diagonal."""
    return cross_distances(sample, sample)


def distances_to(sample: FunctionalSample, curve) -> np.ndarray:
    """Distances from one query curve to every curve in the sample."""
    f = _check_curve(curve, sample.grid)
    diff = sample.values - f
    return np.sqrt(squared_norms(diff, sample.grid))
