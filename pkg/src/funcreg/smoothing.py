"""Univariate penalized regression spline smoother.

A natural cubic regression spline on (at most) 10 quantile knots,
penalized by the integrated squared second derivative.  The smoothing
parameter is chosen by GCV, with the effective degrees of freedom capped
from above by bounding the parameter from below.  Linear functions span
the penalty null space, so they are never shrunk; outside the training
range the natural boundary conditions continue the fit linearly.

The fit is organized through the Demmler-Reinsch decomposition: with
B the design, G = B'B = R'R and R^{-T} Omega R^{-1} = U diag(gamma) U',
coefficients for any smoothing parameter lam are T (z / (1 + lam gamma))
with T = R^{-1} U and z the projection of y, which makes the GCV search
O(basis size) per candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InsufficientDataError

__all__ = ["Smoother1D", "fit_smoother", "SplineWorkspace"]

DEFAULT_KNOTS = 10
DEFAULT_DF_CAP = 5
GCV_GRID_SIZE = 61


def natural_spline_design(x: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Natural cubic spline basis: 1, x, then m - 2 curvature terms.

    Each curvature term is d_k(x) - d_{m-1}(x) with
    d_k(x) = [(x - k_k)^3_+ - (x - k_m)^3_+] / (k_m - k_k); the
    combination is linear outside the knot range.
    """
    x = np.asarray(x, dtype=float)
    m = knots.size
    design = np.empty((x.size, m))
    design[:, 0] = 1.0
    design[:, 1] = x
    if m > 2:
        last = knots[-1]
        cube_last = np.clip(x - last, 0.0, None) ** 3

        def d(k):
            return (np.clip(x - knots[k], 0.0, None) ** 3 - cube_last) / (last - knots[k])

        d_ref = d(m - 2)
        for k in range(m - 2):
            design[:, k + 2] = d(k) - d_ref
    return design


def _second_derivatives(t: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Second derivatives of the curvature basis terms at points t."""
    m = knots.size
    last = knots[-1]
    ramp_ref = 6.0 * np.clip(t - knots[m - 2], 0.0, None) / (last - knots[m - 2])
    out = np.empty((t.size, m))
    out[:, :2] = 0.0
    for k in range(m - 2):
        out[:, k + 2] = 6.0 * np.clip(t - knots[k], 0.0, None) / (last - knots[k]) - ramp_ref
    return out


def curvature_penalty(knots: np.ndarray) -> np.ndarray:
    """Integral of products of second derivatives over the knot range.

    Second derivatives are piecewise linear between knots, so two-point
    Gauss quadrature per interval is exact.
    """
    m = knots.size
    omega = np.zeros((m, m))
    if m <= 2:
        return omega
    offset = 1.0 / (2.0 * np.sqrt(3.0))
    for a, b in zip(knots[:-1], knots[1:]):
        mid, half = (a + b) / 2.0, (b - a) / 2.0
        for t in (mid - 2.0 * half * offset, mid + 2.0 * half * offset):
            row = _second_derivatives(np.array([t]), knots)[0]
            omega += half * np.outer(row, row)
    return omega


@dataclass(frozen=True, eq=False)
class Smoother1D:
    """A fitted component function, centered to mean zero over training x."""

    knots: np.ndarray          # in standardized coordinates
    coef: np.ndarray
    offset: float
    x_center: float
    x_scale: float
    lam: float
    df: float
    df_cap: int
    degenerate: bool = False
    x: np.ndarray | None = field(repr=False, default=None)
    fitted_values: np.ndarray | None = field(repr=False, default=None)

    def __call__(self, xnew) -> np.ndarray:
        xnew = np.asarray(xnew, dtype=float)
        scalar = xnew.ndim == 0
        flat = np.atleast_1d(xnew)
        if self.degenerate:
            out = np.zeros(flat.shape)
        else:
            z = (flat - self.x_center) / self.x_scale
            out = natural_spline_design(z, self.knots) @ self.coef - self.offset
        return float(out[0]) if scalar else out


class SplineWorkspace:
    """Reusable design/decomposition for repeated smoothing on fixed x."""

    def __init__(self, x: np.ndarray, df_cap: int = DEFAULT_DF_CAP):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size < 4:
            raise InsufficientDataError("smoother needs at least four observations")
        if df_cap < 2:
            raise ValueError("df_cap must be at least 2")
        self.x_raw = x
        self.df_cap = int(df_cap)
        self.n = x.size

        lo, hi = float(x.min()), float(x.max())
        self.degenerate = hi <= lo
        if self.degenerate:
            self.x_center, self.x_scale = lo, 1.0
            self.knots = np.array([-1.0, 1.0])
            return
        # standardize to [-1, 1] so the cubic terms stay well conditioned
        self.x_center = (lo + hi) / 2.0
        self.x_scale = (hi - lo) / 2.0
        z = (x - self.x_center) / self.x_scale

        unique = np.unique(z)
        cap = min(self.df_cap, self.n - 1)
        if cap <= 2 or unique.size < 4:
            knots = np.array([-1.0, 1.0])
        else:
            m = min(DEFAULT_KNOTS, unique.size)
            knots = np.unique(np.quantile(z, np.linspace(0.0, 1.0, m)))
            if knots.size < 4:
                knots = np.array([-1.0, 1.0])
        self.knots = knots

        design = natural_spline_design(z, knots)
        m = knots.size
        gram = design.T @ design
        ridge = 1e-12 * float(np.trace(gram)) / m
        chol = np.linalg.cholesky(gram + ridge * np.eye(m))
        rinv = np.linalg.inv(chol.T)
        omega = curvature_penalty(knots)
        gamma, u = np.linalg.eigh(rinv.T @ omega @ rinv)
        self.gamma = np.clip(gamma, 0.0, None)
        self.transform = rinv @ u          # maps DR coordinates to coefficients
        self.ortho = design @ self.transform
        self.ortho_gram = self.ortho.T @ self.ortho
        self.cap = cap
        self.lam_floor = self._lambda_for_df(min(float(cap), self._df(0.0)))
        self.lam_grid = self._build_grid()

    def _df(self, lam: float) -> float:
        return float(np.sum(1.0 / (1.0 + lam * self.gamma)))

    def _lambda_for_df(self, target: float) -> float:
        if self._df(0.0) <= target + 1e-9:
            return 0.0
        pos = self.gamma[self.gamma > 0]
        lo, hi = 1e-14 / pos.max(), 1e14 / pos.min()
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            if self._df(mid) > target:
                lo = mid
            else:
                hi = mid
        return float(np.sqrt(lo * hi))

    def _build_grid(self) -> np.ndarray:
        if self.knots.size <= 2 or self.gamma.max() <= 0.0:
            return np.array([0.0])
        hi = self._lambda_for_df(2.0 + 1e-2)
        lo = max(self.lam_floor, self._lambda_for_df(min(float(self.cap), self._df(0.0)) - 1e-9))
        if lo <= 0.0:
            pos = self.gamma[self.gamma > 0]
            lo = 1e-10 / pos.max()
        grid = np.geomspace(lo, max(hi, lo * 10.0), GCV_GRID_SIZE)
        return np.concatenate(([self.lam_floor], grid[grid >= self.lam_floor]))

    def fit(self, y: np.ndarray) -> Smoother1D:
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != self.n:
            raise ValueError("y length does not match the workspace")
        if self.degenerate:
            return Smoother1D(
                knots=self.knots,
                coef=np.zeros(2),
                offset=0.0,
                x_center=self.x_center,
                x_scale=self.x_scale,
                lam=0.0,
                df=0.0,
                df_cap=self.df_cap,
                degenerate=True,
                x=self.x_raw,
                fitted_values=np.zeros(self.n),
            )

        z = self.ortho.T @ y
        yy = float(y @ y)
        best = None
        for lam in self.lam_grid:
            a = z / (1.0 + lam * self.gamma)
            rss = yy - 2.0 * float(a @ z) + float(a @ self.ortho_gram @ a)
            df = self._df(lam)
            gcv = self.n * max(rss, 0.0) / (self.n - df) ** 2
            if best is None or gcv < best[0]:
                best = (gcv, lam, a, df)
        _, lam, a, df = best
        coef = self.transform @ a
        fitted = self.ortho @ a
        offset = float(fitted.mean())
        return Smoother1D(
            knots=self.knots,
            coef=coef,
            offset=offset,
            x_center=self.x_center,
            x_scale=self.x_scale,
            lam=float(lam),
            df=df,
            df_cap=self.df_cap,
            degenerate=False,
            x=self.x_raw,
            fitted_values=fitted - offset,
        )


def fit_smoother(x, y, df_cap: int = DEFAULT_DF_CAP) -> Smoother1D:
    """Fit the penalized spline of y on x with GCV and a df cap.

    Requires at least four observations.  Constant x yields the zero
    smoother with `degenerate=True`.  With df_cap=2 (or too few distinct
    x values) the fit degenerates to exact linear least squares.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size:
        raise ValueError("x and y must have the same length")
    return SplineWorkspace(x, df_cap=df_cap).fit(y)
