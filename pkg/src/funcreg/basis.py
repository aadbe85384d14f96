"""Principal-component and Fourier basis systems for functional samples.

The PC basis solves the quadrature-weighted covariance eigenproblem: with
W the diagonal matrix of trapezoid weights and C the pointwise sample
covariance, the symmetric problem W^{1/2} C W^{1/2} u = lambda u is solved
and eigenfunctions are recovered as eta = W^{-1/2} u, which makes them
orthonormal in the quadrature inner product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError, InsufficientDataError
from .fdata import FunctionalSample, Grid

__all__ = [
    "BasisSpec",
    "PCBasis",
    "FourierBasis",
    "fit_pc",
    "fourier_basis",
    "fit_basis",
    "project",
    "reconstruct",
]

# Eigenvalues below this fraction of the leading one are treated as null.
EIGENVALUE_CUTOFF = 1e-10

# PVE-driven truncation measures cumulative shares against the leading part
# of the spectrum rather than the full trace; rough processes put a few
# percent of their variance into a long tail of tiny eigenvalues, which the
# truncation level is not meant to chase.
PVE_WINDOW = 15


@dataclass(frozen=True)
class BasisSpec:
    """How to build a basis for one functional variable.

    kind is "pc" (default) or "fourier".  For "pc", n_components wins when
    given, otherwise the smallest K reaching the pve target is used.  For
    "fourier", n_components is required.
    """

    kind: str = "pc"
    pve: float = 0.95
    n_components: int | None = None

    def __post_init__(self):
        if self.kind not in ("pc", "fourier"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == "pc":
            if self.n_components is None and not (0.0 < self.pve <= 1.0):
                raise ValueError("pve must lie in (0, 1]")
        if self.n_components is not None and self.n_components < 1:
            raise ValueError("n_components must be a positive integer")


@dataclass(frozen=True, eq=False)
class PCBasis:
    """Truncated eigenbasis of a sample covariance operator."""

    grid: Grid
    mean: np.ndarray            # (r,)
    functions: np.ndarray       # (K, r), quadrature-orthonormal rows
    eigenvalues: np.ndarray     # (K,), nonincreasing
    cumulative_pve: np.ndarray  # (K,), fractions of total variance
    total_variance: float

    @property
    def size(self) -> int:
        return self.functions.shape[0]


@dataclass(frozen=True, eq=False)
class FourierBasis:
    """Constant plus sine/cosine pairs, unit L2 norm on [a, b]."""

    grid: Grid
    functions: np.ndarray  # (L, r)

    @property
    def size(self) -> int:
        return self.functions.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return np.zeros(self.grid.size)


def _fix_signs(functions: np.ndarray) -> np.ndarray:
    """Make the entry of largest absolute value positive, per function."""
    out = functions.copy()
    for k in range(out.shape[0]):
        idx = int(np.argmax(np.abs(out[k])))
        if out[k, idx] < 0.0:
            out[k] = -out[k]
    return out


def fit_pc(
    sample: FunctionalSample,
    pve: float = 0.95,
    n_components: int | None = None,
) -> PCBasis:
    """Fit a principal-component basis to a functional sample.

    Parameters
    ----------
    sample : FunctionalSample
        At least two curves.
    pve : float
        Proportion-of-variance-explained target in (0, 1]; the smallest K
        whose cumulative PVE reaches it is kept.
    n_components : int, optional
        Fixed truncation level; overrides pve.  Must lie in
        [1, min(n - 1, r)].  Components whose eigenvalue falls below
        1e-10 times the leading eigenvalue are dropped regardless.

    Notes
    -----
    The pve rule selects the smallest K whose cumulative eigenvalue share
    of the leading PVE_WINDOW eigenvalues reaches the target.  The
    `cumulative_pve` field of the result always reports fractions of the
    full trace.
    """
    n, r = sample.values.shape
    if n < 2:
        raise InsufficientDataError("PC basis needs at least two curves")
    max_k = min(n - 1, r)
    if n_components is not None:
        if not 1 <= n_components <= max_k:
            raise ValueError(f"n_components must lie in [1, {max_k}]")
    elif not 0.0 < pve <= 1.0:
        raise ValueError("pve must lie in (0, 1]")

    mean = sample.values.mean(axis=0)
    centered = sample.values - mean
    w = sample.grid.quad_weights
    sw = np.sqrt(w)

    cov = centered.T @ centered / (n - 1)
    sym = cov * sw[:, np.newaxis] * sw[np.newaxis, :]
    evals, evecs = np.linalg.eigh(sym)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1]

    total = float(evals.sum())
    if total <= 0.0:
        raise DegenerateDataError("sample has no variance; PC basis is undefined")

    keep = evals >= EIGENVALUE_CUTOFF * evals[0]
    rank = min(int(keep.sum()), max_k)
    if n_components is not None:
        k = min(n_components, rank)
    else:
        lead = evals[: min(PVE_WINDOW, rank)]
        shares = np.cumsum(lead) / lead.sum()
        k = int(np.searchsorted(shares, pve - 1e-12) + 1)
        k = min(k, rank)

    functions = _fix_signs((evecs[:, :k] / sw[:, np.newaxis]).T)
    eigenvalues = evals[:k].copy()
    cumulative_pve = np.cumsum(evals)[:k] / total
    return PCBasis(
        grid=sample.grid,
        mean=mean,
        functions=functions,
        eigenvalues=eigenvalues,
        cumulative_pve=cumulative_pve,
        total_variance=total,
    )


def fourier_basis(grid: Grid, size: int) -> FourierBasis:
    """First `size` Fourier functions on [a, b]: constant, sin, cos, sin2, ..."""
    if size < 1:
        raise ValueError("size must be a positive integer")
    a, b = grid.a, grid.b
    span = b - a
    t = (grid.points - a) / span
    functions = np.empty((size, grid.size))
    functions[0] = 1.0 / np.sqrt(span)
    amp = np.sqrt(2.0 / span)
    for idx in range(1, size):
        freq = (idx + 1) // 2
        phase = 2.0 * np.pi * freq * t
        functions[idx] = amp * (np.sin(phase) if idx % 2 == 1 else np.cos(phase))
    return FourierBasis(grid=grid, functions=functions)


def fit_basis(sample: FunctionalSample, spec: BasisSpec) -> PCBasis | FourierBasis:
    """Build the basis described by `spec` from (or on the grid of) a sample."""
    if spec.kind == "pc":
        return fit_pc(sample, pve=spec.pve, n_components=spec.n_components)
    if spec.n_components is None:
        raise ValueError("a Fourier basis needs an explicit n_components")
    return fourier_basis(sample.grid, spec.n_components)


def project(sample: FunctionalSample, basis) -> np.ndarray:
    """Score matrix (n, K) of quadrature inner products with the basis.

    The basis mean is subtracted first (identically zero for Fourier).
    """
    if not sample.grid.matches(basis.grid):
        from .exceptions import GridMismatchError

        raise GridMismatchError("sample and basis are on different grids")
    centered = sample.values - basis.mean
    return centered @ (basis.functions * basis.grid.quad_weights).T


def reconstruct(scores: np.ndarray, basis) -> FunctionalSample:
    """Curves basis.mean + sum_k scores[:, k] * basis functions."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    if scores.shape[1] != basis.size:
        raise ValueError(
            f"scores have {scores.shape[1]} columns but the basis has {basis.size}"
        )
    values = basis.mean + scores @ basis.functions
    return FunctionalSample(basis.grid, values)
