"""Functional linear model with functional response (FLMFR).

Response and covariates are expanded in (typically principal-component)
bases; the coefficient surface beta_j(s, t) is expanded in the tensor
product of the covariate and response bases.  With centered score
matrices the residual sum of squared norms reduces to an ordinary least
squares problem from the stacked covariate scores to the response scores,
solved by orthogonal factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import BasisSpec, FourierBasis, PCBasis, fit_basis, project, reconstruct
from .exceptions import (
    GridMismatchError,
    IllConditionedError,
    InsufficientDataError,
    UnsupportedModelError,
)
from .fdata import BivariateSurface, FunctionalSample

__all__ = ["FLMFRModel", "fit_flmfr", "predict_flmfr", "beta_surface", "cmspe"]

CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class FLMFRModel:
    """Fitted linear model; coefficient blocks live in basis coordinates."""

    response_basis: PCBasis | FourierBasis
    covariate_bases: list[PCBasis | FourierBasis]
    coef_blocks: list[np.ndarray]          # one (K_j, L) block per covariate
    intercept_scores: np.ndarray           # (L,) mean response scores
    covariate_score_means: list[np.ndarray]
    residual_score_variance: np.ndarray    # (L,)
    train_n: int
    train_scores: list[np.ndarray] = field(repr=False, default=None)
    fitted: FunctionalSample | None = field(repr=False, default=None)

    @property
    def n_covariates(self) -> int:
        return len(self.covariate_bases)


def _normalize_specs(specs, count: int) -> list[BasisSpec]:
    if specs is None:
        return [BasisSpec() for _ in range(count)]
    if isinstance(specs, BasisSpec):
        return [specs for _ in range(count)]
    specs = list(specs)
    if len(specs) != count:
        raise ValueError(f"expected {count} basis specs, got {len(specs)}")
    return specs


def _check_shared_n(y: FunctionalSample, xs: Sequence[FunctionalSample]) -> int:
    if not xs:
        raise ValueError("at least one covariate sample is required")
    n = y.n
    for j, x in enumerate(xs):
        if x.n != n:
            raise ValueError(
                f"covariate {j} has {x.n} curves but the response has {n}"
            )
    return n


def fit_flmfr(
    y: FunctionalSample,
    xs: Sequence[FunctionalSample],
    response_basis: BasisSpec = BasisSpec(),
    covariate_bases: Sequence[BasisSpec] | BasisSpec | None = None,
) -> FLMFRModel:
    """Fit the linear model by least squares on basis scores.

    The response and every covariate are centered through their bases;
    the intercept is the mean response in basis coordinates, never a
    design column.  Raises IllConditionedError when the stacked score
    matrix has condition number above 1e12.
    """
    xs = list(xs)
    n = _check_shared_n(y, xs)
    specs = _normalize_specs(covariate_bases, len(xs))

    basis_y = fit_basis(y, response_basis)
    bases_x = [fit_basis(x, spec) for x, spec in zip(xs, specs)]

    y_scores = project(y, basis_y)
    x_scores = [project(x, b) for x, b in zip(xs, bases_x)]

    total_k = sum(s.shape[1] for s in x_scores)
    if n <= total_k:
        raise InsufficientDataError(
            f"need more curves than basis coefficients (n={n}, total K={total_k})"
        )

    intercept = y_scores.mean(axis=0)
    x_means = [s.mean(axis=0) for s in x_scores]
    sy = y_scores - intercept
    design = np.hstack([s - m for s, m in zip(x_scores, x_means)])

    singulars = np.linalg.svd(design, compute_uv=False)
    if singulars[0] <= 0.0 or singulars[0] / singulars[-1] > CONDITION_LIMIT:
        raise IllConditionedError(
            "stacked covariate scores are numerically singular "
            f"(condition number above {CONDITION_LIMIT:g})"
        )

    coef, _, _, _ = np.linalg.lstsq(design, sy, rcond=None)
    resid = sy - design @ coef
    sigma2 = (resid * resid).sum(axis=0) / (n - total_k)

    blocks, start = [], 0
    for s in x_scores:
        k = s.shape[1]
        blocks.append(coef[start : start + k].copy())
        start += k

    fitted_scores = intercept + (design @ coef)
    fitted = reconstruct(fitted_scores, basis_y)

    return FLMFRModel(
        response_basis=basis_y,
        covariate_bases=bases_x,
        coef_blocks=blocks,
        intercept_scores=intercept,
        covariate_score_means=x_means,
        residual_score_variance=sigma2,
        train_n=n,
        train_scores=x_scores,
        fitted=fitted,
    )


def _predict_scores(model: FLMFRModel, xs: Sequence[FunctionalSample]) -> np.ndarray:
    xs = list(xs)
    if len(xs) != model.n_covariates:
        raise ValueError(
            f"model has {model.n_covariates} covariates, got {len(xs)} samples"
        )
    n = xs[0].n
    out = np.tile(model.intercept_scores, (n, 1))
    for x, basis, mean, block in zip(
        xs, model.covariate_bases, model.covariate_score_means, model.coef_blocks
    ):
        if x.n != n:
            raise ValueError("covariate samples disagree on the number of curves")
        if not x.grid.matches(basis.grid):
            raise GridMismatchError("covariate grid does not match the training grid")
        out += (project(x, basis) - mean) @ block
    return out


def predict_flmfr(model: FLMFRModel, xs: Sequence[FunctionalSample]) -> FunctionalSample:
    """Predicted response curves for new covariate samples."""
    return reconstruct(_predict_scores(model, xs), model.response_basis)


def beta_surface(model: FLMFRModel, j: int = 0) -> BivariateSurface:
    """Coefficient surface of covariate j on the product grid (0-based j)."""
    if not 0 <= j < model.n_covariates:
        raise IndexError(
            f"covariate index {j} out of range [0, {model.n_covariates - 1}]"
        )
    eta = model.covariate_bases[j].functions  # (K_j, r_s)
    theta = model.response_basis.functions    # (L, r_t)
    values = eta.T @ model.coef_blocks[j] @ theta
    return BivariateSurface(model.covariate_bases[j].grid, model.response_basis.grid, values)


def cmspe(model: FLMFRModel, x0_scores) -> float:
    """Estimated conditional mean-square prediction error at score vector x0.

    Single-covariate models with a PC covariate basis only.  Terms from
    score-estimation error beyond the leading expansion are omitted.
    """
    if model.n_covariates != 1:
        raise UnsupportedModelError("cmspe is defined for single-covariate models")
    basis = model.covariate_bases[0]
    if not isinstance(basis, PCBasis):
        raise UnsupportedModelError("cmspe needs a principal-component covariate basis")
    x0 = np.asarray(x0_scores, dtype=float).reshape(-1)
    if x0.size != basis.size:
        raise ValueError(f"expected {basis.size} scores, got {x0.size}")
    leverage = float(np.sum(x0 * x0 / basis.eigenvalues))
    sigma2 = model.residual_score_variance
    n = model.train_n
    return float(np.sum(sigma2 + sigma2 / n * (1.0 + leverage)))
