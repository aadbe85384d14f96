"""Evaluation metrics and the PC-score prediction map.

The functional R2 compares squared L2 residual norms against squared
deviations from a reference mean curve (the training mean, also for test
sets).  Distance correlation is the V-statistic variant computed from
double-centered L2 distance arrays.  pc_score_map renders the predicted
score of one response component over a grid of the first two covariate
component scores, together with the convex hull of the training scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .basis import fit_pc, project
from .exceptions import (
    DegenerateDataError,
    InsufficientDataError,
    UnsupportedModelError,
)
from .fdata import FunctionalSample, pairwise_distances, squared_norms
from .kernel import FKAMFRModel, predict_fkamfr
from .linear import FLMFRModel, predict_flmfr
from .spectral import FSAMFRModel, predict_fsamfr

__all__ = [
    "R2Report",
    "r2_functional",
    "distance_correlation",
    "PCScoreMap",
    "pc_score_map",
]


@dataclass(frozen=True)
class R2Report:
    """Mean R2 pair over replications, keeping every per-replication value."""

    r2_e: float
    r2_p: float
    per_replication: tuple[tuple[float, float], ...]
    n_replications: int

    @classmethod
    def from_replications(cls, pairs: Sequence[tuple[float, float]]) -> "R2Report":
        arr = np.asarray(list(pairs), dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise ValueError("pairs must be a nonempty sequence of (r2_e, r2_p)")
        return cls(
            r2_e=float(arr[:, 0].mean()),
            r2_p=float(arr[:, 1].mean()),
            per_replication=tuple((float(a), float(b)) for a, b in arr),
            n_replications=arr.shape[0],
        )

    @property
    def median_r2_e(self) -> float:
        return float(np.median([p[0] for p in self.per_replication]))

    @property
    def median_r2_p(self) -> float:
        return float(np.median([p[1] for p in self.per_replication]))


def r2_functional(y: FunctionalSample, yhat: FunctionalSample, reference_mean) -> float:
    """1 - sum of squared residual norms over squared deviations from a mean.

    reference_mean is the training mean curve even when y is a test set,
    so poor predictions can push the value far below zero.
    """
    if not y.grid.matches(yhat.grid):
        raise ValueError("y and yhat live on different grids")
    if y.n != yhat.n:
        raise ValueError(f"y has {y.n} curves but yhat has {yhat.n}")
    ref = np.asarray(reference_mean, dtype=float).reshape(-1)
    if ref.size != y.grid.size:
        raise ValueError(
            f"reference mean has {ref.size} points, expected {y.grid.size}"
        )
    num = float(squared_norms(y.values - yhat.values, y.grid).sum())
    den = float(squared_norms(y.values - ref, y.grid).sum())
    if den <= 0.0:
        raise DegenerateDataError("all curves equal the reference mean; R2 undefined")
    return 1.0 - num / den


def _double_center(d: np.ndarray) -> np.ndarray:
    row = d.mean(axis=1, keepdims=True)
    col = d.mean(axis=0, keepdims=True)
    return d - row - col + d.mean()


def distance_correlation(a: FunctionalSample, b: FunctionalSample) -> float:
    """Distance correlation of two samples from their L2 distance arrays."""
    if a.n != b.n:
        raise ValueError(f"samples have different sizes ({a.n} vs {b.n})")
    if a.n < 4:
        raise InsufficientDataError("distance correlation needs at least four curves")
    ca = _double_center(pairwise_distances(a))
    cb = _double_center(pairwise_distances(b))
    var_a = float((ca * ca).mean())
    var_b = float((cb * cb).mean())
    if var_a <= 0.0 or var_b <= 0.0:
        raise DegenerateDataError("constant sample has no distance variation")
    dcov2 = float((ca * cb).mean())
    ratio = dcov2 / np.sqrt(var_a * var_b)
    return float(np.sqrt(np.clip(ratio, 0.0, 1.0)))


@dataclass(frozen=True, eq=False)
class PCScoreMap:
    """Predicted response-component score over a grid of covariate scores."""

    x1: np.ndarray            # (g,) first-score coordinates
    x2: np.ndarray            # (g,) second-score coordinates
    scores: np.ndarray        # (g, g); [i, j] belongs to (x1[i], x2[j])
    response_component: int
    covariate: int
    hull: np.ndarray          # (m, 2) training-score hull vertices, in order
    train_scores: np.ndarray  # (n, 2)


def _map_bases(model, covariate: int, response_component: int):
    """Covariate basis, its training scores, and the response basis."""
    if isinstance(model, (FLMFRModel, FSAMFRModel)):
        cov_basis = model.covariate_bases[covariate]
        if cov_basis.size < 2:
            raise DegenerateDataError(
                "the covariate basis keeps fewer than two components"
            )
        if response_component >= model.response_basis.size:
            raise IndexError(
                f"response component {response_component} out of range "
                f"[0, {model.response_basis.size - 1}]"
            )
        return cov_basis, model.train_scores[covariate][:, :2], model.response_basis
    # distance-based model stores no bases; fit them from the training data
    cov_basis = fit_pc(model.train_xs[covariate])
    if cov_basis.size < 2:
        cov_basis = fit_pc(model.train_xs[covariate], n_components=2)
    y_train = model.training_response()
    resp_basis = fit_pc(y_train)
    if resp_basis.size <= response_component:
        resp_basis = fit_pc(y_train, n_components=response_component + 1)
    train2 = project(model.train_xs[covariate], cov_basis)[:, :2]
    return cov_basis, train2, resp_basis


def _mean_curve_for(model, j: int) -> np.ndarray:
    if isinstance(model, (FLMFRModel, FSAMFRModel)):
        return model.covariate_bases[j].mean
    return model.train_xs[j].mean_curve()


def pc_score_map(
    model,
    response_component: int = 0,
    covariate: int = 0,
    score_range: tuple[tuple[float, float], tuple[float, float]] | None = None,
    resolution: int = 21,
    fix_others: bool = False,
) -> PCScoreMap:
    """Predicted score of one response component over a covariate score grid.

    Synthesizes predictor curves mean + x1*basis_1 + x2*basis_2 over a
    resolution x resolution grid, predicts with the model, and projects
    each prediction onto the chosen response component.  Intended for
    single-covariate models; with several covariates, fix_others=True
    holds the remaining covariates at their training mean curves.
    """
    predictors = {
        FLMFRModel: predict_flmfr,
        FSAMFRModel: predict_fsamfr,
        FKAMFRModel: predict_fkamfr,
    }
    predict = predictors.get(type(model))
    if predict is None:
        raise UnsupportedModelError(f"unsupported model type {type(model).__name__}")
    n_cov = model.n_covariates
    if not 0 <= covariate < n_cov:
        raise IndexError(f"covariate {covariate} out of range [0, {n_cov - 1}]")
    if n_cov > 1 and not fix_others:
        raise UnsupportedModelError(
            "the score map varies a single covariate; pass fix_others=True "
            "to hold the remaining covariates at their training means"
        )
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if response_component < 0:
        raise IndexError("response component must be nonnegative")

    cov_basis, train2, resp_basis = _map_bases(model, covariate, response_component)

    if score_range is None:
        (lo1, hi1) = float(train2[:, 0].min()), float(train2[:, 0].max())
        (lo2, hi2) = float(train2[:, 1].min()), float(train2[:, 1].max())
    else:
        (lo1, hi1), (lo2, hi2) = score_range
    if not (lo1 < hi1 and lo2 < hi2):
        raise ValueError("score ranges must have positive width")

    x1 = np.linspace(lo1, hi1, resolution)
    x2 = np.linspace(lo2, hi2, resolution)
    g1, g2 = np.meshgrid(x1, x2, indexing="ij")
    synth = (
        cov_basis.mean
        + g1.reshape(-1, 1) * cov_basis.functions[0]
        + g2.reshape(-1, 1) * cov_basis.functions[1]
    )
    n_query = synth.shape[0]

    xs_new = []
    for j in range(n_cov):
        if j == covariate:
            xs_new.append(FunctionalSample(cov_basis.grid, synth))
        else:
            mean_j = _mean_curve_for(model, j)
            xs_new.append(
                FunctionalSample(
                    model.train_xs[j].grid
                    if isinstance(model, FKAMFRModel)
                    else model.covariate_bases[j].grid,
                    np.tile(mean_j, (n_query, 1)),
                )
            )

    pred = predict(model, xs_new)
    pred_scores = project(pred, resp_basis)[:, response_component]

    try:
        hull_obj = ConvexHull(train2)
        hull = train2[hull_obj.vertices]
    except QhullError as exc:
        raise DegenerateDataError(
            "training scores are degenerate; no convex hull exists"
        ) from exc

    return PCScoreMap(
        x1=x1,
        x2=x2,
        scores=pred_scores.reshape(resolution, resolution),
        response_component=response_component,
        covariate=covariate,
        hull=hull,
        train_scores=train2,
    )
