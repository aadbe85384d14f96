"""File formats: functional CSV, JSON manifests, and fitted-model files.

Curves travel as UTF-8 comma-separated files whose header is
``id,t=<g1>,t=<g2>,...`` with full-precision decimal grid values; every
later row is a curve id followed by its values.  Floats are written with
repr, so a write/read cycle reproduces them bit-exactly.  Manifests and
model files are JSON with a mandatory ``format_version`` field; unknown
fields are rejected on load.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .basis import FourierBasis, PCBasis
from .exceptions import FileFormatError
from .fdata import FunctionalSample, Grid
from .kernel import FKAMFRModel
from .linear import FLMFRModel
from .smoothing import Smoother1D
from .spectral import FSAMFRModel

__all__ = [
    "FORMAT_VERSION",
    "write_functional_csv",
    "read_functional_csv",
    "write_manifest",
    "read_manifest",
    "save_model",
    "load_model",
]

FORMAT_VERSION = 1

MANIFEST_KEYS = {
    "format_version",
    "kind",
    "n_covariates",
    "n_train",
    "n_test",
    "rho2",
    "seed",
    "covariate_points",
    "response_points",
    "delta",
    "c_rho",
    "files",
}


def _fmt(value: float) -> str:
    return repr(float(value))


def write_functional_csv(path, sample: FunctionalSample) -> None:
    """Write a sample in the standard curve layout."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"t={_fmt(g)}" for g in sample.grid.points])
        for cid, row in zip(sample.curve_ids(), sample.values):
            writer.writerow([cid] + [_fmt(v) for v in row])


def _parse_grid_label(cell: str, column: int) -> float:
    text = cell.strip()
    if text.startswith("t="):
        text = text[2:]
    try:
        return float(text)
    except ValueError:
        raise FileFormatError(
            f"line 1, column {column}: cannot read grid value from {cell!r}"
        ) from None


def read_functional_csv(path, transpose: bool = False, log1p: bool = False) -> FunctionalSample:
    """Read curves from a delimited file.

    transpose flips the cell matrix first, for files that store one
    column per curve and one row per grid point.  log1p applies
    log(1 + v) to the values, the transform used for count-valued
    curves such as hourly rental numbers.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise FileFormatError(f"{path}: empty file")
    if transpose:
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise FileFormatError(
                    f"{path}: line {i + 1} has {len(row)} cells, expected {width}; "
                    "cannot transpose a ragged table"
                )
        rows = [list(col) for col in zip(*rows)]

    header = rows[0]
    if len(header) < 3:
        raise FileFormatError(f"{path}: header needs an id column and at least two grid points")
    grid_values = [_parse_grid_label(cell, i + 1) for i, cell in enumerate(header[1:], start=1)]
    try:
        grid = Grid(np.asarray(grid_values))
    except ValueError as exc:
        raise FileFormatError(f"{path}: header grid invalid: {exc}") from None

    r = grid.size
    ids, values = [], np.empty((len(rows) - 1, r))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != r + 1:
            raise FileFormatError(
                f"{path}: line {i} has {len(row)} cells, expected {r + 1}"
            )
        ids.append(row[0])
        for k, cell in enumerate(row[1:]):
            try:
                values[i - 2, k] = float(cell)
            except ValueError:
                raise FileFormatError(
                    f"{path}: line {i}, column {k + 2}: cannot read number from {cell!r}"
                ) from None
    if values.shape[0] == 0:
        raise FileFormatError(f"{path}: no curves after the header")
    if log1p:
        if np.any(values <= -1.0):
            raise FileFormatError(f"{path}: log1p undefined for values <= -1")
        values = np.log1p(values)
    return FunctionalSample(grid, values, ids=tuple(ids))


# ---------------------------------------------------------------------------
# JSON manifests

def _check_keys(section: dict, expected: set[str], name: str) -> None:
    unknown = sorted(set(section) - expected)
    if unknown:
        raise FileFormatError(f"unknown field(s) {unknown} in {name}")
    missing = sorted(expected - set(section))
    if missing:
        raise FileFormatError(f"missing field(s) {missing} in {name}")


def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise FileFormatError(f"{path}: expected a JSON object at top level")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise FileFormatError(
            f"{path}: format_version {version!r} is not supported (expected {FORMAT_VERSION})"
        )
    return payload


def write_manifest(path, payload: dict) -> None:
    body = {"format_version": FORMAT_VERSION, **payload}
    _check_keys(body, MANIFEST_KEYS, "manifest")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2)
        fh.write("\n")


def read_manifest(path) -> dict:
    payload = _load_json(path)
    _check_keys(payload, MANIFEST_KEYS, "manifest")
    return payload


# ---------------------------------------------------------------------------
# model files

def _grid_out(grid: Grid) -> list:
    return grid.points.tolist()


def _grid_in(points, section: str) -> Grid:
    try:
        return Grid(np.asarray(points, dtype=float))
    except (ValueError, TypeError) as exc:
        raise FileFormatError(f"bad grid in {section}: {exc}") from None


def _basis_out(basis) -> dict:
    if isinstance(basis, PCBasis):
        return {
            "kind": "pc",
            "grid": _grid_out(basis.grid),
            "mean": basis.mean.tolist(),
            "functions": basis.functions.tolist(),
            "eigenvalues": basis.eigenvalues.tolist(),
            "cumulative_pve": basis.cumulative_pve.tolist(),
            "total_variance": basis.total_variance,
        }
    return {
        "kind": "fourier",
        "grid": _grid_out(basis.grid),
        "functions": basis.functions.tolist(),
    }


def _basis_in(section: dict, name: str):
    kind = section.get("kind")
    if kind == "pc":
        _check_keys(
            section,
            {"kind", "grid", "mean", "functions", "eigenvalues", "cumulative_pve", "total_variance"},
            name,
        )
        return PCBasis(
            grid=_grid_in(section["grid"], name),
            mean=np.asarray(section["mean"], dtype=float),
            functions=np.asarray(section["functions"], dtype=float),
            eigenvalues=np.asarray(section["eigenvalues"], dtype=float),
            cumulative_pve=np.asarray(section["cumulative_pve"], dtype=float),
            total_variance=float(section["total_variance"]),
        )
    if kind == "fourier":
        _check_keys(section, {"kind", "grid", "functions"}, name)
        return FourierBasis(
            grid=_grid_in(section["grid"], name),
            functions=np.asarray(section["functions"], dtype=float),
        )
    raise FileFormatError(f"unknown basis kind {kind!r} in {name}")


def _sample_out(sample: FunctionalSample) -> dict:
    return {
        "grid": _grid_out(sample.grid),
        "values": sample.values.tolist(),
        "ids": list(sample.curve_ids()),
    }


def _sample_in(section: dict, name: str) -> FunctionalSample:
    _check_keys(section, {"grid", "values", "ids"}, name)
    return FunctionalSample(
        _grid_in(section["grid"], name),
        np.asarray(section["values"], dtype=float),
        ids=tuple(str(i) for i in section["ids"]),
    )


def _smoother_out(sm: Smoother1D) -> dict:
    return {
        "knots": sm.knots.tolist(),
        "coef": sm.coef.tolist(),
        "offset": sm.offset,
        "x_center": sm.x_center,
        "x_scale": sm.x_scale,
        "lam": sm.lam,
        "df": sm.df,
        "df_cap": sm.df_cap,
        "degenerate": sm.degenerate,
    }


_SMOOTHER_KEYS = {
    "knots", "coef", "offset", "x_center", "x_scale", "lam", "df", "df_cap", "degenerate",
}


def _smoother_in(section: dict, name: str) -> Smoother1D:
    _check_keys(section, _SMOOTHER_KEYS, name)
    return Smoother1D(
        knots=np.asarray(section["knots"], dtype=float),
        coef=np.asarray(section["coef"], dtype=float),
        offset=float(section["offset"]),
        x_center=float(section["x_center"]),
        x_scale=float(section["x_scale"]),
        lam=float(section["lam"]),
        df=float(section["df"]),
        df_cap=int(section["df_cap"]),
        degenerate=bool(section["degenerate"]),
    )


def _flmfr_out(model: FLMFRModel) -> dict:
    return {
        "response_basis": _basis_out(model.response_basis),
        "covariate_bases": [_basis_out(b) for b in model.covariate_bases],
        "coef_blocks": [b.tolist() for b in model.coef_blocks],
        "intercept_scores": model.intercept_scores.tolist(),
        "covariate_score_means": [m.tolist() for m in model.covariate_score_means],
        "residual_score_variance": model.residual_score_variance.tolist(),
        "train_n": model.train_n,
        "train_scores": [s.tolist() for s in model.train_scores],
    }


_FLMFR_KEYS = {
    "response_basis", "covariate_bases", "coef_blocks", "intercept_scores",
    "covariate_score_means", "residual_score_variance", "train_n", "train_scores",
}


def _flmfr_in(section: dict) -> FLMFRModel:
    _check_keys(section, _FLMFR_KEYS, "flmfr model")
    return FLMFRModel(
        response_basis=_basis_in(section["response_basis"], "response_basis"),
        covariate_bases=[
            _basis_in(b, f"covariate_bases[{j}]")
            for j, b in enumerate(section["covariate_bases"])
        ],
        coef_blocks=[np.asarray(b, dtype=float) for b in section["coef_blocks"]],
        intercept_scores=np.asarray(section["intercept_scores"], dtype=float),
        covariate_score_means=[
            np.asarray(m, dtype=float) for m in section["covariate_score_means"]
        ],
        residual_score_variance=np.asarray(section["residual_score_variance"], dtype=float),
        train_n=int(section["train_n"]),
        train_scores=[np.asarray(s, dtype=float) for s in section["train_scores"]],
        fitted=None,
    )


def _fsamfr_out(model: FSAMFRModel) -> dict:
    return {
        "response_basis": _basis_out(model.response_basis),
        "covariate_bases": [_basis_out(b) for b in model.covariate_bases],
        "smoothers": [[_smoother_out(sm) for sm in row] for row in model.smoothers],
        "intercepts": model.intercepts.tolist(),
        "variable_index": [list(pair) for pair in model.variable_index],
        "train_n": model.train_n,
        "converged": model.converged,
        "train_scores": [s.tolist() for s in model.train_scores],
    }


_FSAMFR_KEYS = {
    "response_basis", "covariate_bases", "smoothers", "intercepts",
    "variable_index", "train_n", "converged", "train_scores",
}


def _fsamfr_in(section: dict) -> FSAMFRModel:
    _check_keys(section, _FSAMFR_KEYS, "fsamfr model")
    return FSAMFRModel(
        response_basis=_basis_in(section["response_basis"], "response_basis"),
        covariate_bases=[
            _basis_in(b, f"covariate_bases[{j}]")
            for j, b in enumerate(section["covariate_bases"])
        ],
        smoothers=[
            [_smoother_in(sm, f"smoothers[{l}][{v}]") for v, sm in enumerate(row)]
            for l, row in enumerate(section["smoothers"])
        ],
        intercepts=np.asarray(section["intercepts"], dtype=float),
        variable_index=[(int(j), int(k)) for j, k in section["variable_index"]],
        train_n=int(section["train_n"]),
        converged=bool(section["converged"]),
        train_scores=[np.asarray(s, dtype=float) for s in section["train_scores"]],
        fitted=None,
    )


def _fkamfr_out(model: FKAMFRModel) -> dict:
    return {
        "train_xs": [_sample_out(x) for x in model.train_xs],
        "response_grid": _grid_out(model.response_grid),
        "alpha": model.alpha.tolist(),
        "bandwidths": model.bandwidths.tolist(),
        "kernel": model.kernel,
        "component_fits": [_sample_out(c) for c in model.component_fits],
        "pseudo_responses": [_sample_out(p) for p in model.pseudo_responses],
        "iterations_used": model.iterations_used,
        "converged": model.converged,
        "loo_objective": model.loo_objective,
    }


_FKAMFR_KEYS = {
    "train_xs", "response_grid", "alpha", "bandwidths", "kernel",
    "component_fits", "pseudo_responses", "iterations_used", "converged",
    "loo_objective",
}


def _fkamfr_in(section: dict) -> FKAMFRModel:
    _check_keys(section, _FKAMFR_KEYS, "fkamfr model")
    return FKAMFRModel(
        train_xs=[_sample_in(x, f"train_xs[{j}]") for j, x in enumerate(section["train_xs"])],
        response_grid=_grid_in(section["response_grid"], "response_grid"),
        alpha=np.asarray(section["alpha"], dtype=float),
        bandwidths=np.asarray(section["bandwidths"], dtype=float),
        kernel=str(section["kernel"]),
        component_fits=[
            _sample_in(c, f"component_fits[{j}]")
            for j, c in enumerate(section["component_fits"])
        ],
        pseudo_responses=[
            _sample_in(p, f"pseudo_responses[{j}]")
            for j, p in enumerate(section["pseudo_responses"])
        ],
        iterations_used=int(section["iterations_used"]),
        converged=bool(section["converged"]),
        loo_objective=float(section["loo_objective"]),
        search_history=None,
        fitted=None,
    )


_WRITERS = {
    FLMFRModel: ("flmfr", _flmfr_out),
    FSAMFRModel: ("fsamfr", _fsamfr_out),
    FKAMFRModel: ("fkamfr", _fkamfr_out),
}

_READERS = {
    "flmfr": _flmfr_in,
    "fsamfr": _fsamfr_in,
    "fkamfr": _fkamfr_in,
}


def save_model(path, model) -> None:
    """Persist a fitted model as JSON with full-precision floats."""
    entry = _WRITERS.get(type(model))
    if entry is None:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    method, writer = entry
    payload = {
        "format_version": FORMAT_VERSION,
        "method": method,
        "model": writer(model),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    """Load a model file; the result predicts identically to the original."""
    payload = _load_json(path)
    _check_keys(payload, {"format_version", "method", "model"}, "model file")
    method = payload["method"]
    reader = _READERS.get(method)
    if reader is None:
        raise FileFormatError(f"unknown method {method!r} in model file")
    section = payload["model"]
    if not isinstance(section, dict):
        raise FileFormatError("the model section must be a JSON object")
    return reader(section)
