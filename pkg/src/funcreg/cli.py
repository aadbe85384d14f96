"""Command-line interface.

Subcommands: simulate, fit, predict, evaluate, benchmark, pcmap.  Exit
codes: 0 on success, 2 when argument validation fails (all offending
fields reported together), 1 on runtime errors.  The benchmark and
pcmap reports write figures next to their delimited output unless
--no-figures is given; user-facing component and covariate numbers are
1-based.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .basis import BasisSpec
from .benchmark import METHODS, BenchmarkConfig, run_benchmark
from .exceptions import FuncregError, ValidationError
from .fdata import FunctionalSample
from .io import (
    read_functional_csv,
    read_manifest,
    load_model,
    save_model,
    write_functional_csv,
    write_manifest,
)
from .kernel import KERNELS, KernelAdditiveConfig, fit_fkamfr, predict_fkamfr
from .linear import fit_flmfr, predict_flmfr
from .metrics import pc_score_map, r2_functional
from .simulate import SCENARIOS, ScenarioSpec, generate_scenario
from .spectral import fit_fsamfr, predict_fsamfr

__all__ = ["main", "build_parser"]


def _fmt(value: float) -> str:
    return repr(float(value))


def _require(messages: list[str]) -> None:
    if messages:
        raise ValidationError(messages)


def _default_jobs() -> int | str:
    return os.environ.get("FUNCREG_JOBS", "1")


def _parse_jobs(raw, messages: list[str]) -> int:
    try:
        jobs = int(raw)
    except (TypeError, ValueError):
        messages.append(f"jobs must be an integer, got {raw!r}")
        return 1
    if jobs < 1:
        messages.append(f"jobs must be positive, got {jobs}")
        return 1
    return jobs


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args) -> int:
    messages = []
    if args.n < 2:
        messages.append(f"--n must be at least 2, got {args.n}")
    if args.n_test < 1:
        messages.append(f"--n-test must be at least 1, got {args.n_test}")
    if not 0.0 < args.rho2 < 1.0:
        messages.append(f"--rho2 must lie strictly between 0 and 1, got {args.rho2}")
    _require(messages)

    spec = ScenarioSpec(
        args.scenario,
        n_covariates=args.covariates,
        n_train=args.n,
        n_test=args.n_test,
        rho2=args.rho2,
        seed=args.seed,
    )
    data = generate_scenario(spec)
    out = _out_dir(args.out)

    files = {}
    for j, (tr, te) in enumerate(zip(data.x_train, data.x_test), start=1):
        files[f"x_train_{j}"] = f"x_train_{j}.csv"
        files[f"x_test_{j}"] = f"x_test_{j}.csv"
        write_functional_csv(out / f"x_train_{j}.csv", tr)
        write_functional_csv(out / f"x_test_{j}.csv", te)
    for name, sample in [
        ("y_train", data.y_train),
        ("y_test", data.y_test),
        ("signal_train", data.signal_train),
        ("signal_test", data.signal_test),
    ]:
        files[name] = f"{name}.csv"
        write_functional_csv(out / f"{name}.csv", sample)

    write_manifest(out / "manifest.json", {
        "kind": spec.kind,
        "n_covariates": spec.n_covariates,
        "n_train": spec.n_train,
        "n_test": spec.n_test,
        "rho2": spec.rho2,
        "seed": spec.seed,
        "covariate_points": spec.covariate_points,
        "response_points": spec.response_points,
        "delta": spec.delta,
        "c_rho": data.c_rho,
        "files": files,
    })
    print(f"wrote {len(files)} data files and manifest.json to {out}")
    return 0


# ---------------------------------------------------------------------------
# fit

def _read_inputs(args, messages: list[str]):
    y = None
    if getattr(args, "y", None) is not None:
        y = read_functional_csv(args.y, transpose=args.transpose, log1p=args.log1p)
    xs = [read_functional_csv(p, transpose=args.transpose) for p in args.x]
    return y, xs


def cmd_fit(args) -> int:
    messages = []
    if args.n_components is not None and args.n_components < 1:
        messages.append(f"--n-components must be positive, got {args.n_components}")
    if not 0.0 < args.pve <= 1.0:
        messages.append(f"--pve must lie in (0, 1], got {args.pve}")
    if args.df_cap < 2:
        messages.append(f"--df-cap must be at least 2, got {args.df_cap}")
    if args.delta <= 0.0:
        messages.append(f"--delta must be positive, got {args.delta}")
    if args.max_iter < 1:
        messages.append(f"--max-iter must be positive, got {args.max_iter}")
    if args.n_bandwidths < 1:
        messages.append(f"--n-bandwidths must be positive, got {args.n_bandwidths}")
    _require(messages)

    y, xs = _read_inputs(args, messages)
    spec = BasisSpec(pve=args.pve, n_components=args.n_components)
    if args.method == "flmfr":
        model = fit_flmfr(y, xs, response_basis=spec, covariate_bases=spec)
        detail = (
            f"K={[b.size for b in model.covariate_bases]}, "
            f"L={model.response_basis.size}"
        )
    elif args.method == "fsamfr":
        model = fit_fsamfr(y, xs, response_basis=spec, covariate_bases=spec,
                           df_cap=args.df_cap)
        detail = (
            f"K={[b.size for b in model.covariate_bases]}, "
            f"L={model.response_basis.size}, converged={model.converged}"
        )
    else:
        config = KernelAdditiveConfig(
            kernel=args.kernel,
            n_bandwidths=args.n_bandwidths,
            delta=args.delta,
            max_iter=args.max_iter,
        )
        model = fit_fkamfr(y, xs, config)
        detail = (
            f"bandwidths={[round(h, 6) for h in model.bandwidths]}, "
            f"converged={model.converged}"
        )
    r2_e = r2_functional(y, model.fitted, y.mean_curve())
    save_model(args.out, model)
    print(f"fit {args.method} on {y.n} curves ({detail}); in-sample R2 {r2_e:.4f}")
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# predict / evaluate

_PREDICTORS = {
    "FLMFRModel": predict_flmfr,
    "FSAMFRModel": predict_fsamfr,
    "FKAMFRModel": predict_fkamfr,
}


def _predict_with(model, xs) -> FunctionalSample:
    fn = _PREDICTORS.get(type(model).__name__)
    if fn is None:
        raise FuncregError(f"cannot predict with {type(model).__name__}")
    return fn(model, xs)


def cmd_predict(args) -> int:
    model = load_model(args.model)
    xs = [read_functional_csv(p, transpose=args.transpose) for p in args.x]
    pred = _predict_with(model, xs)
    pred = FunctionalSample(pred.grid, pred.values, ids=xs[0].curve_ids())
    write_functional_csv(args.out, pred)
    print(f"wrote {pred.n} predicted curves to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    messages = []
    if (args.train is None) == (args.mean is None):
        messages.append("exactly one of --train or --mean is required")
    _require(messages)

    truth = read_functional_csv(args.truth, transpose=args.transpose, log1p=args.log1p)
    pred = read_functional_csv(args.pred)
    if args.train is not None:
        ref = read_functional_csv(
            args.train, transpose=args.transpose, log1p=args.log1p
        ).mean_curve()
    else:
        mean_sample = read_functional_csv(args.mean)
        ref = mean_sample.values[0]
    value = r2_functional(truth, pred, ref)
    print(f"r2 {_fmt(value)}")
    if args.out:
        import json

        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"format_version": 1, "r2": value}, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# benchmark

def _split_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def cmd_benchmark(args) -> int:
    messages = []
    scenarios = _split_list(args.scenarios)
    methods = _split_list(args.methods)
    for s in scenarios:
        if s not in SCENARIOS:
            messages.append(f"unknown scenario {s!r} (choose from {', '.join(SCENARIOS)})")
    for m in methods:
        if m not in METHODS:
            messages.append(f"unknown method {m!r} (choose from {', '.join(METHODS)})")
    if not scenarios:
        messages.append("--scenarios must name at least one scenario")
    if not methods:
        messages.append("--methods must name at least one method")
    covariates = []
    for c in _split_list(args.covariates):
        try:
            covariates.append(int(c))
        except ValueError:
            messages.append(f"covariate counts must be integers, got {c!r}")
    for c in covariates:
        if c not in (1, 2):
            messages.append(f"covariate counts must be 1 or 2, got {c}")
    if args.reps < 1:
        messages.append(f"--reps must be positive, got {args.reps}")
    if args.n < 2:
        messages.append(f"--n must be at least 2, got {args.n}")
    if args.n_test < 1:
        messages.append(f"--n-test must be at least 1, got {args.n_test}")
    if not 0.0 < args.pve <= 1.0:
        messages.append(f"--pve must lie in (0, 1], got {args.pve}")
    jobs = _parse_jobs(args.jobs, messages)
    _require(messages)

    config = BenchmarkConfig(
        scenarios=tuple(scenarios),
        methods=tuple(methods),
        covariate_counts=tuple(covariates),
        n_train=args.n,
        n_test=args.n_test,
        replications=args.reps,
        seed=args.seed,
        jobs=jobs,
        pve=args.pve,
        df_cap=args.df_cap,
        kernel=args.kernel,
    )
    report = run_benchmark(config)
    out = _out_dir(args.out)
    (out / "results.csv").write_text(report.results_csv(), encoding="utf-8")
    (out / "summary.md").write_text(report.summary_markdown(), encoding="utf-8")
    (out / "timings.csv").write_text(report.timings_csv(), encoding="utf-8")
    written = ["results.csv", "summary.md", "timings.csv"]
    if not args.no_figures:
        from .figures import benchmark_figure

        benchmark_figure(report, out / "benchmark_r2p.png")
        written.append("benchmark_r2p.png")
    failures = sum(1 for r in report.rows if not r.ok)
    print(report.summary_markdown())
    if failures:
        print(f"{failures} replication fit(s) failed; see results.csv", file=sys.stderr)
    print(f"wrote {', '.join(written)} to {out}")
    return 0


# ---------------------------------------------------------------------------
# pcmap

def cmd_pcmap(args) -> int:
    messages = []
    if args.component < 1:
        messages.append(f"--component is 1-based and must be positive, got {args.component}")
    if args.covariate < 1:
        messages.append(f"--covariate is 1-based and must be positive, got {args.covariate}")
    if args.resolution < 2:
        messages.append(f"--resolution must be at least 2, got {args.resolution}")
    _require(messages)

    model = load_model(args.model)
    pm = pc_score_map(
        model,
        response_component=args.component - 1,
        covariate=args.covariate - 1,
        resolution=args.resolution,
        fix_others=args.fix_others,
    )
    out = _out_dir(args.out)
    with open(out / "map.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("x1," + ",".join(f"x2={_fmt(v)}" for v in pm.x2) + "\n")
        for v1, row in zip(pm.x1, pm.scores):
            fh.write(_fmt(v1) + "," + ",".join(_fmt(v) for v in row) + "\n")
    with open(out / "hull.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("x1,x2\n")
        for v1, v2 in pm.hull:
            fh.write(f"{_fmt(v1)},{_fmt(v2)}\n")
    written = ["map.csv", "hull.csv"]
    if not args.no_figures:
        from .figures import score_map_figure

        score_map_figure(pm, out / "pcmap.png")
        written.append("pcmap.png")
    print(f"wrote {', '.join(written)} to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcreg",
        description="Function-on-function regression: estimators, simulation, benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate one simulated train/test dataset")
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--covariates", type=int, default=2, choices=(1, 2))
    p.add_argument("--n", type=int, default=100, help="training curves (default 100)")
    p.add_argument("--n-test", type=int, default=100, help="test curves (default 100)")
    p.add_argument("--rho2", type=float, default=0.8, help="signal fraction (default 0.8)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit an estimator to CSV data")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--y", required=True, help="response CSV")
    p.add_argument("--x", action="append", required=True, help="covariate CSV (repeatable)")
    p.add_argument("--pve", type=float, default=0.95,
                   help="per-variable PC variance target (default 0.95)")
    p.add_argument("--n-components", type=int, default=None,
                   help="fixed PC count overriding --pve")
    p.add_argument("--df-cap", type=int, default=5,
                   help="fsamfr smoother degrees-of-freedom cap (default 5)")
    p.add_argument("--kernel", default="gaussian", choices=sorted(KERNELS))
    p.add_argument("--n-bandwidths", type=int, default=15,
                   help="fkamfr bandwidth grid size (default 15)")
    p.add_argument("--delta", type=float, default=1e-4,
                   help="fkamfr backfitting tolerance (default 1e-4)")
    p.add_argument("--max-iter", type=int, default=50,
                   help="fkamfr backfitting iteration cap (default 50)")
    p.add_argument("--transpose", action="store_true",
                   help="input files store one column per curve")
    p.add_argument("--log1p", action="store_true",
                   help="apply log(1 + y) to the response values")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict curves with a fitted model file")
    p.add_argument("--model", required=True)
    p.add_argument("--x", action="append", required=True)
    p.add_argument("--transpose", action="store_true")
    p.add_argument("--out", required=True, help="prediction CSV to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="functional R2 of predictions against truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--train", default=None,
                   help="training response CSV; its mean is the R2 reference")
    p.add_argument("--mean", default=None,
                   help="single-curve CSV holding the reference mean directly")
    p.add_argument("--transpose", action="store_true")
    p.add_argument("--log1p", action="store_true")
    p.add_argument("--out", default=None, help="optional JSON metrics file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="Monte Carlo grid over scenarios and methods")
    p.add_argument("--scenarios", default=",".join(SCENARIOS),
                   help="comma-separated scenario list (default all)")
    p.add_argument("--methods", default=",".join(METHODS),
                   help="comma-separated method list (default all)")
    p.add_argument("--covariates", default="2",
                   help="comma-separated covariate counts (default 2)")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", default=_default_jobs(),
                   help="worker processes (default $FUNCREG_JOBS or 1)")
    p.add_argument("--pve", type=float, default=0.95)
    p.add_argument("--df-cap", type=int, default=5)
    p.add_argument("--kernel", default="gaussian", choices=sorted(KERNELS))
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("pcmap", help="predicted-score map over covariate PC scores")
    p.add_argument("--model", required=True)
    p.add_argument("--component", type=int, default=1,
                   help="response component, 1-based (default 1)")
    p.add_argument("--covariate", type=int, default=1,
                   help="covariate to vary, 1-based (default 1)")
    p.add_argument("--resolution", type=int, default=21)
    p.add_argument("--fix-others", action="store_true",
                   help="hold other covariates at their training means")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_pcmap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        for message in exc.messages:
            print(f"invalid: {message}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
