"""Monte Carlo benchmark over the simulation scenarios.

Each replication (scenario, covariate count, index) is one generated
dataset; every requested method fits the same dataset, so method columns
are paired.  Replication seeds are derived deterministically from the
master seed and the cell coordinates, never from worker scheduling, so
reports are identical for any parallelism degree.  Wall-clock numbers
live in a separate timings table because they are not reproducible.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec
from .kernel import KernelAdditiveConfig, fit_fkamfr, predict_fkamfr
from .linear import fit_flmfr, predict_flmfr
from .metrics import r2_functional
from .simulate import SCENARIOS, ScenarioSpec, generate_scenario
from .smoothing import DEFAULT_DF_CAP
from .spectral import fit_fsamfr, predict_fsamfr

__all__ = [
    "METHODS",
    "BenchmarkConfig",
    "ReplicationResult",
    "BenchmarkReport",
    "replication_seed",
    "run_benchmark",
]

METHODS = ("flmfr", "fsamfr", "fkamfr")


@dataclass(frozen=True)
class BenchmarkConfig:
    scenarios: tuple[str, ...] = SCENARIOS
    methods: tuple[str, ...] = METHODS
    covariate_counts: tuple[int, ...] = (2,)
    n_train: int = 100
    n_test: int = 100
    replications: int = 10
    seed: int = 0
    jobs: int = 1
    pve: float = 0.95
    df_cap: int = DEFAULT_DF_CAP
    kernel: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "covariate_counts", tuple(self.covariate_counts))
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise ValueError(f"unknown scenario {s!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        if not self.scenarios or not self.methods or not self.covariate_counts:
            raise ValueError("scenarios, methods and covariate_counts must be nonempty")
        for c in self.covariate_counts:
            if c not in (1, 2):
                raise ValueError("covariate counts must be 1 or 2")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")
        if not 0.0 < self.pve <= 1.0:
            raise ValueError("pve must lie in (0, 1]")


@dataclass(frozen=True)
class ReplicationResult:
    scenario: str
    n_covariates: int
    method: str
    replication: int
    seed: int
    r2_e: float | None
    r2_p: float | None
    error: str = ""
    elapsed: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return not self.error


def replication_seed(master_seed: int, scenario: str, n_covariates: int, rep: int) -> int:
    """Deterministic dataset seed for one benchmark replication."""
    entropy = [int(master_seed), SCENARIOS.index(scenario), int(n_covariates), int(rep)]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _fit_and_score(method: str, data, config: BenchmarkConfig):
    y, xs = data.y_train, data.x_train
    spec = BasisSpec(pve=config.pve)
    if method == "flmfr":
        model = fit_flmfr(y, xs, response_basis=spec, covariate_bases=spec)
        pred = predict_flmfr(model, data.x_test)
    elif method == "fsamfr":
        model = fit_fsamfr(y, xs, response_basis=spec, covariate_bases=spec,
                           df_cap=config.df_cap)
        pred = predict_fsamfr(model, data.x_test)
    else:
        model = fit_fkamfr(y, xs, KernelAdditiveConfig(kernel=config.kernel))
        pred = predict_fkamfr(model, data.x_test)
    train_mean = y.mean_curve()
    r2_e = r2_functional(y, model.fitted, train_mean)
    r2_p = r2_functional(data.y_test, pred, train_mean)
    return r2_e, r2_p


def _run_replication(task) -> list[ReplicationResult]:
    config, scenario, n_cov, rep = task
    seed = replication_seed(config.seed, scenario, n_cov, rep)
    data = generate_scenario(
        ScenarioSpec(scenario, n_covariates=n_cov, n_train=config.n_train,
                     n_test=config.n_test, seed=seed)
    )
    rows = []
    for method in config.methods:
        started = time.perf_counter()
        try:
            r2_e, r2_p = _fit_and_score(method, data, config)
            rows.append(ReplicationResult(
                scenario, n_cov, method, rep, seed, r2_e, r2_p,
                elapsed=time.perf_counter() - started,
            ))
        except Exception as exc:
            rows.append(ReplicationResult(
                scenario, n_cov, method, rep, seed, None, None,
                error=f"{type(exc).__name__}: {exc}",
                elapsed=time.perf_counter() - started,
            ))
    return rows


@dataclass(frozen=True, eq=False)
class BenchmarkReport:
    config: BenchmarkConfig
    rows: tuple[ReplicationResult, ...]

    def cell(self, scenario: str, n_covariates: int, method: str) -> list[ReplicationResult]:
        return [
            r for r in self.rows
            if r.scenario == scenario
            and r.n_covariates == n_covariates
            and r.method == method
        ]

    def cell_mean(self, scenario: str, n_covariates: int, method: str) -> tuple[float, float]:
        """Mean (r2_e, r2_p) over the successful replications of one cell."""
        good = [r for r in self.cell(scenario, n_covariates, method) if r.ok]
        if not good:
            raise ValueError(f"no successful replications for {scenario}/{method}")
        return (
            float(np.mean([r.r2_e for r in good])),
            float(np.mean([r.r2_p for r in good])),
        )

    def results_csv(self) -> str:
        lines = ["scenario,covariates,method,replication,seed,r2_e,r2_p,error"]
        for r in self.rows:
            lines.append(",".join([
                r.scenario,
                str(r.n_covariates),
                r.method,
                str(r.replication),
                str(r.seed),
                "" if r.r2_e is None else repr(r.r2_e),
                "" if r.r2_p is None else repr(r.r2_p),
                r.error.replace(",", ";"),
            ]))
        return "\n".join(lines) + "\n"

    def timings_csv(self) -> str:
        lines = ["scenario,covariates,method,replication,seconds"]
        for r in self.rows:
            lines.append(",".join([
                r.scenario, str(r.n_covariates), r.method,
                str(r.replication), f"{r.elapsed:.6f}",
            ]))
        return "\n".join(lines) + "\n"

    def summary_markdown(self) -> str:
        cfg = self.config
        out = [
            "# Benchmark summary",
            "",
            f"Scenarios {', '.join(cfg.scenarios)}; n_train={cfg.n_train}, "
            f"n_test={cfg.n_test}, {cfg.replications} replications, "
            f"master seed {cfg.seed}.",
            "",
        ]
        for n_cov in cfg.covariate_counts:
            out.append(f"## {n_cov} covariate{'s' if n_cov != 1 else ''}")
            out.append("")
            out.append(
                "| scenario | method | mean R2_e | se | median R2_e "
                "| mean R2_p | se | median R2_p | ok | failed |"
            )
            out.append("|---|---|---|---|---|---|---|---|---|---|")
            for scenario in cfg.scenarios:
                for method in cfg.methods:
                    rows = self.cell(scenario, n_cov, method)
                    good = [r for r in rows if r.ok]
                    failed = len(rows) - len(good)
                    if good:
                        e = np.array([r.r2_e for r in good])
                        p = np.array([r.r2_p for r in good])
                        se_e = e.std(ddof=1) / np.sqrt(e.size) if e.size > 1 else 0.0
                        se_p = p.std(ddof=1) / np.sqrt(p.size) if p.size > 1 else 0.0
                        cells = [
                            f"{e.mean():.3f}", f"{se_e:.3f}", f"{np.median(e):.3f}",
                            f"{p.mean():.3f}", f"{se_p:.3f}", f"{np.median(p):.3f}",
                        ]
                    else:
                        cells = ["-"] * 6
                    out.append(
                        "| " + " | ".join(
                            [scenario, method] + cells + [str(len(good)), str(failed)]
                        ) + " |"
                    )
            out.append("")
        return "\n".join(out)


def run_benchmark(config: BenchmarkConfig) -> BenchmarkReport:
    """Run the scenario x method grid and gather per-replication results."""
    tasks = [
        (config, scenario, n_cov, rep)
        for scenario in config.scenarios
        for n_cov in config.covariate_counts
        for rep in range(config.replications)
    ]
    if config.jobs == 1:
        chunks = [_run_replication(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            chunks = list(pool.map(_run_replication, tasks))
    rows = [row for chunk in chunks for row in chunk]
    order = {
        (s, c, m): i
        for i, (s, c, m) in enumerate(
            (s, c, m)
            for s in config.scenarios
            for c in config.covariate_counts
            for m in config.methods
        )
    }
    rows.sort(key=lambda r: (order[(r.scenario, r.n_covariates, r.method)], r.replication))
    return BenchmarkReport(config=config, rows=tuple(rows))
