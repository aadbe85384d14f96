"""Synthetic function-on-function regression scenarios.

Four data-generating processes on [0, 1]: a linear model with smooth
surfaces (LS), linear with non-smooth surfaces (LNS), and their nonlinear
counterparts (NLS, NLNS) where pointwise transforms are applied to the
covariates before the integral operator.  Covariates are Gaussian
processes (Ornstein-Uhlenbeck for the first, exponential covariance for
the second), noise is an independent exponential-covariance process
rescaled so the signal-to-total variance ratio equals rho2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError, NotPositiveSemidefiniteError
from .fdata import BivariateSurface, FunctionalSample, Grid, squared_norms

__all__ = [
    "SCENARIOS",
    "ScenarioSpec",
    "SimulatedDataset",
    "ou_covariance",
    "exp_covariance",
    "sample_gp",
    "beta_surface_eval",
    "phi_transform",
    "apply_linear_operator",
    "scale_noise",
    "generate_scenario",
]

SCENARIOS = ("LS", "LNS", "NLS", "NLNS")


@dataclass(frozen=True)
class ScenarioSpec:
    """Configuration of one simulated dataset."""

    kind: str
    n_covariates: int = 2
    n_train: int = 100
    n_test: int = 100
    rho2: float = 0.8
    seed: int = 0
    covariate_points: int = 51
    response_points: int = 71
    delta: float = 1.0 / 71.0

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise ValueError(f"kind must be one of {SCENARIOS}, got {self.kind!r}")
        if self.n_covariates not in (1, 2):
            raise ValueError("n_covariates must be 1 or 2")
        if self.n_train < 2 or self.n_test < 1:
            raise ValueError("need n_train >= 2 and n_test >= 1")
        if not 0.0 < self.rho2 < 1.0:
            raise ValueError("rho2 must lie strictly between 0 and 1")
        if self.covariate_points < 2 or self.response_points < 2:
            raise ValueError("grids need at least two points")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")

    def covariate_grid(self) -> Grid:
        return Grid.uniform(0.0, 1.0, self.covariate_points)

    def response_grid(self) -> Grid:
        return Grid.uniform(0.0, 1.0, self.response_points)


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    """Train/test covariates and responses plus the noiseless signal."""

    spec: ScenarioSpec
    x_train: list[FunctionalSample]
    x_test: list[FunctionalSample]
    y_train: FunctionalSample
    y_test: FunctionalSample
    signal_train: FunctionalSample
    signal_test: FunctionalSample
    c_rho: float


def ou_covariance(grid: Grid, sigma: float = 1.0, theta: float = 0.2) -> np.ndarray:
    """Ornstein-Uhlenbeck covariance started at zero.

    Sigma(u, v) = sigma^2/(2 theta) * exp(-theta (u + v)) * (exp(2 theta min(u, v)) - 1).
    """
    u = grid.points[:, np.newaxis]
    v = grid.points[np.newaxis, :]
    m = np.minimum(u, v)
    return (sigma**2 / (2.0 * theta)) * np.exp(-theta * (u + v)) * (
        np.exp(2.0 * theta * m) - 1.0
    )


def exp_covariance(grid: Grid, sigma2: float = 0.5, theta: float = 0.7) -> np.ndarray:
    """Stationary exponential covariance sigma2 * exp(-|u - v| / theta)."""
    u = grid.points[:, np.newaxis]
    v = grid.points[np.newaxis, :]
    return sigma2 * np.exp(-np.abs(u - v) / theta)


# Diagonal jitter levels tried in turn when the Cholesky factorization fails.
_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def sample_gp(
    grid: Grid, cov: np.ndarray, n: int, rng: np.random.Generator
) -> FunctionalSample:
    """Draw n mean-zero Gaussian curves with the given covariance matrix."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (grid.size, grid.size):
        raise ValueError("covariance shape does not match the grid")
    chol = None
    for jitter in _JITTERS:
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(grid.size))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise NotPositiveSemidefiniteError(
            "covariance is not positive semidefinite (jitter up to 1e-6 failed)"
        )
    draws = rng.standard_normal((n, grid.size)) @ chol.T
    return FunctionalSample(grid, draws)


def _beta_ls_1(u, v):
    return 6.0 * np.sqrt(u * v) * np.sin(4.0 * np.pi * v)


def _beta_ls_2(u, v):
    return -(u * v + 1.0) * np.cos(2.0 * np.pi * np.sqrt(u * v))


def _beta_lns_1(u, v):
    shape = np.broadcast(u, v).shape
    uu = np.broadcast_to(u, shape)
    vv = np.broadcast_to(v, shape)
    out = np.empty(shape)
    low = vv < 1.0 / 3.0
    mid = (vv >= 1.0 / 3.0) & (vv < 3.0 / 4.0)
    high = vv >= 3.0 / 4.0
    out[low] = 5.6 * np.exp(uu[low] ** 3) * ((vv[low] - 0.1) / 0.25) ** 3
    out[mid] = 6.3 * ((vv[mid] - 0.6) / 0.25) ** 5
    out[high] = -28.0 * ((vv[high] - 1.0) / 0.5) ** 2 * np.cos(np.pi * uu[high] / 2.0)
    return out


def _beta_lns_2(u, v):
    shape = np.broadcast(u, v).shape
    uu = np.broadcast_to(u, shape)
    vv = np.broadcast_to(v, shape)
    out = np.empty(shape)
    low = vv < 0.5
    out[low] = -20.0 * vv[low] ** 2 * np.cos(
        2.0 * np.pi * (2.0 * uu[low] - 1.0) * (2.0 * vv[low] - 1.0)
    )
    out[~low] = (2.0 - 3.0 * vv[~low]) ** 2
    return out


_BETAS = {
    ("LS", 0): _beta_ls_1,
    ("LS", 1): _beta_ls_2,
    ("LNS", 0): _beta_lns_1,
    ("LNS", 1): _beta_lns_2,
}


def beta_surface_eval(family: str, index: int, grid_s: Grid, grid_t: Grid) -> BivariateSurface:
    """Tabulate one of the scenario coefficient surfaces on a product grid.

    family is "LS" or "LNS"; index 0 or 1 picks the covariate.  The
    nonlinear scenarios reuse these surfaces after transforming X.
    """
    try:
        fn = _BETAS[(family, index)]
    except KeyError:
        raise ValueError(f"no surface for family {family!r}, index {index}") from None
    u = grid_s.points[:, np.newaxis]
    v = grid_t.points[np.newaxis, :]
    return BivariateSurface(grid_s, grid_t, fn(u, v))


def phi_transform(index: int, sample: FunctionalSample) -> FunctionalSample:
    """Pointwise covariate transform used by the nonlinear scenarios."""
    x = sample.values
    if index == 0:
        vals = np.exp((1.0 - x * x) / 2.0)
    elif index == 1:
        half = np.pi * (x - 2.0)  # 2*pi*(x/2 - 1)
        vals = 1.0 + x * x / 5.0 + np.cos(half) * np.sin(half)
    else:
        raise ValueError("transform index must be 0 or 1")
    return FunctionalSample(sample.grid, vals, sample.ids)


def apply_linear_operator(
    x: FunctionalSample, beta: BivariateSurface, delta: float = 1.0
) -> FunctionalSample:
    """delta * integral x(s) beta(s, t) ds, by trapezoid quadrature over s."""
    if not x.grid.matches(beta.grid_s):
        from .exceptions import GridMismatchError

        raise GridMismatchError("covariate grid does not match the surface s-grid")
    weighted = x.values * x.grid.quad_weights
    return FunctionalSample(beta.grid_t, delta * (weighted @ beta.values))


def noise_scale_factor(signal: FunctionalSample, eps: FunctionalSample, rho2: float) -> float:
    """C_rho making sum ||C eps_i||^2 = ((1 - rho2)/rho2) sum ||M_i - Mbar||^2."""
    if not 0.0 < rho2 < 1.0:
        raise ValueError("rho2 must lie strictly between 0 and 1")
    if signal.n != eps.n:
        raise ValueError("signal and noise must have the same number of curves")
    if not signal.grid.matches(eps.grid):
        from .exceptions import GridMismatchError

        raise GridMismatchError("signal and noise are on different grids")
    centered = signal.values - signal.values.mean(axis=0)
    num = float(squared_norms(centered, signal.grid).sum())
    den = float(squared_norms(eps.values, eps.grid).sum())
    if num <= 0.0:
        raise DegenerateDataError("signal has no variance; C_rho is undefined")
    if den <= 0.0:
        raise DegenerateDataError("noise has zero energy; C_rho is undefined")
    return float(np.sqrt((1.0 - rho2) / rho2 * num / den))


def scale_noise(
    signal: FunctionalSample, eps: FunctionalSample, rho2: float
) -> tuple[FunctionalSample, float]:
    """Rescale noise curves so the noise-to-signal energy ratio is (1-rho2)/rho2."""
    c = noise_scale_factor(signal, eps, rho2)
    return FunctionalSample(eps.grid, eps.values * c, eps.ids), c


def _signal(spec: ScenarioSpec, xs: list[FunctionalSample]) -> FunctionalSample:
    family = "LS" if spec.kind in ("LS", "NLS") else "LNS"
    nonlinear = spec.kind in ("NLS", "NLNS")
    grid_t = spec.response_grid()
    total = np.zeros((xs[0].n, grid_t.size))
    for j, x in enumerate(xs):
        term_in = phi_transform(j, x) if nonlinear else x
        beta = beta_surface_eval(family, j, x.grid, grid_t)
        total += apply_linear_operator(term_in, beta, spec.delta).values
    return FunctionalSample(grid_t, total)


def generate_scenario(spec: ScenarioSpec) -> SimulatedDataset:
    """Generate one train/test dataset.

    The same spec (seed included) always produces bit-identical output.
    Draw order is fixed: per covariate train then test, then train noise,
    then test noise.  C_rho is computed from the training signal and
    training noise only and applied to both splits.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    grid_s = spec.covariate_grid()
    grid_t = spec.response_grid()

    covs = [ou_covariance(grid_s, sigma=1.0, theta=0.2)]
    if spec.n_covariates == 2:
        covs.append(exp_covariance(grid_s, sigma2=0.5, theta=0.7))

    x_train, x_test = [], []
    for cov in covs:
        x_train.append(sample_gp(grid_s, cov, spec.n_train, rng))
        x_test.append(sample_gp(grid_s, cov, spec.n_test, rng))

    noise_cov = exp_covariance(grid_t, sigma2=0.5, theta=0.3)
    eps_train = sample_gp(grid_t, noise_cov, spec.n_train, rng)
    eps_test = sample_gp(grid_t, noise_cov, spec.n_test, rng)

    signal_train = _signal(spec, x_train)
    signal_test = _signal(spec, x_test)

    scaled_train, c_rho = scale_noise(signal_train, eps_train, spec.rho2)
    y_train = FunctionalSample(grid_t, signal_train.values + scaled_train.values)
    y_test = FunctionalSample(grid_t, signal_test.values + c_rho * eps_test.values)

    return SimulatedDataset(
        spec=spec,
        x_train=x_train,
        x_test=x_test,
        y_train=y_train,
        y_test=y_test,
        signal_train=signal_train,
        signal_test=signal_test,
        c_rho=c_rho,
    )
