"""Synthetic data-generating processes, conditional samplers, and the
large-sample oracle for the true optimal conditional cost.

Three generators ship with the package:

* ``NewsvendorDgp`` - two covariates (one normal, one lognormal), demand
  is a zero-truncated normal whose mean has a piecewise-constant factor.
* ``QuarticDgp`` - two normal covariates, bivariate normal outcome with a
  nonlinear mean map.
* ``WeatherDgp`` - a synthetic (temperature, wind) -> demand generator
  with a smooth unimodal demand peak; a stand-in for learned simulators,
  with no claim of matching any real system.

Every replication owns an ``RngStream``; identical (seed, stream_id)
reproduce identical samples bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .costs import FeasibleBox, Quartic, WsaaProblem
from .normal import norm_ppf

__all__ = [
    "RngStream",
    "NewsvendorDgp",
    "QuarticDgp",
    "WeatherDgp",
    "OracleFailureError",
    "OracleValue",
    "make_simulator",
    "make_quartic_cost",
    "sample_dataset",
    "sample_conditional",
    "covariate_quantile",
    "oracle_optimal_value",
    "save_dataset_csv",
    "load_dataset_csv",
]


class OracleFailureError(RuntimeError):
    """The oracle sample-average problem failed to converge."""


@dataclass(frozen=True)
class RngStream:
    """A named substream: (seed, stream_id) pins the whole sample path."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.stream_id]))


def _rejection_truncated_normal(rng, mean, sd, max_rounds: int = 10000) -> np.ndarray:
    """Sample normal(mean, sd) conditioned on >= 0 by redrawing negatives."""
    mean = np.asarray(mean, dtype=float)
    if sd == 0.0:
        return np.maximum(mean, 0.0).copy()
    y = rng.normal(mean, sd)
    bad = y < 0.0
    rounds = 0
    while bad.any():
        y[bad] = rng.normal(mean[bad], sd)
        bad = y < 0.0
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("truncated-normal rejection sampling stalled")
    return y


def _step_factor(x2: np.ndarray) -> np.ndarray:
    """Piecewise constant multiplier on right-closed intervals (-inf,2], (2,4], (4,6], (6,inf)."""
    x2 = np.asarray(x2, dtype=float)
    return np.where(x2 <= 2.0, 2.0, np.where(x2 <= 4.0, 4.0, np.where(x2 <= 6.0, 6.0, 8.0)))


@dataclass(frozen=True)
class NewsvendorDgp:
    """Covariates X1 ~ N(20, 2^2), X2 ~ LogNormal(1, 0.3^2); demand is
    normal(100 + (X1 - 20) + X2 * step(X2), noise_sd^2) truncated at zero.
    """

    x1_mean: float = 20.0
    x1_sd: float = 2.0
    x2_logmean: float = 1.0
    x2_logsd: float = 0.3
    noise_sd: float = 3.0  # 0 is a test hook: demand equals its mean exactly
    d_x = 2
    d_y = 1
    kind = "newsvendor_dgp"

    def demand_mean(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return 100.0 + (X[:, 0] - self.x1_mean) + X[:, 1] * _step_factor(X[:, 1])

    def sample_joint(self, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
        x1 = rng.normal(self.x1_mean, self.x1_sd, n)
        x2 = rng.lognormal(self.x2_logmean, self.x2_logsd, n)
        X = np.column_stack([x1, x2])
        y = _rejection_truncated_normal(rng, self.demand_mean(X), self.noise_sd)
        return X, y[:, None]

    def sample_conditional(self, x0, n: int, rng) -> np.ndarray:
        mu = float(self.demand_mean(np.asarray(x0))[0])
        y = _rejection_truncated_normal(rng, np.full(n, mu), self.noise_sd)
        return y[:, None]

    def marginal_quantile(self, tau: float) -> np.ndarray:
        z = norm_ppf(tau)
        return np.array([
            self.x1_mean + self.x1_sd * z,
            math.exp(self.x2_logmean + self.x2_logsd * z),
        ])


@dataclass(frozen=True)
class QuarticDgp:
    """Covariates X1 ~ N(10, 4), X2 ~ N(8, 1) (variances); outcome is
    bivariate normal with mean (log(X1 + 4) + 5, sqrt(|X2|) + 10) and
    identity covariance.
    """

    x1_mean: float = 10.0
    x1_sd: float = 2.0
    x2_mean: float = 8.0
    x2_sd: float = 1.0
    noise_sd: float = 1.0
    d_x = 2
    d_y = 2
    kind = "quartic_dgp"

    def outcome_mean(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([
            np.log(X[:, 0] + 4.0) + 5.0,
            np.sqrt(np.abs(X[:, 1])) + 10.0,
        ])

    def sample_joint(self, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
        X = np.column_stack([
            rng.normal(self.x1_mean, self.x1_sd, n),
            rng.normal(self.x2_mean, self.x2_sd, n),
        ])
        Y = self.outcome_mean(X) + self.noise_sd * rng.standard_normal((n, 2))
        return X, Y

    def sample_conditional(self, x0, n: int, rng) -> np.ndarray:
        mu = self.outcome_mean(np.asarray(x0))[0]
        return mu[None, :] + self.noise_sd * rng.standard_normal((n, 2))

    def marginal_quantile(self, tau: float) -> np.ndarray:
        z = norm_ppf(tau)
        return np.array([self.x1_mean + self.x1_sd * z, self.x2_mean + self.x2_sd * z])


@dataclass(frozen=True)
class WeatherDgp:
    """Synthetic weather-to-demand generator. Demand peaks at mild
    temperatures and decays with wind; conditional noise is lognormal and
    mean-preserving. Parameters put demand on the 10^3 scale.
    """

    temp_mean: float = 10.502
    temp_sd: float = 4.0
    wind_logmean: float = 1.79099
    wind_logsd: float = 0.5
    demand_scale: float = 3000.0
    temp_peak: float = 20.0
    temp_width: float = 12.0
    wind_decay: float = 25.0
    noise_sigma: float = 0.2
    d_x = 2
    d_y = 1
    kind = "weather_dgp"

    def demand_mean(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t = (X[:, 0] - self.temp_peak) / self.temp_width
        return self.demand_scale * np.exp(-t * t) * np.exp(-X[:, 1] / self.wind_decay)

    def _lognormal_noise(self, mu, rng, n):
        if self.noise_sigma == 0.0:
            return np.asarray(mu, dtype=float) * np.ones(n)
        s = self.noise_sigma
        return mu * np.exp(s * rng.standard_normal(n) - 0.5 * s * s)

    def sample_joint(self, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
        X = np.column_stack([
            rng.normal(self.temp_mean, self.temp_sd, n),
            rng.lognormal(self.wind_logmean, self.wind_logsd, n),
        ])
        y = self._lognormal_noise(self.demand_mean(X), rng, n)
        return X, y[:, None]

    def sample_conditional(self, x0, n: int, rng) -> np.ndarray:
        mu = float(self.demand_mean(np.asarray(x0))[0])
        return self._lognormal_noise(mu, rng, n)[:, None]

    def marginal_quantile(self, tau: float) -> np.ndarray:
        z = norm_ppf(tau)
        return np.array([
            self.temp_mean + self.temp_sd * z,
            math.exp(self.wind_logmean + self.wind_logsd * z),
        ])


_SIMULATORS = {
    "newsvendor_dgp": NewsvendorDgp,
    "quartic_dgp": QuarticDgp,
    "weather_dgp": WeatherDgp,
}


def make_simulator(kind: str, **params):
    """Build a simulator by name with optional parameter overrides."""
    try:
        cls = _SIMULATORS[kind]
    except KeyError:
        raise ValueError(f"unknown simulator kind {kind!r}; choose from {sorted(_SIMULATORS)}")
    return cls(**params)


def make_quartic_cost(d_z: int, rng) -> Quartic:
    """Draw quartic cost coefficients once: scales from N(20, 15) (variance),
    signs from Unif[-5, -1]. Nonpositive scale draws are redrawn so the
    convexity requirement a_j > 0 holds.
    """
    sd = math.sqrt(15.0)
    a = rng.normal(20.0, sd, d_z)
    while np.any(a <= 0):
        a[a <= 0] = rng.normal(20.0, sd, int(np.sum(a <= 0)))
    b = rng.uniform(-5.0, -1.0, d_z)
    return Quartic(a=a, b=b)


def sample_dataset(sim, n: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """n i.i.d. draws (X, Y) from the joint law; deterministic given the stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return sim.sample_joint(n, rng.generator())


def sample_conditional(sim, x0, n: int, rng: RngStream) -> np.ndarray:
    """n i.i.d. draws from Y | X = x0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x0 = np.asarray(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    return sim.sample_conditional(x0, n, rng.generator())


def covariate_quantile(sim, tau: float) -> np.ndarray:
    """Componentwise marginal quantiles of the covariates at level tau."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly between 0 and 1")
    return sim.marginal_quantile(tau)


@dataclass(frozen=True)
class OracleValue:
    """High-precision stand-in for (z*, f*) with its Monte Carlo standard error."""

    z_star: np.ndarray
    f_star: float
    std_error: float
    n_draws: int


def oracle_optimal_value(sim, x0, model, box: FeasibleBox, n_draws: int = 10**6,
                         rng: RngStream = RngStream(0, 0)) -> OracleValue:
    """Solve the equal-weight sample-average problem on conditional draws.

    Uses the closed-form route per model family (quantile for newsvendor,
    first-order bisection for expectile, high-iteration projected Newton
    for quartic) and reports the plug-in optimal value with its standard
    error.
    """
    from .solve import solve_exact

    Y = sample_conditional(sim, x0, n_draws, rng)
    w = np.full(Y.shape[0], 1.0 / Y.shape[0])
    problem = WsaaProblem(Y=Y, weights=w, model=model, box=box)
    try:
        z_star, f_star = solve_exact(problem)
    except Exception as exc:  # noqa: BLE001 - re-tagged with oracle context
        raise OracleFailureError(f"oracle SAA solve failed: {exc}") from exc
    costs = model.value_batch(z_star, Y)
    se = float(np.std(costs, ddof=1) / math.sqrt(Y.shape[0]))
    return OracleValue(z_star=z_star, f_star=float(f_star), std_error=se, n_draws=Y.shape[0])


def save_dataset_csv(path, X, Y) -> None:
    """Write a dataset as CSV with header x1,..,x{d_x},y1,..,y{d_y}."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    names = [f"x{j + 1}" for j in range(X.shape[1])] + [f"y{j + 1}" for j in range(Y.shape[1])]
    data = np.hstack([X, Y])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", encoding="utf-8")


def load_dataset_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a dataset written by :func:`save_dataset_csv` (or shaped like it)."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        names = [c.strip() for c in fh.readline().split(",")]
    d_x = sum(1 for c in names if c.startswith("x"))
    d_y = sum(1 for c in names if c.startswith("y"))
    if d_x == 0 or d_y == 0 or d_x + d_y != len(names):
        raise ValueError(f"unrecognized dataset header {names!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != d_x + d_y:
        raise ValueError("data width does not match the header")
    return data[:, :d_x], data[:, d_x:]
