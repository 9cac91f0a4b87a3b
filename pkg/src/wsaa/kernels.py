"""Kernel functions, bandwidth schedules, and Nadaraya-Watson relevance weights.

Everything here is a pure function of its inputs. Weights are always
normalized to a probability vector; compact-support kernels raise
``EmptyNeighborhoodError`` instead of returning NaN weights when no
observation falls inside the bandwidth.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KernelSpec",
    "BandwidthSchedule",
    "WeightVector",
    "EmptyNeighborhoodError",
    "kernel_eval",
    "bandwidth",
    "nw_weights",
    "kde",
    "kernel_r2",
    "kernel_mass",
    "sum_sq_weights",
]

_FAMILIES = ("uniform", "epanechnikov", "gaussian")


class EmptyNeighborhoodError(ValueError):
    """No observation carries kernel mass at the query point."""

    def __init__(self, h: float, min_distance: float):
        self.h = h
        self.min_distance = min_distance
        super().__init__(
            f"all kernel weights are zero at bandwidth h={h:g}; "
            f"nearest observation is at distance {min_distance:g}"
        )


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family. All three families peak at 1 for u = 0."""

    family: str = "gaussian"

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {_FAMILIES}")


@dataclass(frozen=True)
class BandwidthSchedule:
    """Shrinking bandwidth h(n) = h0 * n**(-delta).

    ``delta`` must lie in (0, 1/d_x). Values at or below 1/(d_x + 4) are
    allowed but flagged: they fall outside the undersmoothing range needed
    for bias-free normal limits.
    """

    h0: float
    delta: float
    d_x: int
    outside_debias_range: bool = field(init=False)

    def __post_init__(self):
        if self.h0 <= 0:
            raise ValueError("h0 must be positive")
        if self.d_x < 1:
            raise ValueError("d_x must be a positive integer")
        if not 0 < self.delta < 1.0 / self.d_x:
            raise ValueError(f"delta must lie in (0, {1.0 / self.d_x:g})")
        flagged = self.delta <= 1.0 / (self.d_x + 4)
        object.__setattr__(self, "outside_debias_range", flagged)
        if flagged:
            warnings.warn(
                f"delta={self.delta:g} <= 1/(d_x+4)={1.0 / (self.d_x + 4):g}: "
                "outside the undersmoothing range; interval estimates may be biased",
                stacklevel=2,
            )


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative weights summing to one."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("weights must be finite and nonnegative")
        total = v.sum()
        if not math.isclose(total, 1.0, rel_tol=1e-12):
            raise ValueError(f"weights must sum to 1, got {total!r}")

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _as_points(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("kernel input must be finite")
    return u


def kernel_eval(spec: KernelSpec, u) -> float:
    """Evaluate K(u) for a single point u (any shape treated as one vector)."""
    u = _as_points(u).ravel()
    sq = float(u @ u)
    if spec.family == "gaussian":
        return math.exp(-0.5 * sq)
    if spec.family == "uniform":
        return 1.0 if sq <= 1.0 else 0.0
    return (1.0 - sq) if sq <= 1.0 else 0.0


def _kernel_batch(spec: KernelSpec, sq_norms: np.ndarray) -> np.ndarray:
    """K at many points given squared norms. Gaussian handled in log space elsewhere."""
    if spec.family == "gaussian":
        return np.exp(-0.5 * sq_norms)
    if spec.family == "uniform":
        return (sq_norms <= 1.0).astype(float)
    return np.where(sq_norms <= 1.0, 1.0 - sq_norms, 0.0)


def bandwidth(sched: BandwidthSchedule, n: int) -> float:
    """h(n) = h0 * n**(-delta)."""
    if n < 1:
        raise ValueError("sample size n must be >= 1")
    return sched.h0 * float(n) ** (-sched.delta)


def _scaled_sq_norms(X: np.ndarray, x0: np.ndarray, h: float) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x0 = np.asarray(x0, dtype=float).ravel()
    if X.shape[1] != x0.size:
        raise ValueError(f"covariate dimension mismatch: X has {X.shape[1]}, x0 has {x0.size}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(x0))):
        raise ValueError("covariates must be finite")
    if h <= 0:
        raise ValueError("bandwidth h must be positive")
    diff = (X - x0) / h
    return np.einsum("ij,ij->i", diff, diff)


def nw_weights(X, x0, spec: KernelSpec, h: float) -> WeightVector:
    """Nadaraya-Watson weights w_i = K((x_i - x0)/h) / sum_j K((x_j - x0)/h).

    For the gaussian family the normalization is done in log space
    (max-subtracted) so that distant queries do not underflow to 0/0.
    """
    sq = _scaled_sq_norms(X, x0, h)
    if spec.family == "gaussian":
        logk = -0.5 * sq
        w = np.exp(logk - logk.max())
    else:
        w = _kernel_batch(spec, sq)
        if w.sum() == 0.0:
            raise EmptyNeighborhoodError(h, float(np.sqrt(sq.min()) * h))
    w = w / w.sum()
    w = w / w.sum()  # second pass pins the sum to 1 within 1e-12 relative
    return WeightVector(w)


def kde(X, x0, spec: KernelSpec, h: float) -> float:
    """Kernel density estimate (n * h**d_x)^-1 * sum_i K((x_i - x0)/h)."""
    sq = _scaled_sq_norms(X, x0, h)
    d_x = np.asarray(x0).size
    n = sq.size
    return float(_kernel_batch(spec, sq).sum() / (n * h**d_x))


def _unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def kernel_r2(spec: KernelSpec, d_x: int) -> float:
    """The squared-kernel integral R2(K) = ∫ K(u)^2 du over R^d_x.

    Closed forms: gaussian pi**(d/2); uniform the unit-ball volume;
    epanechnikov hard-coded for d_x <= 3 from the radial integral
    S_{d-1} * ∫_0^1 (1 - r^2)^2 r^(d-1) dr, numeric quadrature beyond.
    """
    if d_x < 1:
        raise ValueError("d_x must be a positive integer")
    if spec.family == "gaussian":
        return math.pi ** (d_x / 2.0)
    if spec.family == "uniform":
        return _unit_ball_volume(d_x)
    if d_x == 1:
        return 16.0 / 15.0
    if d_x == 2:
        return math.pi / 3.0
    if d_x == 3:
        return 32.0 * math.pi / 105.0
    from scipy.integrate import quad

    surface = 2.0 * math.pi ** (d_x / 2.0) / math.gamma(d_x / 2.0)
    radial, _ = quad(lambda r: (1.0 - r * r) ** 2 * r ** (d_x - 1), 0.0, 1.0)
    return surface * radial


def kernel_mass(spec: KernelSpec, d_x: int) -> float:
    """Total kernel mass ∫ K(u) du for the package's unnormalized kernels.

    Dividing a raw K-sum density estimate by this mass (and R2 by its
    square) converts to the probability-kernel convention under which the
    direct variance estimator targets the same limit as the density-free
    one; the weights themselves never depend on it.
    """
    if d_x < 1:
        raise ValueError("d_x must be a positive integer")
    if spec.family == "gaussian":
        return (2.0 * math.pi) ** (d_x / 2.0)
    if spec.family == "uniform":
        return _unit_ball_volume(d_x)
    surface = 2.0 * math.pi ** (d_x / 2.0) / math.gamma(d_x / 2.0)
    return surface * 2.0 / (d_x * (d_x + 2.0))


def sum_sq_weights(w) -> float:
    """Sum of squared weights, the effective-sample factor in the variance estimator."""
    v = np.asarray(w, dtype=float)
    return float(v @ v)
