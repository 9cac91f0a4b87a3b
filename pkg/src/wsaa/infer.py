"""Variance estimation and normal-limit confidence intervals for the
optimal conditional expected cost.

The default interval uses the density-free variance estimate
V_hat = (n h^d) * sigma2_hat * sum(w^2); the direct estimate
sigma2_hat * R2(K) / kde is kept only as a consistency cross-check since
dividing by a kernel density estimate is numerically fragile.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .costs import WsaaProblem
from .kernels import sum_sq_weights
from .normal import norm_ppf

__all__ = [
    "DegenerateDensityError",
    "IntervalReport",
    "sample_cond_variance",
    "variance_estimate",
    "direct_variance_estimate",
    "confidence_interval",
    "error_decomposition",
]

log = logging.getLogger(__name__)


class DegenerateDensityError(ZeroDivisionError):
    """The kernel density estimate vanished at the query point."""


@dataclass(frozen=True)
class IntervalReport:
    """A two-sided interval estimate +- half_width around ``estimate``."""

    estimate: float
    variance_hat: float
    half_width: float
    lower: float
    upper: float
    level: float
    n: int
    h: float
    d_x: int


def sample_cond_variance(p: WsaaProblem, z) -> float:
    """Weighted variance of the per-sample costs at z."""
    vals = p.model.value_batch(z, p.Y)
    center = float(p.weights @ vals)
    return float(p.weights @ (vals - center) ** 2)


def variance_estimate(p: WsaaProblem, z, n: int, h: float, d_x: int) -> float:
    """Density-free variance estimate (n h^d_x) * sigma2_hat * sum(w^2)."""
    return n * h**d_x * sample_cond_variance(p, z) * sum_sq_weights(p.weights)


def direct_variance_estimate(p: WsaaProblem, z, kde_value: float, r2: float) -> float:
    """sigma2_hat * R2(K) / kde; cross-check only, not used for intervals."""
    if kde_value <= 0.0:
        raise DegenerateDensityError("kernel density estimate is zero at the query point")
    return sample_cond_variance(p, z) * r2 / kde_value


def confidence_interval(estimate: float, variance_hat: float, n: int, h: float,
                        d_x: int, alpha: float) -> IntervalReport:
    """Two-sided 100(1-alpha)% interval for the optimal conditional cost.

    The same construction serves the exactly-solved and the budgeted
    estimator; the caller supplies the variance computed at whichever
    decision it delivered.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if variance_hat < 0.0:
        log.debug("clamping negative variance estimate %.3e to zero", variance_hat)
        variance_hat = 0.0
    half = norm_ppf(1.0 - alpha / 2.0) * math.sqrt(variance_hat / (n * h**d_x))
    return IntervalReport(
        estimate=float(estimate),
        variance_hat=float(variance_hat),
        half_width=float(half),
        lower=float(estimate - half),
        upper=float(estimate + half),
        level=1.0 - alpha,
        n=int(n),
        h=float(h),
        d_x=int(d_x),
    )


def error_decomposition(f_budgeted: float, f_exact: float, f_star: float) -> tuple[float, float]:
    """Split the total error into (optimization, statistical) parts whose
    sum is exactly f_budgeted - f_star."""
    return f_budgeted - f_exact, f_exact - f_star
