"""Budget allocation between sample size n and solver iterations m.

A total budget ``gamma`` is spent at n units per iteration, so n * m is
kept just below gamma. The iteration rule depends on the solver's
convergence regime:

=============  ==================  =====================================
regime         optimal rule        over-optimizing rule
=============  ==================  =====================================
sublinear      m ~ c0 gamma^k*     (not applicable)
linear         m ~ k* log gamma    m ~ c0 gamma^kt, kt in (0, 1)
superlinear    m ~ k* loglog gamma m ~ kt log gamma, kt > 0
=============  ==================  =====================================

``kappa_override`` substitutes the constant in the optimal rule; setting
it below the threshold k* reproduces misallocation on purpose.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = [
    "AllocationPlan",
    "kappa_star",
    "allocate",
    "theta_for_projected_gd",
    "theoretical_rate",
    "initial_gap_psi",
]


@dataclass(frozen=True)
class AllocationPlan:
    regime: str
    rule: str
    gamma: int
    n: int
    m: int
    kappa_star: float
    kappa_used: float | None
    rate_exponent: float

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be at least 1")
        if self.n * self.m > self.gamma:
            raise ValueError("allocation exceeds the budget")


def _check_delta(delta: float, d_x: int) -> float:
    if d_x < 1:
        raise ValueError("d_x must be a positive integer")
    if not 0.0 < delta < 1.0 / d_x:
        raise ValueError(f"delta must lie in (0, {1.0 / d_x:g})")
    return 1.0 - delta * d_x


def kappa_star(regime, delta: float, d_x: int) -> float:
    """Threshold constant of the optimal allocation rule."""
    exponent = _check_delta(delta, d_x)
    if regime.regime == "sublinear":
        return exponent / (exponent + 2.0 * regime.beta)
    if regime.regime == "linear":
        return exponent / (2.0 * math.log(1.0 / regime.theta))
    if regime.regime == "superlinear":
        return 1.0 / math.log(regime.eta)
    raise ValueError(f"unknown regime {regime!r}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def allocate(regime, rule: str, gamma: int, delta: float, d_x: int,
             c0: float | None = None, kappa_tilde: float | None = None,
             kappa_override: float | None = None) -> AllocationPlan:
    """Split a budget into (n, m) under the given regime and rule.

    ``rule`` is "optimal" or "over_optimizing". ``c0`` scales polynomial
    iteration rules (default 1 for sublinear, kappa_star for linear
    over-optimizing, matching the experiment convention).
    """
    if gamma < 8:
        raise ValueError("budget gamma must be at least 8")
    ks = kappa_star(regime, delta, d_x)
    kind = regime.regime
    if rule == "optimal":
        kappa = ks if kappa_override is None else float(kappa_override)
        if kind == "sublinear":
            m_raw = (1.0 if c0 is None else c0) * gamma**kappa
        elif kind == "linear":
            m_raw = kappa * math.log(gamma)
        else:
            m_raw = kappa * math.log(math.log(gamma))
    elif rule == "over_optimizing":
        if kind == "sublinear":
            raise ValueError("over-optimizing is not defined for the sublinear regime")
        if kappa_tilde is None:
            raise ValueError("over-optimizing needs kappa_tilde")
        kappa = float(kappa_tilde)
        if kind == "linear":
            if not 0.0 < kappa < 1.0:
                raise ValueError("kappa_tilde must lie in (0, 1) for the linear regime")
            m_raw = (ks if c0 is None else c0) * gamma**kappa
        else:
            if kappa <= 0:
                raise ValueError("kappa_tilde must be positive")
            m_raw = kappa * math.log(gamma)
    else:
        raise ValueError(f"unknown allocation rule {rule!r}")

    if m_raw < 1.0:
        warnings.warn(
            f"allocation rule yields m={m_raw:.3g} < 1 at gamma={gamma}; clamping to 1 "
            "(the asymptotic rules are meaningless at tiny budgets)",
            stacklevel=2,
        )
    m = max(1, _round_half_up(m_raw))
    m = min(m, gamma)  # never let rounding starve the sample entirely
    n = gamma // m
    rate = theoretical_rate(regime, rule, delta, d_x,
                            kappa_tilde=kappa_tilde, kappa_override=kappa_override)
    return AllocationPlan(regime=kind, rule=rule, gamma=gamma, n=n, m=m,
                          kappa_star=ks, kappa_used=kappa, rate_exponent=rate)


def theta_for_projected_gd(lam: float, lip: float, a: float, b: float) -> float:
    """Worst-case linear rate 1 - a b lam / lip for projected gradient
    descent with Armijo backtracking on a lam-strongly-convex objective
    with lip-Lipschitz gradients."""
    if lam <= 0 or lip <= 0 or lam > lip:
        raise ValueError("need 0 < lam <= lip")
    if not 0.0 < a < 0.5:
        raise ValueError("a must lie in (0, 0.5)")
    if not 0.0 < b < 1.0:
        raise ValueError("b must lie in (0, 1)")
    return 1.0 - a * b * lam / lip


def theoretical_rate(regime, rule: str, delta: float, d_x: int,
                     kappa_tilde: float | None = None,
                     kappa_override: float | None = None) -> float:
    """Power of gamma in the estimator's convergence rate (log factors
    dropped). Misallocated optimal rules (kappa_override below the
    threshold) get the degraded exponent."""
    exponent = _check_delta(delta, d_x)
    ks = kappa_star(regime, delta, d_x)
    kind = regime.regime
    if rule == "optimal":
        if kappa_override is not None and kappa_override < ks:
            if kind == "sublinear":
                return -kappa_override * regime.beta
            if kind == "linear":
                return -kappa_override * math.log(1.0 / regime.theta)
            raise ValueError("misallocated superlinear rates are not exposed; "
                             "see initial_gap_psi for the basin diagnostic")
        if kind == "sublinear":
            return -ks * regime.beta
        return -exponent / 2.0
    if rule == "over_optimizing":
        if kind == "linear":
            if kappa_tilde is None:
                raise ValueError("over-optimizing needs kappa_tilde")
            return -(1.0 - kappa_tilde) * exponent / 2.0
        if kind == "superlinear":
            return -exponent / 2.0
        raise ValueError("over-optimizing is not defined for the sublinear regime")
    raise ValueError(f"unknown allocation rule {rule!r}")


def initial_gap_psi(theta: float, eta: float, f_z0: float, f_star: float) -> float:
    """Log-scale proximity of the starting value to the optimum:
    log(theta^(-1/(eta-1)) / (f_z0 - f_star)). The superlinear optimal
    allocation keeps normality when this is at least (1 - delta d_x)/2."""
    if eta <= 1.0:
        raise ValueError("eta must exceed 1")
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    gap = f_z0 - f_star
    if gap <= 0.0:
        raise ValueError("initial value must exceed the optimal value")
    return -math.log(theta) / (eta - 1.0) - math.log(gap)
