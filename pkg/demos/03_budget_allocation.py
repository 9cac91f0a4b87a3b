"""How a compute budget splits between sample size and iterations across
solver convergence regimes, and what rate each split buys.

Run: python3 demos/03_budget_allocation.py
"""

import math

from wsaa import (
    Linear,
    Sublinear,
    Superlinear,
    allocate,
    initial_gap_psi,
    kappa_star,
    theoretical_rate,
    theta_for_projected_gd,
)

DELTA, DX = 0.2, 2

theta = theta_for_projected_gd(lam=1.0, lip=2.0, a=0.45, b=0.9)
regimes = {
    "sublinear (subgradient, beta=1/2)": Sublinear(beta=0.5),
    f"linear (grad descent, theta={theta})": Linear(theta=theta),
    "superlinear (Newton, eta=2)": Superlinear(theta=1.0, eta=2.0),
}

print(f"undersmoothing exponent delta = {DELTA}, covariate dimension d_x = {DX}\n")
for label, regime in regimes.items():
    ks = kappa_star(regime, DELTA, DX)
    rate = theoretical_rate(regime, "optimal", DELTA, DX)
    print(f"{label}")
    print(f"  threshold kappa* = {ks:.4f}   rate exponent {rate:+.4f}")
    for gamma in (10**3, 10**4, 10**5, 10**6):
        plan = allocate(regime, "optimal", gamma, DELTA, DX)
        print(f"  gamma = {gamma:>8,}: n = {plan.n:>7,}  m = {plan.m:>4}  "
              f"(n*m/gamma = {plan.n * plan.m / gamma:.3f})")
    print()

print("Over-optimizing hedges a misspecified contraction factor:")
for kt in (0.3, 0.5):
    plan = allocate(Linear(theta), "over_optimizing", 10**5, DELTA, DX, kappa_tilde=kt)
    rate = theoretical_rate(Linear(theta), "over_optimizing", DELTA, DX, kappa_tilde=kt)
    print(f"  kappa_tilde = {kt}: m = {plan.m:>4}, n = {plan.n:>6,}, "
          f"rate exponent {rate:+.3f} (optimal would be -0.300)")

print("\nMisallocating below the threshold degrades the rate instead:")
ks = kappa_star(Linear(theta), DELTA, DX)
for frac in (0.25, 0.5, 1.0):
    rate = theoretical_rate(Linear(theta), "optimal", DELTA, DX, kappa_override=frac * ks)
    print(f"  kappa = {frac:4} * kappa*: rate exponent {rate:+.4f}")

print("\nNewton's basin diagnostic: psi must reach (1 - delta*d_x)/2 =",
      (1 - DELTA * DX) / 2)
for gap in (1.0, 1e-1, 1e-3):
    print(f"  initial optimality gap {gap:g}: psi = "
          f"{initial_gap_psi(1.0, 2.0, gap, 0.0):+.3f}")
