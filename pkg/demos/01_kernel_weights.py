"""Relevance weights 101: how kernel choice and bandwidth shape the
empirical conditional distribution at a query covariate.

Run: python3 demos/01_kernel_weights.py
"""

import numpy as np

from wsaa import (
    BandwidthSchedule,
    KernelSpec,
    NewsvendorDgp,
    RngStream,
    bandwidth,
    kde,
    kernel_r2,
    nw_weights,
    sample_dataset,
    sum_sq_weights,
)

sim = NewsvendorDgp()
X, Y = sample_dataset(sim, 2000, RngStream(seed=11, stream_id=0))
x0 = np.array([20.0, 2.7])

print("Dataset: 2000 samples of (temperature-like covariates, demand)")
print(f"Query covariate x0 = {x0}\n")

sched = BandwidthSchedule(h0=1.0, delta=0.2, d_x=2)
h = bandwidth(sched, len(X))
print(f"Bandwidth schedule h = h0 * n^-delta = {h:.4f} at n = {len(X)}")

for family in ("gaussian", "epanechnikov", "uniform"):
    spec = KernelSpec(family)
    w = nw_weights(X, x0, spec, h)
    eff = 1.0 / sum_sq_weights(w)
    dens = kde(X, x0, spec, h)
    top = np.sort(w.values)[-3:][::-1]
    print(f"{family:>13}: effective sample size {eff:7.1f}   "
          f"kde {dens:.4f}   top-3 weights {np.round(top, 4)}")

print("\nSquared-kernel integrals R2(K) (d_x = 2):")
for family in ("gaussian", "epanechnikov", "uniform"):
    print(f"{family:>13}: {kernel_r2(KernelSpec(family), 2):.6f}")

print("\nShrinking the bandwidth concentrates the weights:")
for h0 in (4.0, 1.0, 0.25):
    w = nw_weights(X, x0, KernelSpec("gaussian"), h0 * len(X) ** -0.2)
    print(f"  h0 = {h0:4}: effective sample size {1.0 / sum_sq_weights(w):8.1f}")
