"""Interval estimates for the optimal conditional cost: variance
estimation, the error decomposition, and a small coverage check.

Run: python3 demos/04_confidence_intervals.py
"""

import numpy as np

from wsaa import (
    FeasibleBox,
    KernelSpec,
    Newsvendor,
    NewsvendorDgp,
    RngStream,
    SolverConfig,
    WsaaProblem,
    confidence_interval,
    covariate_quantile,
    error_decomposition,
    nw_weights,
    oracle_optimal_value,
    projected_subgradient,
    sample_cond_variance,
    sample_dataset,
    solve_exact,
    sum_sq_weights,
    variance_estimate,
)

sim = NewsvendorDgp()
model = Newsvendor(10.0, 2.0)
box = FeasibleBox([0.0], [200.0])
kern = KernelSpec("gaussian")
x0 = covariate_quantile(sim, 0.25)

oracle = oracle_optimal_value(sim, x0, model, box, n_draws=10**6,
                              rng=RngStream(seed=7, stream_id=10**6))
print(f"query x0 = {np.round(x0, 3)}")
print(f"true optimal conditional cost f* = {oracle.f_star:.4f} "
      f"(+- {oracle.std_error:.4f} oracle noise)\n")

n, h0, delta = 4000, 0.65, 0.2
h = h0 * n**-delta
X, Y = sample_dataset(sim, n, RngStream(seed=7, stream_id=0))
w = nw_weights(X, x0, kern, h)
p = WsaaProblem(Y=Y, weights=w.values, model=model, box=box)

z_exact, f_exact = solve_exact(p)
v_hat = variance_estimate(p, z_exact, n, h, 2)
ci = confidence_interval(f_exact, v_hat, n, h, 2, alpha=0.05)
print(f"exact solve:    estimate {ci.estimate:.4f}  95% interval "
      f"[{ci.lower:.4f}, {ci.upper:.4f}]  covers f*: {ci.lower <= oracle.f_star <= ci.upper}")

trace = projected_subgradient(p, SolverConfig("subgradient", 25, [100.0], mu0=2.0))
v_b = variance_estimate(p, trace.delivered_z, n, h, 2)
ci_b = confidence_interval(trace.delivered_objective, v_b, n, h, 2, alpha=0.05)
opt_err, stat_err = error_decomposition(trace.delivered_objective, f_exact, oracle.f_star)
print(f"budgeted solve: estimate {ci_b.estimate:.4f}  95% interval "
      f"[{ci_b.lower:.4f}, {ci_b.upper:.4f}]")
print(f"error split: optimization {opt_err:+.5f}  statistical {stat_err:+.5f}\n")

print("Coverage over 200 fresh replications (nominal 95%):")
hits = 0
for rep in range(200):
    X, Y = sample_dataset(sim, n, RngStream(seed=7, stream_id=rep))
    w = nw_weights(X, x0, kern, h)
    p = WsaaProblem(Y=Y, weights=w.values, model=model, box=box)
    z, f = solve_exact(p)
    s2 = sample_cond_variance(p, z)
    ci = confidence_interval(f, n * h * h * s2 * sum_sq_weights(p.weights), n, h, 2, 0.05)
    hits += ci.lower <= oracle.f_star <= ci.upper
print(f"covered {hits}/200 = {hits / 200:.1%}")
