"""A small end-to-end Monte Carlo experiment through the harness:
coverage, relative width, relative RMSE, and the fitted error rate.

Run: python3 demos/05_monte_carlo_experiment.py
(The shipped configs/ files are the full-scale versions of this.)
"""

from wsaa import ExperimentConfig, run_experiment

cfg = ExperimentConfig.from_dict({
    "dgp": "newsvendor_dgp",
    "model": {"kind": "newsvendor", "c_u": 10.0, "c_o": 2.0},
    "box": {"lower": [0.0], "upper": [200.0]},
    "kernel": "gaussian",
    "delta": 0.2,
    "h0": 0.65,
    "x0": {"tau": 0.25},
    "mode": {"type": "unconstrained", "grid": [100, 316, 1000, 3162]},
    "replications": 120,
    "alpha": 0.05,
    "base_seed": 2026,
    "oracle_n": 200_000,
})

records, summary = run_experiment(cfg)
print(f"true value f* = {summary.f_star:.4f} (oracle se {summary.f_star_se:.4f})")
print(f"{'n':>6} {'coverage':>9} {'rel width':>10} {'rel RMSE':>9} {'failed':>7}")
for pt in summary.points:
    print(f"{pt.n:>6} {pt.coverage:>9.3f} {pt.mean_rel_width:>10.3f} "
          f"{pt.rel_rmse:>9.4f} {pt.n_failed:>7}")
print(f"\nfitted log-log RMSE slope: {summary.slope:.3f} "
      f"(theory {summary.theoretical_rate:.3f}); {len(records)} records")
print("write outputs with: wsaa experiment --config configs/<name>.yaml --out outdir")
