"""Command-line entry points.

Subcommands: ``solve`` (one dataset -> decision + objective), ``infer``
(dataset -> interval report), ``allocate`` (regime + budget -> plan),
``cv`` (dataset -> tuned constants), ``experiment`` (config file ->
records.csv + summary.json).

Exit codes: 0 success, 2 config/usage error, 3 experiment degraded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import budget as budget_mod
from .costs import Expectile, FeasibleBox, Newsvendor, WsaaProblem
from .harness import (
    ConfigError,
    ExperimentConfig,
    build_regime,
    run_experiment,
    write_records_csv,
    write_summary_json,
)
from .infer import confidence_interval, sample_cond_variance
from .kernels import KernelSpec, nw_weights, sum_sq_weights
from .simulate import load_dataset_csv
from .solve import solve_exact
from .tune import CvGrid, kfold_cv
from .simulate import RngStream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGRADED = 3


def _parse_vector(text: str) -> np.ndarray:
    return np.asarray([float(v) for v in text.split(",") if v.strip() != ""], dtype=float)


def _model_from_args(args) -> object:
    if args.model == "newsvendor":
        return Newsvendor(c_u=args.cu, c_o=args.co)
    if args.model == "expectile":
        return Expectile(c_u=args.cu, c_o=args.co)
    raise ConfigError("CLI solve/infer support the scalar models newsvendor and expectile; "
                      "use a config file for quartic experiments")


def _problem_from_args(args):
    X, Y = load_dataset_csv(args.data)
    x0 = _parse_vector(args.x0)
    model = _model_from_args(args)
    box = FeasibleBox(lower=_parse_vector(args.box_lower), upper=_parse_vector(args.box_upper))
    h = args.h0 * X.shape[0] ** (-args.delta)
    w = nw_weights(X, x0, KernelSpec(args.kernel), h)
    return WsaaProblem(Y=Y, weights=w.values, model=model, box=box), X.shape[0], h, x0


def _add_dataset_args(sub):
    sub.add_argument("--data", required=True, help="dataset CSV (header x1,..,y1,..)")
    sub.add_argument("--x0", required=True, help="query covariate, comma separated")
    sub.add_argument("--model", choices=("newsvendor", "expectile"), required=True)
    sub.add_argument("--cu", type=float, required=True, help="underage penalty")
    sub.add_argument("--co", type=float, required=True, help="overage penalty")
    sub.add_argument("--kernel", choices=("uniform", "epanechnikov", "gaussian"),
                     default="gaussian")
    sub.add_argument("--h0", type=float, required=True, help="bandwidth constant")
    sub.add_argument("--delta", type=float, required=True, help="bandwidth exponent")
    sub.add_argument("--box-lower", required=True)
    sub.add_argument("--box-upper", required=True)


def _cmd_solve(args) -> int:
    problem, _, _, _ = _problem_from_args(args)
    z, f = solve_exact(problem)
    print(json.dumps({"decision": list(map(float, z)), "objective": float(f)}, indent=2))
    return EXIT_OK


def _cmd_infer(args) -> int:
    problem, n, h, x0 = _problem_from_args(args)
    z, f = solve_exact(problem)
    v_hat = n * h**x0.size * sample_cond_variance(problem, z) * sum_sq_weights(problem.weights)
    report = confidence_interval(f, v_hat, n, h, x0.size, args.alpha)
    out = {"decision": list(map(float, z)), **{k: getattr(report, k) for k in (
        "estimate", "variance_hat", "half_width", "lower", "upper", "level", "n", "h", "d_x")}}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_allocate(args) -> int:
    spec = {"kind": args.regime}
    if args.regime == "sublinear":
        spec["beta"] = args.beta
    elif args.regime == "linear":
        spec["theta"] = args.theta
    else:
        spec["eta"] = args.eta
        spec["theta"] = args.theta if args.theta is not None else 1.0
    regime = build_regime(spec)
    plan = budget_mod.allocate(regime, args.rule, args.gamma, args.delta, args.dx,
                               c0=args.c0, kappa_tilde=args.kappa_tilde,
                               kappa_override=args.kappa_override)
    print(json.dumps({
        "regime": plan.regime, "rule": plan.rule, "gamma": plan.gamma,
        "n": plan.n, "m": plan.m, "kappa_star": plan.kappa_star,
        "kappa_used": plan.kappa_used, "rate_exponent": plan.rate_exponent,
    }, indent=2))
    return EXIT_OK


def _cmd_cv(args) -> int:
    X, Y = load_dataset_csv(args.data)
    x0 = _parse_vector(args.x0)
    model = _model_from_args(args)
    box = FeasibleBox(lower=_parse_vector(args.box_lower), upper=_parse_vector(args.box_upper))
    grid = CvGrid(h0_candidates=tuple(_parse_vector(args.h0_grid)), k=args.k)
    result = kfold_cv(X, Y, x0, grid, model, box, KernelSpec(args.kernel), args.delta,
                      RngStream(args.seed, 0))
    print(json.dumps({
        "best_h0": result.best.h0,
        "scores": [{"h0": c.h0, "score": (None if not np.isfinite(s) else s)}
                   for c, s in result.scores],
    }, indent=2))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    raw = yaml.safe_load(Path(args.config).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a mapping")
    cfg = ExperimentConfig.from_dict(raw)
    if args.workers is not None:
        cfg = ExperimentConfig.from_dict({**raw, "workers": args.workers})
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    records, summary = run_experiment(cfg)
    write_records_csv(records, outdir / "records.csv")
    write_summary_json(summary, outdir / "summary.json")
    print(f"wrote {outdir / 'records.csv'} and {outdir / 'summary.json'}")
    if summary.degraded:
        print("warning: experiment degraded (a grid point lost more than 20% "
              "of its replications)", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsaa", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("solve", help="solve one weighted problem exactly")
    _add_dataset_args(s)
    s.set_defaults(func=_cmd_solve)

    s = subs.add_parser("infer", help="interval estimate for the optimal conditional cost")
    _add_dataset_args(s)
    s.add_argument("--alpha", type=float, default=0.05)
    s.set_defaults(func=_cmd_infer)

    s = subs.add_parser("allocate", help="split a budget into (n, m)")
    s.add_argument("--regime", choices=("sublinear", "linear", "superlinear"), required=True)
    s.add_argument("--beta", type=float, help="sublinear exponent")
    s.add_argument("--theta", type=float, help="linear contraction factor")
    s.add_argument("--eta", type=float, help="superlinear order")
    s.add_argument("--rule", choices=("optimal", "over_optimizing"), default="optimal")
    s.add_argument("--gamma", type=int, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--dx", type=int, required=True)
    s.add_argument("--c0", type=float)
    s.add_argument("--kappa-tilde", dest="kappa_tilde", type=float)
    s.add_argument("--kappa-override", dest="kappa_override", type=float)
    s.set_defaults(func=_cmd_allocate)

    s = subs.add_parser("cv", help="k-fold cross-validation for h0")
    _add_dataset_args(s)
    s.add_argument("--h0-grid", dest="h0_grid", required=True,
                   help="comma-separated h0 candidates (overrides --h0)")
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_cv)

    s = subs.add_parser("experiment", help="run a Monte Carlo experiment from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError, KeyError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
