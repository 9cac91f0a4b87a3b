"""Monte Carlo experiment engine: replications, coverage/width/RMSE
aggregation, and log-log rate regression.

An experiment is a declarative config (see ``configs/``) naming a data
generator, a cost model, a kernel, a query point, and either a grid of
sample sizes (unconstrained mode) or a grid of compute budgets with an
allocation rule (budgeted mode). Every replication owns the random
substream with stream_id equal to its replication index, so the whole
output is a pure function of the config. The true optimal value is pinned
once per experiment from a large conditional sample and shared read-only.

Replication failures (empty kernel neighborhood, stalled line search,
bad curvature) are captured in the record table, never raised; a grid
point with more than 20% failures marks the experiment degraded.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import budget as budget_mod
from .costs import Expectile, FeasibleBox, Newsvendor, WsaaProblem
from .infer import confidence_interval, error_decomposition, sample_cond_variance
from .kernels import EmptyNeighborhoodError, KernelSpec, nw_weights, sum_sq_weights
from .simulate import (
    RngStream,
    covariate_quantile,
    make_quartic_cost,
    make_simulator,
    oracle_optimal_value,
    sample_dataset,
)
from .solve import (
    CurvatureError,
    Linear,
    SolverConfig,
    StalledLineSearchError,
    Sublinear,
    Superlinear,
    UnsupportedDimensionError,
    projected_gradient_armijo,
    projected_newton,
    projected_subgradient,
    solve_exact,
)
from .tune import BudgetedSolveSpec, CvGrid, kfold_cv

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ReplicationRecord",
    "ExperimentSummary",
    "run_replication",
    "run_experiment",
    "fit_loglog_slope",
    "write_records_csv",
    "read_records_csv",
    "write_summary_json",
]

SCHEMA_VERSION = 1
_ORACLE_STREAM = 2**40
_TUNE_STREAM = 2**40 + 1
_SOLVERS = {
    "subgradient": projected_subgradient,
    "gradient_armijo": projected_gradient_armijo,
    "newton_armijo": projected_newton,
}
_FAILURES = (EmptyNeighborhoodError, StalledLineSearchError, CurvatureError,
             UnsupportedDimensionError)


class ConfigError(ValueError):
    """The experiment config is malformed."""


@dataclass(frozen=True)
class ExperimentConfig:
    dgp: str
    model: dict
    box_lower: tuple
    box_upper: tuple
    kernel: str
    delta: float
    x0_tau: float | None
    x0_value: tuple | None
    mode: str                       # "unconstrained" | "budgeted"
    grid: tuple                     # sample sizes or budgets
    replications: int
    alpha: float = 0.05
    base_seed: int = 20240501
    oracle_n: int = 10**6
    workers: int = 1
    h0: float | None = None
    cv: dict | None = None
    dgp_params: dict = field(default_factory=dict)
    # budgeted-mode settings
    regime: dict | None = None      # {"kind": "linear", "theta": ...} etc.
    rule: str = "optimal"
    algorithm: str | None = None
    solver: dict = field(default_factory=dict)   # a, b, mu0, z0
    c0: float | None = None
    kappa_tilde: float | None = None
    kappa_override: float | None = None

    def __post_init__(self):
        if self.mode not in ("unconstrained", "budgeted"):
            raise ConfigError(f"mode must be unconstrained or budgeted, got {self.mode!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.grid or any(g < 8 for g in self.grid):
            raise ConfigError("every grid value must be >= 8")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if (self.x0_tau is None) == (self.x0_value is None):
            raise ConfigError("give exactly one of x0_tau or x0_value")
        if self.h0 is None and self.cv is None:
            raise ConfigError("give h0 or a cv section")
        if self.mode == "budgeted":
            if self.regime is None or self.algorithm is None:
                raise ConfigError("budgeted mode needs regime and algorithm sections")
            if self.algorithm not in _SOLVERS:
                raise ConfigError(f"unknown algorithm {self.algorithm!r}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            box = raw["box"]
            mode = raw["mode"]
            x0 = raw.get("x0", {})
            return cls(
                dgp=raw["dgp"],
                dgp_params=dict(raw.get("dgp_params", {})),
                model=dict(raw["model"]),
                box_lower=tuple(np.atleast_1d(box["lower"]).astype(float)),
                box_upper=tuple(np.atleast_1d(box["upper"]).astype(float)),
                kernel=raw.get("kernel", "gaussian"),
                delta=float(raw["delta"]),
                x0_tau=float(x0["tau"]) if "tau" in x0 else None,
                x0_value=tuple(np.atleast_1d(x0["value"]).astype(float)) if "value" in x0 else None,
                mode=mode["type"],
                grid=tuple(int(round(g)) for g in mode["grid"]),
                replications=int(raw["replications"]),
                alpha=float(raw.get("alpha", 0.05)),
                base_seed=int(raw.get("base_seed", 20240501)),
                oracle_n=int(raw.get("oracle_n", 10**6)),
                workers=int(raw.get("workers", 1)),
                h0=float(raw["h0"]) if "h0" in raw else None,
                cv=dict(raw["cv"]) if "cv" in raw else None,
                regime=dict(mode["regime"]) if "regime" in mode else None,
                rule=mode.get("rule", "optimal"),
                algorithm=mode.get("algorithm"),
                solver=dict(mode.get("solver", {})),
                c0=mode.get("c0"),
                kappa_tilde=mode.get("kappa_tilde"),
                kappa_override=mode.get("kappa_override"),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad experiment config: {exc!r}") from exc


def build_model(spec: dict, base_seed: int):
    """Construct the cost model named by the config."""
    kind = spec.get("kind")
    if kind == "newsvendor":
        return Newsvendor(c_u=float(spec["c_u"]), c_o=float(spec["c_o"]))
    if kind == "expectile":
        return Expectile(c_u=float(spec["c_u"]), c_o=float(spec["c_o"]))
    if kind == "quartic":
        from .costs import Quartic

        if "a" in spec and "b" in spec:
            return Quartic(a=np.asarray(spec["a"], dtype=float),
                           b=np.asarray(spec["b"], dtype=float))
        d_z = int(spec.get("d_z", 2))
        seed = int(spec.get("cost_seed", base_seed))
        return make_quartic_cost(d_z, RngStream(seed, 0).generator())
    raise ConfigError(f"unknown cost model kind {spec.get('kind')!r}")


def build_regime(spec: dict):
    kind = spec.get("kind")
    if kind == "sublinear":
        return Sublinear(beta=float(spec["beta"]))
    if kind == "linear":
        if "theta" in spec:
            theta = float(spec["theta"])
        else:
            theta = budget_mod.theta_for_projected_gd(
                float(spec["lam"]), float(spec["lip"]), float(spec["a"]), float(spec["b"]))
        return Linear(theta=theta)
    if kind == "superlinear":
        return Superlinear(theta=float(spec.get("theta", 1.0)), eta=float(spec["eta"]))
    raise ConfigError(f"unknown convergence regime {spec.get('kind')!r}")


@dataclass(frozen=True)
class ReplicationRecord:
    rep_id: int
    grid_value: float
    n: int
    m: int
    estimate: float
    f_star: float
    covered: bool
    half_width: float
    lower: float
    upper: float
    optimization_error: float
    statistical_error: float
    pivot: float
    solver_iterations: int
    elapsed_ms: float
    failed: bool = False
    failure_reason: str = ""


@dataclass(frozen=True)
class PointSettings:
    """Everything one grid point needs: budget split and tuned constants."""

    grid_value: float
    n: int
    m: int
    h0: float
    mu0: float | None
    z0: tuple | None


@dataclass(frozen=True)
class ExperimentContext:
    """Resolved, replication-independent state shared by all workers."""

    sim: object
    model: object
    box: FeasibleBox
    kernel: KernelSpec
    delta: float
    x0: np.ndarray
    alpha: float
    base_seed: int
    mode: str
    algorithm: str | None
    solver_a: float | None
    solver_b: float | None
    f_star: float


def _failed_record(rep_id, point, f_star, reason, t0) -> ReplicationRecord:
    nan = float("nan")
    return ReplicationRecord(
        rep_id=rep_id, grid_value=point.grid_value, n=point.n, m=point.m,
        estimate=nan, f_star=f_star, covered=False, half_width=nan, lower=nan,
        upper=nan, optimization_error=nan, statistical_error=nan, pivot=nan,
        solver_iterations=0, elapsed_ms=(time.perf_counter() - t0) * 1e3,
        failed=True, failure_reason=reason,
    )


def run_replication(ctx: ExperimentContext, point: PointSettings,
                    rep_id: int) -> ReplicationRecord:
    """One replication: sample, weight, solve, and build the interval."""
    t0 = time.perf_counter()
    stream = RngStream(ctx.base_seed, rep_id)
    X, Y = sample_dataset(ctx.sim, point.n, stream)
    h = point.h0 * point.n ** (-ctx.delta)
    d_x = ctx.x0.size
    try:
        w = nw_weights(X, ctx.x0, ctx.kernel, h)
        problem = WsaaProblem(Y=Y, weights=w.values, model=ctx.model, box=ctx.box)
        z_exact, f_exact = solve_exact(problem)
        if ctx.mode == "budgeted":
            z0 = np.asarray(point.z0, dtype=float) if point.z0 is not None else ctx.box.midpoint
            cfg = SolverConfig(algorithm=ctx.algorithm, m=point.m, z0=ctx.box.project(z0),
                               mu0=point.mu0, a=ctx.solver_a, b=ctx.solver_b)
            trace = _SOLVERS[ctx.algorithm](problem, cfg)
            z_delivered = trace.delivered_z
            estimate = trace.delivered_objective
            iters = trace.iterations_used
        else:
            z_delivered, estimate, iters = z_exact, f_exact, 0
    except _FAILURES as exc:
        return _failed_record(rep_id, point, ctx.f_star, f"{type(exc).__name__}: {exc}", t0)

    sigma2 = sample_cond_variance(problem, z_delivered)
    ssw = sum_sq_weights(problem.weights)
    report = confidence_interval(estimate, point.n * h**d_x * sigma2 * ssw,
                                 point.n, h, d_x, ctx.alpha)
    opt_err, stat_err = error_decomposition(estimate, f_exact, ctx.f_star)
    scale = math.sqrt(sigma2 * ssw)
    pivot = (estimate - ctx.f_star) / scale if scale > 0 else float("nan")
    return ReplicationRecord(
        rep_id=rep_id, grid_value=point.grid_value, n=point.n, m=point.m,
        estimate=estimate, f_star=ctx.f_star,
        covered=bool(report.lower <= ctx.f_star <= report.upper),
        half_width=report.half_width, lower=report.lower, upper=report.upper,
        optimization_error=opt_err, statistical_error=stat_err, pivot=pivot,
        solver_iterations=iters, elapsed_ms=(time.perf_counter() - t0) * 1e3,
    )


def _auto_h0_grid(X: np.ndarray) -> tuple:
    # scale-relative default grid around the geometric-mean covariate spread
    scale = float(np.exp(np.mean(np.log(np.std(X, axis=0, ddof=1)))))
    return tuple(f * scale for f in (0.25, 0.5, 1.0, 2.0, 4.0))


def _auto_z0_candidates(Y: np.ndarray, model, box: FeasibleBox) -> tuple:
    targets = Y * model.b[None, :] if getattr(model, "kind", "") == "quartic" else Y
    cands = [tuple(box.midpoint)]
    for tau in (0.25, 0.5, 0.75):
        q = np.quantile(targets, tau, axis=0)
        cands.append(tuple(box.project(q)))
    return tuple(dict.fromkeys(cands))  # dedupe, keep order


def _resolve_point_settings(cfg: ExperimentConfig, sim, model, box, kernel,
                            grid_value: float, n: int, m: int,
                            grid_index: int) -> PointSettings:
    """Fix h0 (and mu0/z0 for budgeted runs), tuning by k-fold CV on a
    dedicated stream when the config asks for it."""
    solver = cfg.solver
    mu0 = solver.get("mu0")
    z0 = tuple(np.atleast_1d(solver["z0"]).astype(float)) if "z0" in solver else None
    if cfg.cv is None:
        return PointSettings(grid_value, n, m, float(cfg.h0), mu0, z0)

    cv = cfg.cv
    stream = RngStream(cfg.base_seed, _TUNE_STREAM + grid_index)
    X, Y = sample_dataset(sim, n, stream)
    h0s = cv.get("h0", "auto")
    h0s = _auto_h0_grid(X) if h0s == "auto" else tuple(float(h) for h in h0s)
    mu0s = tuple(float(v) for v in cv["mu0"]) if "mu0" in cv else None
    z0s = cv.get("z0")
    if z0s == "auto":
        z0s = _auto_z0_candidates(Y, model, box)
    elif z0s is not None:
        z0s = tuple(tuple(np.atleast_1d(z).astype(float)) for z in z0s)
    grid = CvGrid(h0_candidates=h0s, mu0_candidates=mu0s, z0_candidates=z0s,
                  k=int(cv.get("k", 5)))
    budgeted = None
    if cfg.mode == "budgeted":
        budgeted = BudgetedSolveSpec(algorithm=cfg.algorithm, m=m,
                                     a=solver.get("a"), b=solver.get("b"), mu0=mu0)
    result = kfold_cv(X, Y, _resolve_x0(cfg, sim), grid, model, box, kernel,
                      cfg.delta, stream, budgeted=budgeted)
    best = result.best
    return PointSettings(grid_value, n, m, best.h0,
                         best.mu0 if best.mu0 is not None else mu0,
                         best.z0 if best.z0 is not None else z0)


def _resolve_x0(cfg: ExperimentConfig, sim) -> np.ndarray:
    if cfg.x0_value is not None:
        return np.asarray(cfg.x0_value, dtype=float)
    return covariate_quantile(sim, cfg.x0_tau)


@dataclass(frozen=True)
class GridPointSummary:
    grid_value: float
    n: int
    m: int
    n_total: int
    n_failed: int
    coverage: float
    mean_rel_width: float
    sd_rel_width: float
    rel_rmse: float


@dataclass(frozen=True)
class ExperimentSummary:
    schema_version: int
    mode: str
    grid_label: str
    alpha: float
    base_seed: int
    x0: tuple
    f_star: float
    f_star_se: float
    z_star: tuple
    oracle_n: int
    points: tuple
    slope: float | None
    slope_stderr: float | None
    theoretical_rate: float | None
    degraded: bool
    point_settings: tuple

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    """Coerce numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def fit_loglog_slope(sizes, rmses) -> tuple[float, float]:
    """OLS slope (with its standard error) of log rmse on log size."""
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(rmses, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise ValueError("need at least two (size, rmse) pairs")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("sizes and rmses must be positive")
    lx, ly = np.log(x), np.log(y)
    vx = np.var(lx)
    if vx == 0:
        raise ValueError("sizes must not be all equal")
    slope = float(np.cov(lx, ly, bias=True)[0, 1] / vx)
    resid = ly - (ly.mean() + slope * (lx - lx.mean()))
    dof = x.size - 2
    if dof <= 0:
        return slope, float("nan")
    stderr = math.sqrt(float(resid @ resid) / dof / float(((lx - lx.mean()) ** 2).sum()))
    return slope, stderr


def _theoretical_rate(cfg: ExperimentConfig) -> float | None:
    exponent = 1.0 - cfg.delta * _dgp_dx(cfg)
    if cfg.mode == "unconstrained":
        return -exponent / 2.0
    regime = build_regime(cfg.regime)
    try:
        return budget_mod.theoretical_rate(regime, cfg.rule, cfg.delta, _dgp_dx(cfg),
                                           kappa_tilde=cfg.kappa_tilde,
                                           kappa_override=cfg.kappa_override)
    except ValueError:
        return None


def _dgp_dx(cfg: ExperimentConfig) -> int:
    return make_simulator(cfg.dgp, **cfg.dgp_params).d_x


def run_experiment(cfg: ExperimentConfig) -> tuple[list[ReplicationRecord], ExperimentSummary]:
    """Run the full grid x replications sweep and aggregate it."""
    sim = make_simulator(cfg.dgp, **cfg.dgp_params)
    model = build_model(cfg.model, cfg.base_seed)
    box = FeasibleBox(lower=np.asarray(cfg.box_lower), upper=np.asarray(cfg.box_upper))
    kernel = KernelSpec(cfg.kernel)
    x0 = _resolve_x0(cfg, sim)
    oracle = oracle_optimal_value(sim, x0, model, box, cfg.oracle_n,
                                  RngStream(cfg.base_seed, _ORACLE_STREAM))

    points = []
    for gi, g in enumerate(cfg.grid):
        if cfg.mode == "unconstrained":
            n, m = int(g), 0
        else:
            plan = budget_mod.allocate(build_regime(cfg.regime), cfg.rule, int(g),
                                       cfg.delta, sim.d_x, c0=cfg.c0,
                                       kappa_tilde=cfg.kappa_tilde,
                                       kappa_override=cfg.kappa_override)
            n, m = plan.n, plan.m
        points.append(_resolve_point_settings(cfg, sim, model, box, kernel,
                                              float(g), n, m, gi))

    ctx = ExperimentContext(
        sim=sim, model=model, box=box, kernel=kernel, delta=cfg.delta, x0=x0,
        alpha=cfg.alpha, base_seed=cfg.base_seed, mode=cfg.mode,
        algorithm=cfg.algorithm, solver_a=cfg.solver.get("a"),
        solver_b=cfg.solver.get("b"), f_star=oracle.f_star,
    )

    records: list[ReplicationRecord] = []
    rep_ids = list(range(cfg.replications))
    for point in points:
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                chunk = max(1, len(rep_ids) // (4 * cfg.workers))
                recs = list(pool.map(partial(run_replication, ctx, point),
                                     rep_ids, chunksize=chunk))
        else:
            recs = [run_replication(ctx, point, r) for r in rep_ids]
        records.extend(recs)

    summaries, degraded = [], False
    for point in points:
        recs = [r for r in records if r.grid_value == point.grid_value]
        ok = [r for r in recs if not r.failed]
        n_failed = len(recs) - len(ok)
        if n_failed > 0.2 * len(recs):
            degraded = True
        denom = abs(oracle.f_star) if oracle.f_star != 0 else 1.0
        if ok:
            widths = np.array([2.0 * r.half_width for r in ok]) / denom
            errs = np.array([r.estimate - oracle.f_star for r in ok])
            summaries.append(GridPointSummary(
                grid_value=point.grid_value, n=point.n, m=point.m,
                n_total=len(recs), n_failed=n_failed,
                coverage=float(np.mean([r.covered for r in ok])),
                mean_rel_width=float(widths.mean()),
                sd_rel_width=float(widths.std(ddof=1)) if len(ok) > 1 else 0.0,
                rel_rmse=float(np.sqrt(np.mean(errs**2)) / denom),
            ))
        else:
            summaries.append(GridPointSummary(
                grid_value=point.grid_value, n=point.n, m=point.m,
                n_total=len(recs), n_failed=n_failed, coverage=float("nan"),
                mean_rel_width=float("nan"), sd_rel_width=float("nan"),
                rel_rmse=float("nan")))

    slope = stderr = None
    rmses = [p.rel_rmse for p in summaries]
    sizes = [p.grid_value for p in summaries]
    if len(sizes) >= 2 and all(np.isfinite(r) and r > 0 for r in rmses):
        s, se = fit_loglog_slope(sizes, rmses)
        slope, stderr = s, (None if math.isnan(se) else se)

    summary = ExperimentSummary(
        schema_version=SCHEMA_VERSION, mode=cfg.mode,
        grid_label="n" if cfg.mode == "unconstrained" else "gamma",
        alpha=cfg.alpha, base_seed=cfg.base_seed, x0=tuple(x0),
        f_star=oracle.f_star, f_star_se=oracle.std_error,
        z_star=tuple(np.atleast_1d(oracle.z_star)), oracle_n=oracle.n_draws,
        points=tuple(summaries), slope=slope, slope_stderr=stderr,
        theoretical_rate=_theoretical_rate(cfg), degraded=degraded,
        point_settings=tuple(points),
    )
    return records, summary


_CSV_COLUMNS = [
    "schema_version", "rep_id", "grid_value", "n", "m", "estimate", "f_star",
    "covered", "half_width", "lower", "upper", "optimization_error",
    "statistical_error", "pivot", "solver_iterations", "elapsed_ms",
    "failed", "failure_reason",
]


def write_records_csv(records, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in records:
            row = asdict(r)
            row["schema_version"] = SCHEMA_VERSION
            row["covered"] = int(r.covered)
            row["failed"] = int(r.failed)
            writer.writerow([row[c] for c in _CSV_COLUMNS])


def read_records_csv(path) -> list[dict]:
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_summary_json(summary: ExperimentSummary, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(summary.to_dict(), fh, indent=2, allow_nan=True)
        fh.write("\n")
