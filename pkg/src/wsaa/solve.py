"""Budgeted first- and second-order solvers for the weighted problem,
exact solvers per cost family, and convergence-regime verification.

All iterative methods run a fixed number of iterations ``m`` (the budget
contract) and keep every iterate inside the feasible box. The projected
Newton method projects under the Hessian metric, solved exactly by
enumerating active-bound patterns (practical for d_z <= 4, which covers
everything shipped here).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .costs import FeasibleBox, WsaaProblem

__all__ = [
    "SolverConfig",
    "SolverTrace",
    "Sublinear",
    "Linear",
    "Superlinear",
    "ConvergenceReport",
    "StalledLineSearchError",
    "CurvatureError",
    "UnsupportedDimensionError",
    "projected_subgradient",
    "projected_gradient_armijo",
    "projected_newton",
    "h_metric_project",
    "weighted_quantile",
    "weighted_expectile",
    "solve_exact",
    "newton_order_probe",
    "verify_convergence_class",
]

_ALGORITHMS = ("subgradient", "gradient_armijo", "newton_armijo")
_MAX_BACKTRACKS = 60
_CONVERGED_GAP = 1e-13


class StalledLineSearchError(RuntimeError):
    """Backtracking hit its cap without satisfying the Armijo test."""

    def __init__(self, message: str, trace: "SolverTrace"):
        super().__init__(message)
        self.trace = trace


class CurvatureError(RuntimeError):
    """The weighted Hessian is not numerically positive definite."""


class UnsupportedDimensionError(ValueError):
    """Exact bound-pattern enumeration is only provided for d_z <= 4."""


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str
    m: int
    z0: np.ndarray
    mu0: float | None = None
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.algorithm not in _ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {_ALGORITHMS}")
        if self.m < 0:
            raise ValueError("iteration budget m must be >= 0")
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float).ravel())
        if self.algorithm == "subgradient":
            if self.mu0 is None or self.mu0 <= 0:
                raise ValueError("subgradient needs a stepsize constant mu0 > 0")
        else:
            if self.a is None or not 0.0 < self.a < 0.5:
                raise ValueError("line-search parameter a must lie in (0, 0.5)")
            if self.b is None or not 0.0 < self.b < 1.0:
                raise ValueError("line-search parameter b must lie in (0, 1)")


@dataclass
class SolverTrace:
    """Iterates and objective values of one budgeted run.

    ``objective_values`` is non-increasing: line-search methods descend
    monotonically and the subgradient method records the best value seen
    so far. ``delivered_z`` is the point the run hands to inference.
    """

    iterates: np.ndarray
    objective_values: np.ndarray
    iterations_used: int
    backtrack_counts: np.ndarray
    delivered_z: np.ndarray
    delivered_objective: float

    def __post_init__(self):
        if len(self.iterates) != len(self.objective_values):
            raise ValueError("iterates and objective_values must align")


@dataclass(frozen=True)
class Sublinear:
    """gap_m <= delta / m**beta; ``delta_bound`` (if known) makes the check binding."""

    beta: float
    delta_bound: float | None = None

    regime = "sublinear"

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class Linear:
    """gap_m <= theta * gap_{m-1} with theta in (0, 1)."""

    theta: float

    regime = "linear"

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")


@dataclass(frozen=True)
class Superlinear:
    """gap_m <= theta * gap_{m-1}**eta with theta > 0, eta > 1."""

    theta: float
    eta: float

    regime = "superlinear"

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.eta <= 1.0:
            raise ValueError("eta must exceed 1")


def _start(p: WsaaProblem, cfg: SolverConfig) -> np.ndarray:
    z0 = cfg.z0
    if z0.size != p.box.d_z:
        raise ValueError("z0 dimension does not match the problem")
    if not p.box.contains(z0):
        raise ValueError("z0 must lie inside the feasible box")
    return p.box.project(z0)


def projected_subgradient(p: WsaaProblem, cfg: SolverConfig) -> SolverTrace:
    """Fixed-step projected subgradient: z <- Pi(z - mu * subgrad), with
    mu = mu0 / sqrt(m + 1). Delivers the best iterate seen.
    """
    z = _start(p, cfg)
    mu = cfg.mu0 / math.sqrt(cfg.m + 1)
    iterates = np.empty((cfg.m + 1, z.size))
    raw = np.empty(cfg.m + 1)
    iterates[0] = z
    raw[0] = p.objective(z)
    for t in range(1, cfg.m + 1):
        z = p.box.project(z - mu * p.subgrad(z))
        iterates[t] = z
        raw[t] = p.objective(z)
    best = np.minimum.accumulate(raw)
    k = int(np.argmin(raw))
    return SolverTrace(
        iterates=iterates,
        objective_values=best,
        iterations_used=cfg.m,
        backtrack_counts=np.zeros(cfg.m, dtype=int),
        delivered_z=iterates[k].copy(),
        delivered_objective=float(raw[k]),
    )


def _armijo_step(p: WsaaProblem, z, f_z, g, d, a, b, trace_builder):
    """Largest b**l (l = 0..cap) passing the sufficient-decrease test."""
    gd = float(g @ d)
    for backtracks in range(_MAX_BACKTRACKS + 1):
        s = b**backtracks
        cand = z + s * d
        if p.objective(cand) <= f_z + a * s * gd:
            return cand, backtracks
    raise StalledLineSearchError(
        f"no Armijo step within {_MAX_BACKTRACKS} backtracks", trace_builder()
    )


def _is_stationary(z, d, g, f_z) -> bool:
    """The demanded decrease is below float resolution. Since the projected
    direction satisfies <g, d> <= -|d|^2, a vanishing slope certifies a
    (numerically) stationary point rather than a line-search failure."""
    if np.linalg.norm(d) <= 1e-13 * (1.0 + np.linalg.norm(z)):
        return True
    return abs(float(g @ d)) <= 1e-14 * (1.0 + abs(f_z))


def _run_descent(p: WsaaProblem, cfg: SolverConfig, direction_fn) -> SolverTrace:
    """Shared loop for the two line-search methods. ``direction_fn(z, g)``
    returns the projected candidate direction."""
    z = _start(p, cfg)
    iterates = np.empty((cfg.m + 1, z.size))
    objs = np.empty(cfg.m + 1)
    backtracks = np.zeros(cfg.m, dtype=int)
    iterates[0] = z
    objs[0] = p.objective(z)

    def partial_trace(upto):
        return SolverTrace(
            iterates=iterates[: upto + 1].copy(),
            objective_values=objs[: upto + 1].copy(),
            iterations_used=upto,
            backtrack_counts=backtracks[:upto].copy(),
            delivered_z=iterates[upto].copy(),
            delivered_objective=float(objs[upto]),
        )

    for t in range(1, cfg.m + 1):
        g = p.grad(z)
        d = direction_fn(z, g)
        if _is_stationary(z, d, g, objs[t - 1]):
            iterates[t:] = z
            objs[t:] = objs[t - 1]
            break
        z, backtracks[t - 1] = _armijo_step(
            p, z, objs[t - 1], g, d, cfg.a, cfg.b, lambda t=t: partial_trace(t - 1)
        )
        iterates[t] = z
        objs[t] = p.objective(z)
    return SolverTrace(
        iterates=iterates,
        objective_values=objs,
        iterations_used=cfg.m,
        backtrack_counts=backtracks,
        delivered_z=iterates[-1].copy(),
        delivered_objective=float(objs[-1]),
    )


def projected_gradient_armijo(p: WsaaProblem, cfg: SolverConfig) -> SolverTrace:
    """Projected gradient with Armijo backtracking: the candidate direction
    is Pi(z - grad) - z under the Euclidean projection."""
    return _run_descent(p, cfg, lambda z, g: p.box.project(z - g) - z)


def _pd_hessian(p: WsaaProblem, z) -> np.ndarray:
    H = p.hessian(z)
    min_eig = float(np.linalg.eigvalsh(H).min())
    if min_eig < 1e-10:
        raise CurvatureError(f"weighted Hessian has minimum eigenvalue {min_eig:.3e}")
    return H


def projected_newton(p: WsaaProblem, cfg: SolverConfig) -> SolverTrace:
    """Newton direction -H^-1 grad, projected onto the box under the
    H-metric, then Armijo backtracking along the projected direction."""

    def direction(z, g):
        H = _pd_hessian(p, z)
        return h_metric_project(z - np.linalg.solve(H, g), H, p.box) - z

    return _run_descent(p, cfg, direction)


def h_metric_project(v, H, box: FeasibleBox) -> np.ndarray:
    """argmin over the box of (z - v)' H (z - v) / 2, solved exactly by
    enumerating the <= 3^d active-bound patterns. H must be positive
    definite; with H = I this is plain clipping."""
    v = np.asarray(v, dtype=float).ravel()
    d = v.size
    if d > 4:
        raise UnsupportedDimensionError("bound-pattern enumeration supports d_z <= 4")
    if box.contains(v, tol=0.0):
        return v.copy()
    H = np.asarray(H, dtype=float)
    lo, hi = box.lower, box.upper
    scale = 1.0 + float(np.max(np.abs(np.concatenate([lo, hi]))))
    best, best_q = None, np.inf
    for pat in itertools.product((0, 1, 2), repeat=d):
        pat = np.array(pat)
        z = np.where(pat == 1, lo, np.where(pat == 2, hi, 0.0)).astype(float)
        free = pat == 0
        if free.any():
            Hff = H[np.ix_(free, free)]
            rhs = Hff @ v[free] - H[np.ix_(free, ~free)] @ (z[~free] - v[~free])
            zf = np.linalg.solve(Hff, rhs)
            if np.any(zf < lo[free] - 1e-9 * scale) or np.any(zf > hi[free] + 1e-9 * scale):
                continue
            z[free] = np.clip(zf, lo[free], hi[free])
        diff = z - v
        q = 0.5 * float(diff @ H @ diff)
        if q < best_q:
            best, best_q = z, q
    return best


def weighted_quantile(values, weights, level: float) -> float:
    """Smallest value whose cumulative weight reaches ``level``."""
    if not 0.0 < level < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    values = np.asarray(values, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    idx = int(np.searchsorted(cum, level - 1e-12, side="left"))
    return float(values[order[min(idx, values.size - 1)]])


def weighted_expectile(values, weights, c_u: float, c_o: float, tol: float = 1e-12) -> float:
    """Root of the weighted expectile first-order condition by bisection."""
    values = np.asarray(values, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()

    def foc(z):
        gap = values - z
        return float(weights @ (np.where(gap >= 0, -2.0 * c_u, -2.0 * c_o) * gap))

    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= tol:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if foc(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def _newton_to_tolerance(p: WsaaProblem, z0, grad_tol: float = 1e-10,
                         max_iter: int = 200, a: float = 0.1, b: float = 0.9):
    """Projected Newton run until the gradient norm drops below grad_tol.

    The tolerance scales with the objective magnitude and the loop also
    stops once the Newton step falls below the float resolution of the
    iterate, since neither the gradient nor the objective can improve
    past that point.
    """
    z = p.box.project(z0)
    f_z = p.objective(z)
    for _ in range(max_iter):
        g = p.grad(z)
        if np.linalg.norm(g) < grad_tol * (1.0 + abs(f_z)):
            return z, f_z
        H = _pd_hessian(p, z)
        d = h_metric_project(z - np.linalg.solve(H, g), H, p.box) - z
        if np.linalg.norm(d) <= 1e-12 * (1.0 + np.linalg.norm(z)):
            return z, f_z  # step below float resolution (or boundary-stationary)
        gd = float(g @ d)
        for backtracks in range(_MAX_BACKTRACKS + 1):
            s = b**backtracks
            cand = z + s * d
            f_cand = p.objective(cand)
            if f_cand <= f_z + a * s * gd:
                z, f_z = cand, f_cand
                break
        else:
            return z, f_z  # no further progress within line-search precision
    raise OverflowError("Newton refinement did not converge")


def solve_exact(p: WsaaProblem) -> tuple[np.ndarray, float]:
    """Exact minimizer of the weighted problem per cost family.

    newsvendor -> weighted quantile at level c_u / (c_u + c_o);
    expectile -> first-order-condition bisection; quartic -> projected
    Newton to gradient norm < 1e-10 from the weighted mean of b * y,
    with three perturbed restarts on curvature failure.
    """
    kind = p.model.kind
    if kind == "newsvendor":
        level = p.model.c_u / (p.model.c_u + p.model.c_o)
        z = p.box.project(weighted_quantile(p.Y[:, 0], p.weights, level))
        return z, p.objective(z)
    if kind == "expectile":
        root = weighted_expectile(p.Y[:, 0], p.weights, p.model.c_u, p.model.c_o)
        z = p.box.project(root)
        return z, p.objective(z)
    if kind == "quartic":
        z0 = p.box.project(p.weights @ (p.Y * p.model.b[None, :]))
        starts = [z0]
        spread = 1e-2 * (1.0 + np.abs(z0))
        starts += [p.box.project(z0 + spread), p.box.project(z0 - spread),
                   p.box.project(z0 + 2.0 * spread)]
        last_err = None
        for start in starts:
            try:
                z, f = _newton_to_tolerance(p, start)
                return z, f
            except CurvatureError as exc:
                last_err = exc
        raise last_err
    raise ValueError(f"no exact solver for cost family {kind!r}")


def newton_order_probe(p: WsaaProblem, z_hat, f_hat: float, a: float = 0.1,
                       b: float = 0.9, top_scale: float = 0.005,
                       n_rungs: int = 10, keep: int = 4) -> tuple[float | None, float | None]:
    """Estimate the local convergence order of the projected Newton step.

    Takes one genuine Armijo-Newton step from a ladder of starts
    z_hat + s * (1 + |z_hat|) with s halving from ``top_scale`` and
    regresses log(gap after) on log(gap before) over the ``keep``
    smallest measurable rungs. A single descent trace rarely keeps two
    informative hops before hitting its asymptotic regime, so the ladder
    trades trace length for repeated one-step measurements in the same
    neighborhood; gaps are measured via the cancellation-free objective
    difference so the deep (asymptotic) rungs stay meaningful. Returns
    (theta_hat, eta_hat), or Nones when fewer than three rungs are
    measurable.
    """
    z_hat = np.asarray(z_hat, dtype=float).ravel()
    pairs = []
    for k in range(n_rungs):
        s = top_scale * 0.5**k
        z0 = p.box.project(z_hat + s * (1.0 + np.abs(z_hat)))
        gap0 = p.objective_gap(z0, z_hat)
        g = p.grad(z0)
        H = _pd_hessian(p, z0)
        d = h_metric_project(z0 - np.linalg.solve(H, g), H, p.box) - z0
        gd = float(g @ d)
        gap1 = gap0
        for backtracks in range(_MAX_BACKTRACKS + 1):
            step = b**backtracks
            cand_gap = p.objective_gap(z0 + step * d, z_hat)
            if cand_gap <= gap0 + a * step * gd:
                gap1 = cand_gap
                break
        if gap0 > 0.0 and gap1 > 0.0:
            pairs.append((gap0, gap1))
    pairs = sorted(pairs)[:keep]
    if len(pairs) < 3:
        return None, None
    x = np.log([u for u, _ in pairs])
    y = np.log([v for _, v in pairs])
    if np.ptp(x) < 1e-12:
        return None, None
    eta = float(np.cov(x, y, bias=True)[0, 1] / np.var(x))
    theta = float(math.exp(y.mean() - eta * x.mean()))
    return theta, eta


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of checking a trace against a convergence regime."""

    passed: bool
    regime: str
    n_checked: int
    worst_ratio: float | None = None
    delta_hat: float | None = None
    theta_hat: float | None = None
    eta_hat: float | None = None
    message: str = ""


def _gaps(trace: SolverTrace, f_opt: float) -> np.ndarray:
    return np.maximum(np.asarray(trace.objective_values, dtype=float) - f_opt, 0.0)


def _pairs_for_fit(gaps: np.ndarray, scale: float) -> list[tuple[float, float]]:
    # preferred window per the calibration convention; if the trace plunges
    # through it in one hop, fall back to every pair above the noise floor
    windowed, above_floor = [], []
    for t in range(len(gaps) - 1):
        if gaps[t] > 1e-12 * scale and gaps[t + 1] > 1e-15 * scale:
            above_floor.append((gaps[t], gaps[t + 1]))
            if gaps[t] < 1e-2 * scale:
                windowed.append((gaps[t], gaps[t + 1]))
    return windowed if len(windowed) >= 2 else above_floor


def _fit_superlinear(gaps: np.ndarray, scale: float) -> tuple[float | None, float | None]:
    """OLS of log gap_{t+1} on log gap_t over noise-free gap pairs."""
    pairs = _pairs_for_fit(gaps, scale)
    if len(pairs) < 2:
        return None, None
    x = np.log([u for u, _ in pairs])
    y = np.log([v for _, v in pairs])
    if np.ptp(x) < 1e-12:
        return None, None
    eta = float(np.cov(x, y, bias=True)[0, 1] / np.var(x))
    theta = float(math.exp(y.mean() - eta * x.mean()))
    return theta, eta


def verify_convergence_class(trace: SolverTrace, f_opt: float, cls) -> ConvergenceReport:
    """Check the defining per-iteration inequality of ``cls`` along a trace.

    ``f_opt`` is the exact optimum of the same problem. Gaps at or below
    1e-13 (relative to the objective magnitude, so that float resolution
    on large objectives does not masquerade as divergence) are treated as
    converged and stop the scan. A failed check is a report, never an
    exception.
    """
    gaps = _gaps(trace, f_opt)
    scale = max(1.0, abs(f_opt))
    converged = _CONVERGED_GAP * scale
    if cls.regime == "linear":
        worst, checked = 0.0, 0
        for t in range(1, len(gaps)):
            if gaps[t - 1] <= converged:
                break
            worst = max(worst, gaps[t] / gaps[t - 1])
            checked += 1
        passed = checked == 0 or worst <= cls.theta + 1e-9
        return ConvergenceReport(passed=passed, regime="linear", n_checked=checked,
                                 worst_ratio=worst if checked else None)
    if cls.regime == "sublinear":
        scaled = [t**cls.beta * gaps[t] for t in range(1, len(gaps))]
        delta_hat = max(scaled) if scaled else 0.0
        passed = cls.delta_bound is None or delta_hat <= cls.delta_bound * (1.0 + 1e-9)
        return ConvergenceReport(passed=passed, regime="sublinear", n_checked=len(scaled),
                                 delta_hat=delta_hat,
                                 message="" if cls.delta_bound is not None
                                 else "no delta bound supplied; reporting the empirical constant")
    if cls.regime == "superlinear":
        worst, checked = 0.0, 0
        for t in range(1, len(gaps)):
            if gaps[t - 1] <= converged:
                break
            bound = cls.theta * gaps[t - 1] ** cls.eta
            worst = max(worst, max(gaps[t] - converged, 0.0) / bound if bound > 0 else np.inf)
            checked += 1
        theta_hat, eta_hat = _fit_superlinear(gaps, scale)
        passed = checked == 0 or worst <= 1.0 + 1e-9
        return ConvergenceReport(passed=passed, regime="superlinear", n_checked=checked,
                                 worst_ratio=worst if checked else None,
                                 theta_hat=theta_hat, eta_hat=eta_hat)
    raise ValueError(f"unknown convergence regime {cls!r}")
