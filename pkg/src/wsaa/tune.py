"""k-fold cross-validation for the bandwidth constant h0 and, for
budgeted runs, the stepsize constant mu0 and the initial point z0.

Folds are contiguous blocks of a seeded random permutation; uneven fold
sizes differ by at most one. Each fold is scored by the out-of-sample
cost of the decision fitted on the retained data, with the retained
weights renormalized to sum to one. A candidate whose every retained set
has no kernel mass is disqualified with an infinite score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import FeasibleBox, WsaaProblem
from .kernels import EmptyNeighborhoodError, KernelSpec, nw_weights
from .solve import (
    CurvatureError,
    SolverConfig,
    StalledLineSearchError,
    projected_gradient_armijo,
    projected_newton,
    projected_subgradient,
    solve_exact,
)

__all__ = ["CvGrid", "BudgetedSolveSpec", "CvCandidate", "CvResult", "kfold_cv", "fold_indices"]

_SOLVERS = {
    "subgradient": projected_subgradient,
    "gradient_armijo": projected_gradient_armijo,
    "newton_armijo": projected_newton,
}


@dataclass(frozen=True)
class CvGrid:
    h0_candidates: tuple
    mu0_candidates: tuple | None = None
    z0_candidates: tuple | None = None
    k: int = 5

    def __post_init__(self):
        object.__setattr__(self, "h0_candidates", tuple(float(h) for h in self.h0_candidates))
        if len(self.h0_candidates) == 0 or any(h <= 0 for h in self.h0_candidates):
            raise ValueError("need at least one positive h0 candidate")
        if self.mu0_candidates is not None:
            object.__setattr__(self, "mu0_candidates",
                               tuple(float(m) for m in self.mu0_candidates))
        if self.z0_candidates is not None:
            object.__setattr__(
                self, "z0_candidates",
                tuple(tuple(np.asarray(z, dtype=float).ravel()) for z in self.z0_candidates),
            )
        if self.k < 2:
            raise ValueError("k must be at least 2")


@dataclass(frozen=True)
class BudgetedSolveSpec:
    """How to solve fold problems when tuning for a budget-constrained run;
    ``m`` matches the main run so scores reflect the budgeted estimator."""

    algorithm: str
    m: int
    a: float | None = None
    b: float | None = None
    mu0: float | None = None


@dataclass(frozen=True)
class CvCandidate:
    h0: float
    mu0: float | None = None
    z0: tuple | None = None

    def sort_key(self):
        return (self.h0, self.mu0 if self.mu0 is not None else 0.0,
                self.z0 if self.z0 is not None else ())


@dataclass(frozen=True)
class CvResult:
    best: CvCandidate
    scores: tuple = field(default_factory=tuple)  # (candidate, mean fold score) pairs
    disqualified: tuple = field(default_factory=tuple)


def fold_indices(n: int, k: int, rng) -> list[np.ndarray]:
    """Partition range(n) into k near-equal folds via a seeded permutation."""
    perm = rng.generator().permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    folds, start = [], 0
    for s in sizes:
        folds.append(np.sort(perm[start:start + s]))
        start += s
    return folds


def _candidates(grid: CvGrid):
    mus = grid.mu0_candidates if grid.mu0_candidates is not None else (None,)
    z0s = grid.z0_candidates if grid.z0_candidates is not None else (None,)
    return [CvCandidate(h0=h, mu0=mu, z0=z0)
            for h in grid.h0_candidates for mu in mus for z0 in z0s]


def _fold_decision(problem: WsaaProblem, cand: CvCandidate, box: FeasibleBox,
                   budgeted: BudgetedSolveSpec | None) -> np.ndarray:
    if budgeted is None:
        z, _ = solve_exact(problem)
        return z
    z0 = np.asarray(cand.z0, dtype=float) if cand.z0 is not None else box.midpoint
    cfg = SolverConfig(
        algorithm=budgeted.algorithm, m=budgeted.m, z0=box.project(z0),
        mu0=cand.mu0 if cand.mu0 is not None else budgeted.mu0,
        a=budgeted.a, b=budgeted.b,
    )
    return _SOLVERS[budgeted.algorithm](problem, cfg).delivered_z


def kfold_cv(X, Y, x0, grid: CvGrid, model, box: FeasibleBox, kernel: KernelSpec,
             delta: float, rng, budgeted: BudgetedSolveSpec | None = None) -> CvResult:
    """Pick the tuning candidate with the lowest mean out-of-sample cost.

    Ties break toward the smallest h0, then the smallest mu0, then the
    lexicographically smallest z0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    if n < 2 * grid.k:
        raise ValueError(f"need n >= 2k = {2 * grid.k} samples, got {n}")
    folds = fold_indices(n, grid.k, rng)
    masks = []
    for fold in folds:
        m = np.zeros(n, dtype=bool)
        m[fold] = True
        masks.append(m)

    scored, disqualified = [], []
    for cand in _candidates(grid):
        h = cand.h0 * n ** (-delta)  # bandwidth keeps the full-sample n
        total, dead = 0.0, False
        for mask in masks:
            retained = ~mask
            try:
                w = nw_weights(X[retained], x0, kernel, h)
                problem = WsaaProblem(Y=Y[retained], weights=w.values, model=model, box=box)
                z = _fold_decision(problem, cand, box, budgeted)
            except (EmptyNeighborhoodError, StalledLineSearchError, CurvatureError) as exc:
                disqualified.append((cand, type(exc).__name__))
                dead = True
                break
            total += float(model.value_batch(z, Y[mask]).sum())
        scored.append((cand, np.inf if dead else total / grid.k))

    finite = [(c, s) for c, s in scored if np.isfinite(s)]
    if not finite:
        raise ValueError("every candidate was disqualified; widen the h0 grid")
    best = min(finite, key=lambda cs: (cs[1], *cs[0].sort_key()))[0]
    return CvResult(best=best, scores=tuple(scored), disqualified=tuple(disqualified))
