"""Cost families F(z; y) and the kernel-weighted objective built from them.

Three families are supported:

* ``Newsvendor(c_u, c_o)`` - piecewise linear, convex, nonsmooth;
  underage/overage penalties. Scalar decision and outcome.
* ``Expectile(c_u, c_o)`` - asymmetric squared loss; smooth, strongly
  convex. Scalar decision and outcome.
* ``Quartic(a, b)`` - sum of fourth powers a_j (z_j - b_j y_j)**4 with
  a_j > 0; smooth, convex, dimension d_z = d_y = len(a).

Batch evaluation over an outcome array is the hot path: solvers call
``objective``/``grad`` once per line-search probe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WrongModelError",
    "Newsvendor",
    "Expectile",
    "Quartic",
    "FeasibleBox",
    "WsaaProblem",
    "cost_value",
    "cost_subgradient",
    "cost_gradient",
    "cost_hessian",
    "wsaa_objective",
    "wsaa_grad",
    "wsaa_subgrad",
    "wsaa_hessian",
]


class WrongModelError(TypeError):
    """Raised when a derivative is requested from a model that lacks it."""


def _scalar_outcomes(Y: np.ndarray) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 2:
        if Y.shape[1] != 1:
            raise ValueError("scalar cost models need d_y = 1 outcomes")
        Y = Y[:, 0]
    return Y


def _scalar_decision(z) -> float:
    z = np.asarray(z, dtype=float).ravel()
    if z.size != 1:
        raise ValueError("scalar cost models need d_z = 1 decisions")
    return float(z[0])


@dataclass(frozen=True)
class Newsvendor:
    """F(z; y) = c_u (y - z)^+ + c_o (z - y)^+."""

    c_u: float
    c_o: float
    d_z: int = 1
    d_y: int = 1
    kind = "newsvendor"
    smooth = False

    def __post_init__(self):
        if self.c_u <= 0 or self.c_o <= 0:
            raise ValueError("c_u and c_o must be positive")

    def value_batch(self, z, Y) -> np.ndarray:
        z = _scalar_decision(z)
        y = _scalar_outcomes(Y)
        return self.c_u * np.maximum(y - z, 0.0) + self.c_o * np.maximum(z - y, 0.0)

    def subgradient_batch(self, z, Y) -> np.ndarray:
        # minimal-norm element (0) at the tie z = y
        z = _scalar_decision(z)
        y = _scalar_outcomes(Y)
        g = np.where(z < y, -self.c_u, np.where(z > y, self.c_o, 0.0))
        return g[:, None]

    def gradient_batch(self, z, Y):
        raise WrongModelError("newsvendor cost is nonsmooth; use subgradient_batch")

    def hessian_diag_batch(self, z, Y):
        raise WrongModelError("newsvendor cost is nonsmooth; no Hessian")


@dataclass(frozen=True)
class Expectile:
    """F(z; y) = c_u (y - z)^2 1{y >= z} + c_o (z - y)^2 1{y < z}."""

    c_u: float
    c_o: float
    d_z: int = 1
    d_y: int = 1
    kind = "expectile"
    smooth = True

    def __post_init__(self):
        if self.c_u <= 0 or self.c_o <= 0:
            raise ValueError("c_u and c_o must be positive")

    def value_batch(self, z, Y) -> np.ndarray:
        z = _scalar_decision(z)
        gap = _scalar_outcomes(Y) - z
        return np.where(gap >= 0, self.c_u, self.c_o) * gap * gap

    def gradient_batch(self, z, Y) -> np.ndarray:
        z = _scalar_decision(z)
        gap = _scalar_outcomes(Y) - z
        g = np.where(gap >= 0, -2.0 * self.c_u, -2.0 * self.c_o) * gap
        return g[:, None]

    def hessian_diag_batch(self, z, Y) -> np.ndarray:
        z = _scalar_decision(z)
        y = _scalar_outcomes(Y)
        return np.where(y > z, 2.0 * self.c_u, 2.0 * self.c_o)[:, None]

    def subgradient_batch(self, z, Y):
        raise WrongModelError("expectile cost is differentiable; use gradient_batch")


@dataclass(frozen=True)
class Quartic:
    """F(z; y) = sum_j a_j (z_j - b_j y_j)^4 with a_j > 0."""

    a: np.ndarray
    b: np.ndarray
    kind = "quartic"
    smooth = True

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.size != b.size or a.size == 0:
            raise ValueError("a and b must be nonempty and of equal length")
        if np.any(a <= 0):
            raise ValueError("all quartic scale coefficients a_j must be positive")

    @property
    def d_z(self) -> int:
        return self.a.size

    @property
    def d_y(self) -> int:
        return self.a.size

    def _residual(self, z, Y) -> np.ndarray:
        z = np.asarray(z, dtype=float).ravel()
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if z.size != self.d_z or Y.shape[1] != self.d_y:
            raise ValueError("dimension mismatch for quartic cost")
        return z[None, :] - self.b[None, :] * Y

    def value_batch(self, z, Y) -> np.ndarray:
        r = self._residual(z, Y)
        r2 = r * r
        return (r2 * r2) @ self.a

    def gradient_batch(self, z, Y) -> np.ndarray:
        r = self._residual(z, Y)
        return (4.0 * self.a)[None, :] * (r * r * r)

    def hessian_diag_batch(self, z, Y) -> np.ndarray:
        r = self._residual(z, Y)
        return (12.0 * self.a)[None, :] * (r * r)

    def value_gap_batch(self, z, z_ref, Y) -> np.ndarray:
        """F(z; y) - F(z_ref; y) per sample, cancellation-free: evaluating
        (r + d)^4 - r^4 in expanded form keeps full relative precision on
        gaps far below the float resolution of the values themselves."""
        r = self._residual(z_ref, Y)
        d = np.asarray(z, dtype=float).ravel() - np.asarray(z_ref, dtype=float).ravel()
        d = d[None, :]
        inner = d * (4.0 * r**3 + d * (6.0 * r * r + d * (4.0 * r + d)))
        return inner @ self.a

    def subgradient_batch(self, z, Y):
        raise WrongModelError("quartic cost is differentiable; use gradient_batch")


@dataclass(frozen=True)
class FeasibleBox:
    """Componentwise box [lower, upper] with positive, finite diameter."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape:
            raise ValueError("lower and upper must have equal shapes")
        if np.any(lo > hi) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box needs finite lower <= upper")
        if np.linalg.norm(hi - lo) <= 0:
            raise ValueError("box diameter must be positive")

    @property
    def d_z(self) -> int:
        return self.lower.size

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def project(self, z) -> np.ndarray:
        return np.clip(np.asarray(z, dtype=float).ravel(), self.lower, self.upper)

    def contains(self, z, tol: float = 1e-10) -> bool:
        z = np.asarray(z, dtype=float).ravel()
        return bool(np.all(z >= self.lower - tol) and np.all(z <= self.upper + tol))


@dataclass(frozen=True)
class WsaaProblem:
    """Outcomes, relevance weights, cost model, and the feasible box."""

    Y: np.ndarray
    weights: np.ndarray
    model: object
    box: FeasibleBox

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "weights", w)
        if w.shape[0] != Y.shape[0]:
            raise ValueError("weights and outcomes must have equal length")
        if Y.shape[1] != self.model.d_y:
            raise ValueError(f"outcomes have d_y={Y.shape[1]}, model expects {self.model.d_y}")
        if self.box.d_z != self.model.d_z:
            raise ValueError("box dimension must match the model decision dimension")

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    def objective(self, z) -> float:
        assert self.box.contains(z, tol=1e-8), "decision outside the feasible box"
        return float(self.weights @ self.model.value_batch(z, self.Y))

    def objective_gap(self, z, z_ref) -> float:
        """Objective difference f(z) - f(z_ref), cancellation-free for
        models that provide a per-sample gap evaluation."""
        gap_batch = getattr(self.model, "value_gap_batch", None)
        if gap_batch is not None:
            return float(self.weights @ gap_batch(z, z_ref, self.Y))
        return self.objective(z) - self.objective(z_ref)

    def grad(self, z) -> np.ndarray:
        return self.weights @ self.model.gradient_batch(z, self.Y)

    def subgrad(self, z) -> np.ndarray:
        return self.weights @ self.model.subgradient_batch(z, self.Y)

    def hessian(self, z) -> np.ndarray:
        return np.diag(self.weights @ self.model.hessian_diag_batch(z, self.Y))


def cost_value(model, z, y) -> float:
    """F(z; y) for a single outcome."""
    return float(model.value_batch(z, np.atleast_2d(np.asarray(y, dtype=float)))[0])


def cost_subgradient(model, z, y) -> np.ndarray:
    """Minimal-norm subgradient of the newsvendor cost at a single outcome."""
    return model.subgradient_batch(z, np.atleast_2d(np.asarray(y, dtype=float)))[0]


def cost_gradient(model, z, y) -> np.ndarray:
    return model.gradient_batch(z, np.atleast_2d(np.asarray(y, dtype=float)))[0]


def cost_hessian(model, z, y) -> np.ndarray:
    return np.diag(model.hessian_diag_batch(z, np.atleast_2d(np.asarray(y, dtype=float)))[0])


def wsaa_objective(p: WsaaProblem, z) -> float:
    return p.objective(z)


def wsaa_grad(p: WsaaProblem, z) -> np.ndarray:
    return p.grad(z)


def wsaa_subgrad(p: WsaaProblem, z) -> np.ndarray:
    return p.subgrad(z)


def wsaa_hessian(p: WsaaProblem, z) -> np.ndarray:
    return p.hessian(z)
