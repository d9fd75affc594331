"""Domain types, built-in test objectives, and quadratic-model arithmetic.

All vectors and matrices are dense float64 numpy arrays.  Types are immutable
value objects and safe to share between runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (unknown names, bad parameters)."""


Array = np.ndarray


@dataclass(frozen=True)
class Objective:
    """Smooth objective with exact derivatives, used as ground truth.

    L1 bounds the Lipschitz constant of the gradient and L2 that of the
    Hessian on the documented region (``region`` attribute); phi_hat is a
    certified lower bound on the function value.
    """

    name: str
    dim: int
    fn: Callable[[Array], float]
    grad_fn: Callable[[Array], Array]
    hess_fn: Callable[[Array], Array]
    L1: float
    L2: float
    phi_hat: float
    region: str = "all of R^n"

    def eval(self, x: Array) -> float:
        return float(self.fn(np.asarray(x, dtype=float)))

    def grad(self, x: Array) -> Array:
        return np.asarray(self.grad_fn(np.asarray(x, dtype=float)), dtype=float)

    def hess(self, x: Array) -> Array:
        return np.asarray(self.hess_fn(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class QuadraticModel:
    """Local model centered at an iterate, carrying (g, H) only.

    The unknown constant value at the center is never materialized; all
    queries are changes relative to the center.
    """

    center: Array
    g: Array
    H: Array

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        g = np.asarray(self.g, dtype=float)
        H = np.asarray(self.H, dtype=float)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "H", H)
        if g.shape != center.shape or H.shape != (center.size, center.size):
            raise ValueError(
                f"inconsistent model shapes: center {center.shape}, g {g.shape}, H {H.shape}"
            )
        if H.size and np.max(np.abs(H - H.T)) > 1e-12 * (1.0 + np.max(np.abs(H))):
            raise ValueError("model Hessian must be symmetric")


def model_eval(model: QuadraticModel, s: Array) -> float:
    """Change in model value for a step s from the center: <g,s> + 0.5 <Hs,s>."""
    s = np.asarray(s, dtype=float)
    if s.shape != model.center.shape:
        raise ValueError(f"step shape {s.shape} does not match center {model.center.shape}")
    return float(model.g @ s + 0.5 * (s @ (model.H @ s)))


def model_decrease(model: QuadraticModel, s: Array) -> float:
    """Predicted decrease m(center) - m(center + s)."""
    return -model_eval(model, s)


@dataclass(frozen=True)
class TrParams:
    """Trust-region hyperparameters and run budget."""

    eta1: float = 0.25
    eta2: float = 1.0
    gamma: float = 0.8
    r: float = 0.0
    delta0: float = 0.5
    kappa_fcd: float = 2.0
    kappa_fod: float = 1.0
    p1: float = 1.0
    p2: float = 1.0
    budget: int = 250

    def __post_init__(self):
        if not self.eta1 > 0:
            raise ConfigurationError(f"eta1 must be > 0, got {self.eta1}")
        if not self.eta2 > 0:
            raise ConfigurationError(f"eta2 must be > 0, got {self.eta2}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma must be in (0,1), got {self.gamma}")
        if self.r < 0:
            raise ConfigurationError(f"r must be >= 0, got {self.r}")
        if not self.delta0 > 0:
            raise ConfigurationError(f"delta0 must be > 0, got {self.delta0}")
        if not 0.0 < self.kappa_fcd <= 2.0:
            raise ConfigurationError(f"kappa_fcd must be in (0,2], got {self.kappa_fcd}")
        if not 0.0 < self.kappa_fod <= 1.0:
            raise ConfigurationError(f"kappa_fod must be in (0,1], got {self.kappa_fod}")
        for nm, p in (("p1", self.p1), ("p2", self.p2)):
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{nm} must be in [0,1], got {p}")
        if self.budget < 0:
            raise ConfigurationError(f"budget must be >= 0, got {self.budget}")


@dataclass(frozen=True)
class IterationRecord:
    """Everything observed in one trust-region iteration."""

    k: int
    x: Array
    delta: float
    g_norm: float
    model_decrease: float
    rho: float  # nan when the step was auto-rejected (zero model decrease)
    accepted: bool
    success: bool  # accepted AND the radius-growth test passed
    true_grad_norm: float
    phi_value: float
    phi_next: float
    e_k: float
    e_k_plus: float
    i_k: bool  # model accuracy event (against ground truth)
    j_k: bool  # function-error compensation event
    beta_m: float = float("nan")  # max{|g|, -lambda_min(H_k)}, second-order runs
    lambda_min_model: float = float("nan")


@dataclass(frozen=True)
class RunTrace:
    """Per-iteration records plus run-level metadata."""

    records: tuple[IterationRecord, ...]
    seed: int | None
    params: TrParams
    variant: str = "first_order"
    stopped_early: bool = False
    stop_reason: str | None = None

    @property
    def min_true_grad_norm(self) -> float:
        if not self.records:
            return float("nan")
        return min(rec.true_grad_norm for rec in self.records)

    @property
    def final_phi(self) -> float:
        if not self.records:
            return float("nan")
        return self.records[-1].phi_next

    def grad_norms(self) -> Array:
        return np.array([rec.true_grad_norm for rec in self.records])

    def deltas(self) -> Array:
        return np.array([rec.delta for rec in self.records])

    def phi_values(self) -> Array:
        return np.array([rec.phi_value for rec in self.records])


# ---------------------------------------------------------------------------
# Built-in objectives
# ---------------------------------------------------------------------------


def _scaled_sphere(dim: int, L1: float) -> Objective:
    if L1 <= 0:
        raise ConfigurationError(f"scaled_sphere needs L1 > 0, got {L1}")

    def fn(x):
        return 0.5 * L1 * float(x @ x)

    def grad(x):
        return L1 * x

    def hess(x):
        return L1 * np.eye(dim)

    return Objective("scaled_sphere", dim, fn, grad, hess, L1=L1, L2=0.0, phi_hat=0.0)


def _indefinite_quadratic(A: Array, region_radius: float = 5.0) -> Objective:
    """0.5 x'Ax + 0.25 |x|^4: a saddle at the origin with Hessian A there.

    The quartic term leaves the value, gradient and Hessian at the origin
    untouched but makes the function bounded below, so runs escaping the
    saddle settle at a genuine second-order stationary point.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigurationError(f"indefinite_quadratic needs a square matrix, got {A.shape}")
    if np.max(np.abs(A - A.T)) > 1e-12 * (1.0 + np.max(np.abs(A))):
        raise ConfigurationError("indefinite_quadratic needs a symmetric matrix")
    dim = A.shape[0]
    eigvals = np.linalg.eigvalsh(A)
    lam_min = float(eigvals[0])
    norm_a = float(np.max(np.abs(eigvals)))
    phi_hat = -0.25 * lam_min**2 if lam_min < 0 else 0.0
    R = float(region_radius)

    def fn(x):
        return 0.5 * float(x @ (A @ x)) + 0.25 * float(x @ x) ** 2

    def grad(x):
        return A @ x + float(x @ x) * x

    def hess(x):
        return A + float(x @ x) * np.eye(dim) + 2.0 * np.outer(x, x)

    return Objective(
        "indefinite_quadratic",
        dim,
        fn,
        grad,
        hess,
        L1=norm_a + 3.0 * R**2,
        L2=6.0 * R,
        phi_hat=phi_hat,
        region=f"|x| <= {R}",
    )


def _rosenbrock(dim: int) -> Objective:
    if dim < 2:
        raise ConfigurationError("rosenbrock needs dim >= 2")
    B = 2.5  # box half-width on which L1/L2 are certified

    def fn(x):
        return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))

    def grad(x):
        g = np.zeros_like(x)
        t = x[1:] - x[:-1] ** 2
        g[:-1] = -400.0 * x[:-1] * t - 2.0 * (1.0 - x[:-1])
        g[1:] += 200.0 * t
        return g

    def hess(x):
        H = np.zeros((dim, dim))
        for i in range(dim - 1):
            H[i, i] += 1200.0 * x[i] ** 2 - 400.0 * x[i + 1] + 2.0
            H[i + 1, i + 1] += 200.0
            H[i, i + 1] += -400.0 * x[i]
            H[i + 1, i] += -400.0 * x[i]
        return H

    return Objective(
        "rosenbrock",
        dim,
        fn,
        grad,
        hess,
        L1=1200.0 * B**2 + 1200.0 * B + 202.0,
        L2=2400.0 * B + 800.0,
        phi_hat=0.0,
        region=f"max|x_i| <= {B}",
    )


def _powell_singular(dim: int) -> Objective:
    if dim < 4 or dim % 4 != 0:
        raise ConfigurationError("powell_singular needs dim to be a positive multiple of 4")
    B = 4.0

    def fn(x):
        x = x.reshape(-1, 4)
        a, b, c, d = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
        return float(
            np.sum((a + 10.0 * b) ** 2 + 5.0 * (c - d) ** 2 + (b - 2.0 * c) ** 4 + 10.0 * (a - d) ** 4)
        )

    def grad(x):
        g = np.zeros_like(x)
        xr = x.reshape(-1, 4)
        gr = g.reshape(-1, 4)
        a, b, c, d = xr[:, 0], xr[:, 1], xr[:, 2], xr[:, 3]
        gr[:, 0] = 2.0 * (a + 10.0 * b) + 40.0 * (a - d) ** 3
        gr[:, 1] = 20.0 * (a + 10.0 * b) + 4.0 * (b - 2.0 * c) ** 3
        gr[:, 2] = 10.0 * (c - d) - 8.0 * (b - 2.0 * c) ** 3
        gr[:, 3] = -10.0 * (c - d) - 40.0 * (a - d) ** 3
        return g

    def hess(x):
        H = np.zeros((dim, dim))
        for k in range(dim // 4):
            i = 4 * k
            a, b, c, d = x[i], x[i + 1], x[i + 2], x[i + 3]
            q1 = 120.0 * (a - d) ** 2
            q2 = 12.0 * (b - 2.0 * c) ** 2
            blk = np.array(
                [
                    [2.0 + q1, 20.0, 0.0, -q1],
                    [20.0, 200.0 + q2, -2.0 * q2, 0.0],
                    [0.0, -2.0 * q2, 10.0 + 4.0 * q2, -10.0],
                    [-q1, 0.0, -10.0, 10.0 + q1],
                ]
            )
            H[i : i + 4, i : i + 4] = blk
        return H

    # Per-block bounds over max|x_i| <= B: quartic curvature terms dominate.
    L1 = 222.0 + 1500.0 * B**2
    L2 = 3000.0 * B
    return Objective(
        "powell_singular", dim, fn, grad, hess, L1=L1, L2=L2, phi_hat=0.0, region=f"max|x_i| <= {B}"
    )


def _trigonometric(dim: int) -> Objective:
    if dim < 1:
        raise ConfigurationError("trigonometric needs dim >= 1")
    n = dim
    idx = np.arange(1, n + 1, dtype=float)

    def residuals(x):
        # f_i = n - sum_j cos x_j + i (1 - cos x_i) - sin x_i
        return n - np.sum(np.cos(x)) + idx * (1.0 - np.cos(x)) - np.sin(x)

    def jac(x):
        J = np.tile(np.sin(x), (n, 1))
        J[np.diag_indices(n)] += idx * np.sin(x) - np.cos(x)
        return J

    def fn(x):
        f = residuals(x)
        return float(f @ f)

    def grad(x):
        return 2.0 * jac(x).T @ residuals(x)

    def hess(x):
        f = residuals(x)
        J = jac(x)
        H = 2.0 * J.T @ J
        # sum_i f_i * d2 f_i: a shared cos-diagonal plus per-axis spikes
        H += 2.0 * np.sum(f) * np.diag(np.cos(x))
        H += 2.0 * np.diag(f * (idx * np.cos(x) + np.sin(x)))
        return H

    # Crude but safe global bounds: |f_i| <= 4n + 1, |J| entries <= 1 except
    # the diagonal (<= i + 2 <= n + 2), all higher partials of f_i <= n + 2.
    fmax = 4.0 * n + 1.0
    jfro = math.sqrt(n * n + float(np.sum((idx + 2.0) ** 2)))
    hmax = n * fmax + fmax * (n + 2.0)
    L1 = 2.0 * (jfro**2 + hmax)
    L2 = 6.0 * n * (n + 2.0) * (4.0 * n + 3.0)
    return Objective("trigonometric", dim, fn, grad, hess, L1=L1, L2=L2, phi_hat=0.0)


_BUILTINS = {
    "scaled_sphere": "_scaled_sphere",
    "indefinite_quadratic": "_indefinite_quadratic",
    "rosenbrock": "_rosenbrock",
    "powell_singular": "_powell_singular",
    "trigonometric": "_trigonometric",
}


def builtin_objective(name: str, dim: int | None = None, **spec) -> Objective:
    """Construct a built-in test objective by name.

    Names: scaled_sphere(L1), indefinite_quadratic(A), rosenbrock,
    powell_singular, trigonometric.
    """
    if name == "scaled_sphere":
        if dim is None:
            raise ConfigurationError("scaled_sphere needs dim")
        return _scaled_sphere(dim, float(spec.get("L1", 1.0)))
    if name == "indefinite_quadratic":
        if "A" not in spec:
            raise ConfigurationError("indefinite_quadratic needs matrix A")
        return _indefinite_quadratic(spec["A"], float(spec.get("region_radius", 5.0)))
    if name == "rosenbrock":
        if dim is None:
            raise ConfigurationError("rosenbrock needs dim")
        return _rosenbrock(dim)
    if name == "powell_singular":
        if dim is None:
            raise ConfigurationError("powell_singular needs dim")
        return _powell_singular(dim)
    if name == "trigonometric":
        if dim is None:
            raise ConfigurationError("trigonometric needs dim")
        return _trigonometric(dim)
    raise ConfigurationError(f"unknown objective {name!r}; choose from {sorted(_BUILTINS)}")


def standard_start(obj: Objective) -> Array:
    """Conventional starting point for each built-in objective."""
    n = obj.dim
    if obj.name == "scaled_sphere":
        return 1.4 * np.ones(n)
    if obj.name == "indefinite_quadratic":
        return np.zeros(n)
    if obj.name == "rosenbrock":
        x = np.ones(n)
        x[0::2] = -1.2
        return x
    if obj.name == "powell_singular":
        return np.tile(np.array([3.0, -1.0, 0.0, 1.0]), n // 4)
    if obj.name == "trigonometric":
        return np.full(n, 1.0 / n)
    return np.ones(n)


def scale_objective(obj: Objective, x0: Array, f0: float = 100.0) -> Objective:
    """Affinely rescale so the value at x0 is f0 and the lower bound is 0."""
    x0 = np.asarray(x0, dtype=float)
    phi0 = obj.eval(x0)
    if not phi0 > obj.phi_hat:
        raise ConfigurationError("cannot rescale: starting value not above the lower bound")
    c = f0 / (phi0 - obj.phi_hat)
    shift = obj.phi_hat

    def fn(x, _o=obj, _c=c, _s=shift):
        return _c * (_o.eval(x) - _s)

    def grad(x, _o=obj, _c=c):
        return _c * _o.grad(x)

    def hess(x, _o=obj, _c=c):
        return _c * _o.hess(x)

    return Objective(
        f"{obj.name}_scaled",
        obj.dim,
        fn,
        grad,
        hess,
        L1=c * obj.L1,
        L2=c * obj.L2,
        phi_hat=0.0,
        region=obj.region,
    )
