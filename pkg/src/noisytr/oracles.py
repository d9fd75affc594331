"""Stochastic zeroth/first/second-order oracles and finite-difference estimators.

Each oracle owns a private RNG stream derived from a 64-bit master seed via
fixed substream indices (see ``substream``), so runs are bit-reproducible.
Every zeroth-order call is logged (true value, realized error) to support
evaluation budgets and the diagnostic property tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Array, ConfigurationError, Objective

# Fixed substream indices for deriving per-oracle RNG streams from one seed.
STREAM_ZEROTH = 0
STREAM_FIRST = 1
STREAM_SECOND = 2
STREAM_ADVERSARY = 3
STREAM_EXPERIMENT = 4


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (master_seed, key); same inputs, same stream."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


def sample_subexponential_noise(eps_f: float, a: float, rng: np.random.Generator) -> float:
    """Symmetric noise S (U + Y): U uniform on [0, eps_f], Y exponential(rate a).

    The tail satisfies P{|e| > t} <= exp(a (eps_f - t)) for all t >= 0.
    """
    if a <= 0:
        raise ConfigurationError(f"subexponential noise needs a > 0, got {a}")
    if eps_f < 0:
        raise ConfigurationError(f"eps_f must be >= 0, got {eps_f}")
    sign = 1.0 if rng.random() < 0.5 else -1.0
    u = rng.uniform(0.0, eps_f) if eps_f > 0 else 0.0
    y = rng.exponential(1.0 / a)
    return sign * (u + y)


@dataclass
class ZerothOracle:
    """Noisy function-value oracle f(x) = phi(x) + e.

    Modes: 'exact', 'bounded_uniform', 'bounded_adversarial' (paired noise via
    a hook(phi_x, phi_x_plus) -> (e, e_plus)), 'subexponential'.
    """

    objective: Objective
    mode: str = "exact"
    eps_f: float = 0.0
    a: float = 0.0
    hook: Callable[[float, float], tuple[float, float]] | None = None
    rng: np.random.Generator | None = None
    record: bool = True
    eval_log: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in ("exact", "bounded_uniform", "bounded_adversarial", "subexponential"):
            raise ConfigurationError(f"unknown zeroth-oracle mode {self.mode!r}")
        if self.eps_f < 0:
            raise ConfigurationError(f"eps_f must be >= 0, got {self.eps_f}")
        if self.mode == "subexponential" and self.a <= 0:
            raise ConfigurationError("subexponential mode needs a > 0")
        if self.mode == "bounded_adversarial" and self.hook is None:
            raise ConfigurationError("bounded_adversarial mode needs a hook")
        if self.rng is None and self.mode in ("bounded_uniform", "subexponential"):
            raise ConfigurationError(f"{self.mode} mode needs an rng")

    @property
    def n_evals(self) -> int:
        return len(self.eval_log)

    def _log(self, phi: float, e: float) -> float:
        if self.mode in ("exact", "bounded_uniform", "bounded_adversarial"):
            assert abs(e) <= self.eps_f + 1e-15, "bounded oracle emitted out-of-range noise"
        if self.record:
            self.eval_log.append((phi, e))
        return phi + e

    def _draw(self, phi: float) -> float:
        if self.mode == "exact":
            return 0.0
        if self.mode == "bounded_uniform":
            return float(self.rng.uniform(-self.eps_f, self.eps_f)) if self.eps_f > 0 else 0.0
        if self.mode == "subexponential":
            return sample_subexponential_noise(self.eps_f, self.a, self.rng)
        raise ConfigurationError("adversarial noise is only defined for paired evaluations")

    def sample(self, x: Array) -> tuple[float, float]:
        """Return (f_value, realized error) at x."""
        phi = self.objective.eval(x)
        e = self._draw(phi)
        return self._log(phi, e), e

    def sample_pair(self, x: Array, x_plus: Array) -> tuple[float, float, float, float]:
        """Evaluate the iterate and the trial point together.

        Returns (f, f_plus, e, e_plus).  In adversarial mode the two errors
        are chosen jointly by the hook from the true values.
        """
        phi = self.objective.eval(x)
        phi_plus = self.objective.eval(x_plus)
        if self.mode == "bounded_adversarial":
            e, e_plus = self.hook(phi, phi_plus)
        else:
            e, e_plus = self._draw(phi), self._draw(phi_plus)
        f = self._log(phi, e)
        f_plus = self._log(phi_plus, e_plus)
        return f, f_plus, e, e_plus


def _uniform_in_ball(rng: np.random.Generator, n: int, radius: float) -> Array:
    direction = rng.standard_normal(n)
    nrm = np.linalg.norm(direction)
    while nrm == 0.0:
        direction = rng.standard_normal(n)
        nrm = np.linalg.norm(direction)
    return (radius * rng.random() ** (1.0 / n) / nrm) * direction


def _random_direction(rng: np.random.Generator, n: int) -> Array:
    v = rng.standard_normal(n)
    nrm = np.linalg.norm(v)
    while nrm == 0.0:
        v = rng.standard_normal(n)
        nrm = np.linalg.norm(v)
    return v / nrm


@dataclass
class FirstOracle:
    """Gradient oracle: with probability p1 the error stays inside the ball
    of radius eps_g + kappa_eg * delta1.

    Modes: 'exact', 'corrupted', 'finite_difference' (sigma must be set;
    uses the attached zeroth oracle), 'adversarial' (delegate(x, delta1) ->
    (g, in_spec)).
    """

    objective: Objective
    mode: str = "exact"
    eps_g: float = 0.0
    kappa_eg: float = 0.0
    p1: float = 1.0
    outlier_scale: float = 10.0
    sigma: float | None = None
    zeroth: ZerothOracle | None = None
    delegate: Callable[[Array, float], tuple[Array, bool]] | None = None
    rng: np.random.Generator | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "corrupted", "finite_difference", "adversarial"):
            raise ConfigurationError(f"unknown first-oracle mode {self.mode!r}")
        if self.mode == "corrupted" and self.rng is None:
            raise ConfigurationError("corrupted mode needs an rng")
        if self.mode == "finite_difference" and (self.zeroth is None or self.sigma is None):
            raise ConfigurationError("finite_difference mode needs a zeroth oracle and sigma")
        if self.mode == "adversarial" and self.delegate is None:
            raise ConfigurationError("adversarial mode needs a delegate")
        if not 0.0 <= self.p1 <= 1.0:
            raise ConfigurationError(f"p1 must be in [0,1], got {self.p1}")

    def sample(self, x: Array, delta1: float) -> tuple[Array, bool]:
        if delta1 <= 0:
            raise ConfigurationError(f"delta1 must be > 0, got {delta1}")
        x = np.asarray(x, dtype=float)
        if self.mode == "exact":
            return self.objective.grad(x), True
        if self.mode == "corrupted":
            radius = self.eps_g + self.kappa_eg * delta1
            grad = self.objective.grad(x)
            if self.rng.random() < self.p1:
                return grad + _uniform_in_ball(self.rng, x.size, radius), True
            err = self.outlier_scale * radius * _random_direction(self.rng, x.size)
            return grad + err, False
        if self.mode == "finite_difference":
            g = fd_gradient(self.zeroth, x, self.sigma)
            bound = self.eps_g + self.kappa_eg * delta1
            in_spec = bool(np.linalg.norm(g - self.objective.grad(x)) <= bound)
            return g, in_spec
        return self.delegate(x, delta1)


@dataclass
class SecondOracle:
    """Hessian oracle: with probability p2 the spectral-norm error stays
    inside eps_h + kappa_eh * delta2.  Output is always symmetric.
    """

    objective: Objective
    mode: str = "exact"
    eps_h: float = 0.0
    kappa_eh: float = 0.0
    p2: float = 1.0
    outlier_scale: float = 10.0
    sigma: float | None = None
    zeroth: ZerothOracle | None = None
    rng: np.random.Generator | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "corrupted", "finite_difference"):
            raise ConfigurationError(f"unknown second-oracle mode {self.mode!r}")
        if self.mode == "corrupted" and self.rng is None:
            raise ConfigurationError("corrupted mode needs an rng")
        if self.mode == "finite_difference" and (self.zeroth is None or self.sigma is None):
            raise ConfigurationError("finite_difference mode needs a zeroth oracle and sigma")
        if not 0.0 <= self.p2 <= 1.0:
            raise ConfigurationError(f"p2 must be in [0,1], got {self.p2}")

    def _symmetric_direction(self, n: int) -> Array:
        G = self.rng.standard_normal((n, n))
        E = 0.5 * (G + G.T)
        nrm = np.linalg.norm(E, 2)
        while nrm == 0.0:
            G = self.rng.standard_normal((n, n))
            E = 0.5 * (G + G.T)
            nrm = np.linalg.norm(E, 2)
        return E / nrm

    def sample(self, x: Array, delta2: float) -> tuple[Array, bool]:
        if delta2 <= 0:
            raise ConfigurationError(f"delta2 must be > 0, got {delta2}")
        x = np.asarray(x, dtype=float)
        if self.mode == "exact":
            return self.objective.hess(x), True
        if self.mode == "corrupted":
            radius = self.eps_h + self.kappa_eh * delta2
            hess = self.objective.hess(x)
            if self.rng.random() < self.p2:
                E = self._symmetric_direction(x.size) * (radius * self.rng.random())
                return hess + E, True
            E = self._symmetric_direction(x.size) * (self.outlier_scale * radius)
            return hess + E, False
        H = fd_hessian(self.zeroth, x, self.sigma)
        bound = self.eps_h + self.kappa_eh * delta2
        in_spec = bool(np.linalg.norm(H - self.objective.hess(x), 2) <= bound)
        return H, in_spec


# ---------------------------------------------------------------------------
# Finite-difference constructions from a zeroth-order oracle
# ---------------------------------------------------------------------------


def fd_gradient(z: ZerothOracle, x: Array, sigma: float) -> Array:
    """Forward-difference gradient from n+1 noisy function values.

    Error under |noise| <= eps: sqrt(n) L1 sigma / 2 + sqrt(n) eps / sigma.
    """
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be > 0, got {sigma}")
    x = np.asarray(x, dtype=float)
    n = x.size
    f0, _ = z.sample(x)
    g = np.empty(n)
    for i in range(n):
        xi = x.copy()
        xi[i] += sigma
        fi, _ = z.sample(xi)
        g[i] = (fi - f0) / sigma
    return g


def fd_hessian(z: ZerothOracle, x: Array, sigma: float) -> Array:
    """Second-difference Hessian from the points {x, x+s e_i, x+s e_i+s e_j}.

    Each distinct point is evaluated once; the result is symmetrized.  Error
    under |noise| <= eps: (sqrt(2)+1) n L2 sigma / 3 + 4 n eps / sigma^2.
    """
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be > 0, got {sigma}")
    x = np.asarray(x, dtype=float)
    n = x.size
    f0, _ = z.sample(x)
    fi = np.empty(n)
    for i in range(n):
        xi = x.copy()
        xi[i] += sigma
        fi[i], _ = z.sample(xi)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            xij = x.copy()
            xij[i] += sigma
            xij[j] += sigma
            fij, _ = z.sample(xij)
            val = (fij - fi[i] - fi[j] + f0) / sigma**2
            H[i, j] = val
            H[j, i] = val
    return 0.5 * (H + H.T)


def fd2_gradient(z: ZerothOracle, x: Array, sigma: float) -> Array:
    """Second-order-accurate gradient (4 f(x+s e_i) - f(x+2s e_i) - 3 f(x)) / 2s.

    Error under |noise| <= eps: sqrt(n) L2 sigma^2 + 4 sqrt(n) eps / sigma.
    """
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be > 0, got {sigma}")
    x = np.asarray(x, dtype=float)
    n = x.size
    f0, _ = z.sample(x)
    g = np.empty(n)
    for i in range(n):
        x1 = x.copy()
        x1[i] += sigma
        x2 = x.copy()
        x2[i] += 2.0 * sigma
        f1, _ = z.sample(x1)
        f2, _ = z.sample(x2)
        g[i] = (4.0 * f1 - f2 - 3.0 * f0) / (2.0 * sigma)
    return g


def optimal_sigma(kind: str, eps_f: float, lips: float, n: int) -> tuple[float, float]:
    """Step size minimizing the worst-case error bound, and that bound.

    kind 'grad_fd'  : sigma* = sqrt(2 eps_f / L1),        bound sqrt(2 n L1 eps_f)
    kind 'hess_fd'  : sigma* = (24 eps_f/((sqrt2+1) L2))^(1/3),
                      bound n (3 (sqrt2+1)^2 eps_f L2^2)^(1/3)
    kind 'grad_fd2' : sigma* = (2 eps_f / L2)^(1/3),      bound 3 sqrt(n) (4 L2 eps_f^2)^(1/3)

    Note: some references quote the forward-difference floor as
    sqrt(n L1 eps_f / 2); direct minimization of the error bound gives
    sqrt(2 n L1 eps_f), which is what this function returns.  The quoted
    Hessian floor (3 (sqrt2-1)^2 eps_f L2^2)^(1/3) likewise differs from the
    minimized value returned here.
    """
    if eps_f <= 0 or lips <= 0 or n <= 0:
        raise ConfigurationError(
            f"optimal_sigma needs positive inputs, got eps_f={eps_f}, lips={lips}, n={n}"
        )
    rt = math.sqrt(n)
    if kind == "grad_fd":
        sigma = math.sqrt(2.0 * eps_f / lips)
        return sigma, rt * (lips * sigma / 2.0 + eps_f / sigma)
    if kind == "hess_fd":
        c = (math.sqrt(2.0) + 1.0) * lips / 3.0
        sigma = (8.0 * eps_f / c) ** (1.0 / 3.0)
        return sigma, n * (c * sigma + 4.0 * eps_f / sigma**2)
    if kind == "grad_fd2":
        sigma = (2.0 * eps_f / lips) ** (1.0 / 3.0)
        return sigma, rt * (lips * sigma**2 + 4.0 * eps_f / sigma)
    raise ConfigurationError(f"unknown kind {kind!r}; choose grad_fd, hess_fd, or grad_fd2")


# ---------------------------------------------------------------------------
# Mini-batch sample-average gradient oracle
# ---------------------------------------------------------------------------


class GradientPopulation:
    """Finite family of per-sample gradients averaging to the true gradient.

    Sample d_i contributes grad(x) + offset_i; offsets are centered so the
    population mean is exact, and sigma_bound is the root-mean-square offset
    norm (a bound on the per-sample standard deviation).
    """

    def __init__(self, objective: Objective, offsets: Array):
        offsets = np.asarray(offsets, dtype=float)
        if offsets.ndim != 2 or offsets.shape[1] != objective.dim:
            raise ConfigurationError(
                f"offsets must be (N, dim) with dim={objective.dim}, got {offsets.shape}"
            )
        if offsets.shape[0] == 0:
            raise ConfigurationError("population must be non-empty")
        self.objective = objective
        self.offsets = offsets - offsets.mean(axis=0)
        self.size = offsets.shape[0]
        self.sigma_bound = float(np.sqrt(np.mean(np.sum(self.offsets**2, axis=1))))

    def sample_gradient(self, x: Array, idx: int) -> Array:
        return self.objective.grad(x) + self.offsets[idx]


def minibatch_size(delta1: float, p1: float, n_max: int | float) -> int:
    """Batch size ceil(min{N_max, ((1-p1) delta1)^-2})."""
    if delta1 <= 0:
        raise ConfigurationError(f"delta1 must be > 0, got {delta1}")
    if not 0.0 <= p1 < 1.0:
        raise ConfigurationError(f"p1 must be in [0,1), got {p1}")
    target = 1.0 / ((1.0 - p1) * delta1) ** 2
    return max(1, math.ceil(min(float(n_max), target)))


def minibatch_gradient_oracle(
    population: GradientPopulation,
    x: Array,
    delta1: float,
    p1: float,
    n_max: int | float,
    rng: np.random.Generator,
) -> Array:
    """Average per-sample gradients over an i.i.d. mini-batch.

    Realizes the gradient oracle with eps_g = sigma/((1-p1) sqrt(N_max)) and
    kappa_eg = sigma, where sigma bounds the per-sample deviation.
    """
    size = minibatch_size(delta1, p1, n_max)
    idx = rng.integers(0, population.size, size=size)
    grads = np.stack([population.sample_gradient(x, int(i)) for i in idx])
    return grads.mean(axis=0)
