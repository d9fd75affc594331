"""Experiment protocols: adversarial runs, r-sweeps, profile curves, and
Monte-Carlo verification of the high-probability bounds.

Replications derive their RNG streams from one master seed with fixed
substream keys, so every experiment is bit-reproducible; aggregation is
order-insensitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adversarial import AdversarialGradientOracle, AdversaryParams, adversarial_noise_pair
from .core import (
    Array,
    ConfigurationError,
    Objective,
    TrParams,
    builtin_objective,
    scale_objective,
    standard_start,
)
from .oracles import (
    STREAM_ADVERSARY,
    STREAM_FIRST,
    STREAM_SECOND,
    STREAM_ZEROTH,
    FirstOracle,
    SecondOracle,
    ZerothOracle,
    optimal_sigma,
    substream,
)
from .solver import run_tr1, run_tr2
from .theory import (
    TraceAnchors,
    constants_first,
    epsilon_floor,
    failure_prob,
    iteration_bound,
    optimal_p_hat,
)
from .core import RunTrace

# Experiment defaults shared by the adversarial study and the sweeps.
DEFAULTS = dict(eta1=0.25, eta2=1.0, gamma=0.8, p1=0.8, kappa_eg=1.0, l1=1.0, dim=20)


def run_adversarial_experiment(
    eps_f: float,
    eps_g: float,
    r: float,
    seed: int,
    iters: int = 250,
    p1: float = 0.8,
    kappa_eg: float = 1.0,
    dim: int = 20,
    l1: float = 1.0,
    eta1: float = 0.25,
    eta2: float = 1.0,
    gamma: float = 0.8,
    delta0: float = 0.5,
) -> RunTrace:
    """One adversarial run on the scaled sphere with linear models."""
    if eps_f < 0 or eps_g < 0 or r < 0:
        raise ConfigurationError("noise levels and r must be nonnegative")
    obj = builtin_objective("scaled_sphere", dim, L1=l1)
    x0 = 1.4 * np.ones(dim)
    adv_params = AdversaryParams(L1=l1, eps_f=eps_f, eps_g=eps_g, kappa_eg=kappa_eg, eta1=eta1, r=r)
    zeroth = ZerothOracle(
        obj,
        mode="bounded_adversarial",
        eps_f=eps_f,
        hook=lambda phi, phi_plus: adversarial_noise_pair(phi, phi_plus, eps_f),
    )
    adversary = AdversarialGradientOracle(adv_params, p1, substream(seed, STREAM_ADVERSARY))
    first = FirstOracle(
        obj, mode="adversarial", eps_g=eps_g, kappa_eg=kappa_eg, p1=p1, delegate=adversary
    )
    params = TrParams(
        eta1=eta1,
        eta2=eta2,
        gamma=gamma,
        r=r,
        delta0=delta0,
        kappa_fcd=2.0,
        kappa_fod=1.0,
        p1=p1,
        budget=iters,
    )
    return run_tr1(obj, zeroth, first, None, params, x0, seed=seed)


def stabilization_level(trace: RunTrace, window: int = 50) -> float:
    """Mean true gradient norm over the last `window` iterations."""
    norms = trace.grad_norms()
    if norms.size == 0:
        return float("nan")
    return float(np.mean(norms[-window:]))


def convergence_test(trace_f_values, f0: float, f_l: float, tau: float) -> int | None:
    """First evaluation count reaching f <= f_l + tau (f0 - f_l); None if never."""
    if f_l > f0:
        raise ConfigurationError("f_l must not exceed f0")
    if not 0.0 < tau < 1.0:
        raise ConfigurationError(f"tau must be in (0,1), got {tau}")
    target = f_l + tau * (f0 - f_l)
    for i, val in enumerate(trace_f_values, start=1):
        if val <= target:
            return i
    return None


@dataclass
class ProfileData:
    """Evaluations-to-convergence per (problem, solver); None marks a DNF."""

    problems: list[str] = field(default_factory=list)
    solvers: list[str] = field(default_factory=list)
    dims: dict = field(default_factory=dict)
    evals: dict = field(default_factory=dict)  # (problem, solver) -> int | None

    def add(self, problem: str, solver: str, dim: int, evals: int | None) -> None:
        if problem not in self.problems:
            self.problems.append(problem)
            self.dims[problem] = dim
        if solver not in self.solvers:
            self.solvers.append(solver)
        self.evals[(problem, solver)] = evals

    def solved_count(self, solver: str) -> int:
        return sum(
            1 for prob in self.problems if self.evals.get((prob, solver)) is not None
        )


def performance_profile(data: ProfileData, alpha_grid) -> dict[str, Array]:
    """Fraction of problems solved within alpha times the best solver's cost."""
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    n_problems = len(data.problems)
    curves: dict[str, Array] = {}
    ratios: dict[str, list[float]] = {s: [] for s in data.solvers}
    for prob in data.problems:
        best = min(
            (data.evals[(prob, s)] for s in data.solvers if data.evals.get((prob, s)) is not None),
            default=None,
        )
        for s in data.solvers:
            t = data.evals.get((prob, s))
            if t is None or best is None:
                ratios[s].append(math.inf)
            else:
                ratios[s].append(t / best)
    for s in data.solvers:
        rr = np.array(ratios[s])
        curves[s] = np.array([(rr <= a).sum() / n_problems for a in alpha_grid])
    return curves


def data_profile(data: ProfileData, kappa_grid) -> dict[str, Array]:
    """Fraction of problems solved within kappa (n_p + 1) evaluations."""
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    n_problems = len(data.problems)
    curves: dict[str, Array] = {}
    for s in data.solvers:
        counts = []
        for kap in kappa_grid:
            solved = 0
            for prob in data.problems:
                t = data.evals.get((prob, s))
                if t is not None and t <= kap * (data.dims[prob] + 1):
                    solved += 1
            counts.append(solved / n_problems)
        curves[s] = np.array(counts)
    return curves


@dataclass
class ExperimentSpec:
    """Configuration of an r-sweep over the built-in suite."""

    objectives: list[tuple] = field(
        default_factory=lambda: [
            ("scaled_sphere", 2, {"L1": 1.0}),
            ("indefinite_quadratic", 2, {"A": np.diag([1.0, -2.0])}),
            ("rosenbrock", 2, {}),
            ("powell_singular", 4, {}),
            ("trigonometric", 2, {}),
        ]
    )
    noise_kind: str = "uniform_bounded"
    eps_f: float = 0.2
    a: float = 20.0
    r_values: tuple[float, ...] = (0.0, 0.2, 0.4, 0.8, 1.6)
    replications: int = 5
    budget: int = 2000
    taus: tuple[float, ...] = (1e-3, 1e-5)
    master_seed: int = 20240
    eta1: float = 0.25
    eta2: float = 1.0
    gamma: float = 0.8
    delta0: float = 0.5
    max_iters: int = 10_000

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if any(r < 0 for r in self.r_values):
            raise ConfigurationError("all r values must be >= 0")
        if self.noise_kind not in ("uniform_bounded", "subexponential", "exact"):
            raise ConfigurationError(f"unknown noise kind {self.noise_kind!r}")


def _make_sweep_zeroth(scaled: Objective, spec: ExperimentSpec, key: tuple[int, ...]) -> ZerothOracle:
    rng = substream(spec.master_seed, *key, STREAM_ZEROTH)
    if spec.noise_kind == "uniform_bounded":
        return ZerothOracle(scaled, mode="bounded_uniform", eps_f=spec.eps_f, rng=rng)
    if spec.noise_kind == "subexponential":
        return ZerothOracle(scaled, mode="subexponential", eps_f=spec.eps_f, a=spec.a, rng=rng)
    return ZerothOracle(scaled, mode="exact")


def _sweep_sigmas(scaled: Objective, spec: ExperimentSpec) -> tuple[float, float, float, float]:
    """(sigma_g, bound_g, sigma_h, bound_h) for the finite-difference oracles."""
    if spec.noise_kind == "exact" or spec.eps_f == 0.0:
        sigma = 1e-5
        n = scaled.dim
        return (
            sigma,
            math.sqrt(n) * scaled.L1 * sigma / 2.0,
            sigma,
            (math.sqrt(2.0) + 1.0) * n * scaled.L2 * sigma / 3.0,
        )
    eps_eff = spec.eps_f if spec.noise_kind == "uniform_bounded" else spec.eps_f + 2.0 / spec.a
    sigma_g, bound_g = optimal_sigma("grad_fd", eps_eff, max(scaled.L1, 1e-12), scaled.dim)
    sigma_h, bound_h = optimal_sigma("hess_fd", eps_eff, max(scaled.L2, 1e-12), scaled.dim)
    return sigma_g, bound_g, sigma_h, bound_h


def run_sweep_instance(
    spec: ExperimentSpec, prob_idx: int, rep: int, r_value: float
) -> tuple[str, int, list[float]]:
    """Run one (problem, replication, r) cell; returns the true-value log.

    The zeroth-oracle stream depends on (problem, replication) only, so
    r-variants of the same instance are paired draws.
    """
    name, dim, kwargs = spec.objectives[prob_idx]
    obj = builtin_objective(name, dim, **kwargs)
    x0 = standard_start(obj)
    scaled = scale_objective(obj, x0, 100.0)
    zeroth = _make_sweep_zeroth(scaled, spec, (prob_idx, rep))
    sigma_g, bound_g, sigma_h, bound_h = _sweep_sigmas(scaled, spec)
    first = FirstOracle(
        scaled, mode="finite_difference", sigma=sigma_g, zeroth=zeroth, eps_g=bound_g
    )
    second = SecondOracle(
        scaled, mode="finite_difference", sigma=sigma_h, zeroth=zeroth, eps_h=bound_h
    )
    params = TrParams(
        eta1=spec.eta1,
        eta2=spec.eta2,
        gamma=spec.gamma,
        r=r_value,
        delta0=spec.delta0,
        kappa_fcd=1.0,
        kappa_fod=1.0,
        budget=spec.max_iters,
    )
    run_tr2(scaled, zeroth, first, second, params, x0, seed=spec.master_seed, eval_budget=spec.budget)
    values = [phi for phi, _ in zeroth.eval_log[: spec.budget]]
    return f"{name}#{rep}", dim, values


def r_sweep(spec: ExperimentSpec) -> dict[float, ProfileData]:
    """Full sweep: every (problem, replication, r); one ProfileData per tau."""
    out = {tau: ProfileData() for tau in spec.taus}
    for prob_idx in range(len(spec.objectives)):
        for rep in range(spec.replications):
            for r_value in spec.r_values:
                label = f"r={r_value:g}"
                instance, dim, values = run_sweep_instance(spec, prob_idx, rep, r_value)
                for tau in spec.taus:
                    evals = convergence_test(values, 100.0, 0.0, tau)
                    out[tau].add(instance, label, dim, evals)
    return out


# ---------------------------------------------------------------------------
# Monte-Carlo verification of the first-order tail bound
# ---------------------------------------------------------------------------


@dataclass
class TailCheck:
    epsilon: float
    horizon: int
    n_runs: int
    empirical: float
    bound: float
    p_hat: float
    floor: float

    @property
    def margin(self) -> float:
        return 3.0 * math.sqrt(max(self.bound * (1.0 - self.bound), 0.0) / self.n_runs)

    @property
    def passed(self) -> bool:
        return self.empirical >= self.bound - self.margin


def monte_carlo_tail(
    epsilon: float | None,
    n_runs: int = 200,
    master_seed: int = 77,
    p1: float = 0.8,
    kappa_eg: float = 1.0,
    eps_f: float = 0.0,
    eps_g: float = 0.0,
    r: float = 0.0,
    dim: int = 20,
    horizon: int | None = None,
) -> TailCheck:
    """Estimate P{min_k |grad phi(x_k)| <= eps} against the theoretical bound.

    Runs the first-order loop on the sphere with a corrupted gradient oracle.
    When epsilon is None it defaults to 2x the accuracy floor, or 1.0 when
    the floor is exactly zero (noise-free corruption).
    """
    obj = builtin_objective("scaled_sphere", dim, L1=1.0)
    x0 = 1.4 * np.ones(dim)
    consts = constants_first(
        L1=1.0, kappa_bhm=0.0, kappa_eg=kappa_eg, kappa_fcd=2.0, eta1=0.25, eta2=1.0
    )
    gamma = 0.8
    floor = epsilon_floor(
        "first_bounded", eps_f=eps_f, eps_g=eps_g, r=r, p1=p1, gamma=gamma, constants=consts
    )
    if epsilon is None:
        epsilon = 2.0 * floor if floor > 0 else 1.0
    if not epsilon > floor:
        raise ConfigurationError(f"epsilon {epsilon} must exceed the floor {floor}")
    anchors = TraceAnchors(
        grad0_norm=float(np.linalg.norm(obj.grad(x0))),
        delta0=0.5,
        phi0=obj.eval(x0),
        phi_hat=obj.phi_hat,
    )
    if horizon is None:
        mid_p_hat = 0.5 * (0.5 + p1)
        horizon = iteration_bound(
            "first_bounded",
            epsilon,
            mid_p_hat,
            0.0,
            eps_f=eps_f,
            eps_g=eps_g,
            r=r,
            gamma=gamma,
            constants=consts,
            anchors=anchors,
        )
    p_hat = optimal_p_hat(
        "first_bounded",
        horizon,
        epsilon,
        eps_f=eps_f,
        eps_g=eps_g,
        r=r,
        gamma=gamma,
        p1=p1,
        constants=consts,
        anchors=anchors,
    )
    bound = 1.0 - failure_prob("first_bounded", horizon, p_hat, p1)
    hits = 0
    for i in range(n_runs):
        zeroth = ZerothOracle(
            obj, mode="bounded_uniform", eps_f=eps_f, rng=substream(master_seed, i, STREAM_ZEROTH)
        ) if eps_f > 0 else ZerothOracle(obj, mode="exact", record=False)
        first = FirstOracle(
            obj,
            mode="corrupted",
            eps_g=eps_g,
            kappa_eg=kappa_eg,
            p1=p1,
            rng=substream(master_seed, i, STREAM_FIRST),
        )
        params = TrParams(
            eta1=0.25, eta2=1.0, gamma=gamma, r=r, delta0=0.5, kappa_fcd=2.0, p1=p1, budget=horizon
        )
        trace = run_tr1(
            obj, zeroth, first, None, params, x0, seed=master_seed + i, stop_grad_below=epsilon
        )
        if trace.stop_reason == "grad_target" or trace.min_true_grad_norm <= epsilon:
            hits += 1
    return TailCheck(
        epsilon=epsilon,
        horizon=horizon,
        n_runs=n_runs,
        empirical=hits / n_runs,
        bound=bound,
        p_hat=p_hat,
        floor=floor,
    )
