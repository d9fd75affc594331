"""Worst-case oracles for the quadratic test problem phi(x) = L1 |x|^2 / 2.

The zeroth-order noise flips sign to fight the algorithm; the gradient
oracle picks g_k by analytically solving small two-variable programs in
y1 = <x, g/|g|> and y2 = |g|.  For a linear model the trial step is
s = -delta g / |g|, so the change in phi is L1 delta (delta/2 - y1): the
adversary maximizes loss subject to the step being accepted and, when the
accuracy coin I_k lands 1, subject to |g - L1 x| <= kappa_eg delta + eps_g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Array, ConfigurationError

# Slack used to realize strict inequalities in the reject programs.
STRICT_SLACK = 1e-7
# The loss-maximizing solutions sit exactly on the acceptance boundary
# (rho = eta1); a relative nudge keeps the engineered tie on the accept
# side under floating-point rounding.
ACCEPT_SLACK = 1e-9


@dataclass(frozen=True)
class AdversaryParams:
    L1: float
    eps_f: float
    eps_g: float
    kappa_eg: float
    eta1: float
    r: float
    eta2: float = 1.0  # radius-growth threshold, used by the gradient policy


@dataclass(frozen=True)
class YSolution:
    """Optimum of one adversarial program in the (y1, y2) variables."""

    y1: float
    y2: float
    feasible: bool
    objective_value: float
    branch: str = ""


def adversarial_noise_pair(phi_x: float, phi_xs: float, eps_f: float) -> tuple[float, float]:
    """Noise pair pushing the ratio test the wrong way.

    Descent steps get (-eps_f, +eps_f) to look worse; ascent steps get
    (+eps_f, -eps_f) to look better.
    """
    if phi_xs <= phi_x:
        return -eps_f, +eps_f
    return +eps_f, -eps_f


def _y2_floor(L1: float, norm_x: float) -> float:
    return min(1e-6, 1e-2 * L1 * norm_x)


def _accept_bound(y2: float, delta: float, p: AdversaryParams) -> float:
    """Lower bound on y1 for the step to be accepted (noise favoring it)."""
    raw = p.eta1 * y2 / p.L1 + delta / 2.0 - (2.0 * p.eps_f + p.r) / (p.L1 * delta)
    return raw + ACCEPT_SLACK * (1.0 + abs(raw))


def _accuracy_bound(y2: float, amount: float, L1: float) -> float:
    """Lower bound on y1 from |g - L1 x| <= radius; amount = (L1|x|)^2 - radius^2."""
    return y2 / (2.0 * L1) + amount / (2.0 * L1 * y2)


def solve_most_loss(x: Array, delta: float, accurate: bool, p: AdversaryParams) -> YSolution:
    """Minimize y1 (maximize the loss of the accepted step).

    With accurate=True the accuracy hyperbola is an extra lower bound on y1.
    """
    if delta <= 0:
        raise ConfigurationError(f"delta must be > 0, got {delta}")
    norm_x = float(np.linalg.norm(x))
    if norm_x == 0.0:
        return YSolution(0.0, 0.0, False, math.inf, branch="degenerate")
    y2min = _y2_floor(p.L1, norm_x)
    radius = p.kappa_eg * delta + p.eps_g
    amount = (p.L1 * norm_x) ** 2 - radius**2

    def finalize(y1: float, y2: float, branch: str) -> YSolution:
        if y1 > norm_x:
            return YSolution(y1, y2, False, math.inf, branch=branch)
        return YSolution(y1, y2, True, y1, branch=branch)

    if not accurate:
        y1 = max(_accept_bound(y2min, delta, p), -norm_x)
        return finalize(y1, y2min, "floor")

    if amount <= 0.0:
        # Every lower bound is nondecreasing in y2: sit on the y2 floor.
        y1 = max(_accept_bound(y2min, delta, p), _accuracy_bound(y2min, amount, p.L1), -norm_x)
        return finalize(y1, y2min, "floor")

    y2_hat = math.sqrt(amount)
    if y2_hat <= y2min:
        y1 = max(_accept_bound(y2min, delta, p), _accuracy_bound(y2min, amount, p.L1), -norm_x)
        return finalize(y1, y2min, "floor")
    y1_hat = _accuracy_bound(y2_hat, amount, p.L1)  # = sqrt(amount)/L1, the hyperbola minimum
    if _accept_bound(y2_hat, delta, p) <= y1_hat:
        return finalize(y1_hat, y2_hat, "hyperbola_min")

    # Acceptance binds: shrink y2 until the two lower bounds meet.
    # (2 eta1 - 1) y2^2 + (L1 delta - 2(2 eps_f + r)/delta) y2 - amount = 0
    # has exactly one root in (0, y2_hat).
    qa = 2.0 * p.eta1 - 1.0
    qb = p.L1 * delta - 2.0 * (2.0 * p.eps_f + p.r) / delta
    root = _root_in_interval(qa, qb, -amount, 0.0, y2_hat)
    if root is None:
        return YSolution(y1_hat, y2_hat, False, math.inf, branch="no_root")
    y2 = max(root, y2min)
    y1 = max(_accept_bound(y2, delta, p), _accuracy_bound(y2, amount, p.L1))
    return finalize(y1, y2, "acceptance_binding")


def solve_least_gain(x: Array, delta: float, p: AdversaryParams) -> YSolution:
    """Minimize y1 subject only to accuracy: make the unavoidable gain tiny."""
    if delta <= 0:
        raise ConfigurationError(f"delta must be > 0, got {delta}")
    norm_x = float(np.linalg.norm(x))
    if norm_x == 0.0:
        return YSolution(0.0, 0.0, False, math.inf, branch="degenerate")
    y2min = _y2_floor(p.L1, norm_x)
    radius = p.kappa_eg * delta + p.eps_g
    amount = (p.L1 * norm_x) ** 2 - radius**2
    if amount <= 0.0:
        y1 = max(_accuracy_bound(y2min, amount, p.L1), -norm_x)
        y2 = y2min
    else:
        y2 = max(math.sqrt(amount), y2min)
        y1 = max(_accuracy_bound(y2, amount, p.L1), -norm_x)
    if y1 > norm_x:
        return YSolution(y1, y2, False, math.inf, branch="floor")
    return YSolution(y1, y2, True, y1, branch="hyperbola_min" if amount > 0 else "floor")


def solve_reject(which: str, x: Array, delta: float, p: AdversaryParams) -> YSolution:
    """Maximize y3 = eta1 y2 - L1 y1: drive the ratio test below eta1.

    'ascent' keeps y1 < delta/2 (the step would raise phi); 'descent' keeps
    y1 >= delta/2 and needs |x| >= delta/2 to be feasible.  The objective
    value is compared by the caller against the rejection threshold.
    """
    if which not in ("ascent", "descent"):
        raise ConfigurationError(f"unknown reject program {which!r}")
    if delta <= 0:
        raise ConfigurationError(f"delta must be > 0, got {delta}")
    norm_x = float(np.linalg.norm(x))
    if norm_x == 0.0:
        return YSolution(0.0, 0.0, False, -math.inf, branch="degenerate")
    y2min = _y2_floor(p.L1, norm_x)
    radius = p.kappa_eg * delta + p.eps_g
    amount = (p.L1 * norm_x) ** 2 - radius**2
    if amount <= 0.0:
        # The accuracy ball contains 0: the caller can reject with g = 0.
        return YSolution(0.0, 0.0, False, -math.inf, branch="zero_gradient")

    def upper(y2: float) -> float:
        return (2.0 * p.eta1 - 1.0) * y2 / 2.0 - amount / (2.0 * y2)

    def pack(y2: float, y3: float, branch: str) -> YSolution:
        y1 = (p.eta1 * y2 - y3) / p.L1
        ok = y2 >= y2min - 1e-12 and abs(y1) <= norm_x + 1e-9
        if which == "ascent":
            ok = ok and y1 < delta / 2.0
        else:
            ok = ok and y1 >= delta / 2.0 - 1e-9
        return YSolution(y1, y2, ok, y3 if ok else -math.inf, branch=branch)

    concave = 2.0 * p.eta1 < 1.0
    if which == "ascent":
        cap = min(norm_x, delta / 2.0 - STRICT_SLACK)
        if concave:
            y2_star = math.sqrt(amount / (1.0 - 2.0 * p.eta1))
            y3_star = -math.sqrt(amount * (1.0 - 2.0 * p.eta1))
            if y3_star >= p.eta1 * y2_star - p.L1 * cap and y2_star >= y2min:
                return pack(y2_star, y3_star, "concave_max")
        # upper(y2) = eta1 y2 - L1 cap  <=>  y2^2 - 2 L1 cap y2 + amount = 0
        disc = (p.L1 * cap) ** 2 - amount
        if disc < 0.0:
            return YSolution(math.nan, math.nan, False, -math.inf, branch="no_root")
        root_lo = p.L1 * cap - math.sqrt(disc)
        root_hi = p.L1 * cap + math.sqrt(disc)
        if root_hi <= 0.0:
            return YSolution(math.nan, math.nan, False, -math.inf, branch="no_root")
        if concave:
            # Feasible y2 lie between the roots; pick the one nearest the
            # unconstrained maximizer.
            y2 = root_hi if y2_star > root_hi else max(root_lo, y2min)
        else:
            y2 = root_hi
        return pack(y2, upper(y2), "root")

    # descent: extra upper bound y3 <= eta1 y2 - L1 delta / 2
    if norm_x < delta / 2.0:
        return YSolution(math.nan, math.nan, False, -math.inf, branch="infeasible_short_x")
    if concave:
        y2_star = math.sqrt(amount / (1.0 - 2.0 * p.eta1))
        y3_star = -math.sqrt(amount * (1.0 - 2.0 * p.eta1))
        violates_progress = y3_star > p.eta1 * y2_star - p.L1 * delta / 2.0
        violates_norm = y3_star < p.eta1 * y2_star - p.L1 * norm_x
        if not violates_progress and not violates_norm and y2_star >= y2min:
            return pack(y2_star, y3_star, "concave_max")
        if violates_progress:
            # upper(y2) = eta1 y2 - L1 delta/2 <=> y2^2 - L1 delta y2 + amount = 0
            disc = (p.L1 * delta / 2.0) ** 2 - amount
            if disc < 0.0:
                return YSolution(math.nan, math.nan, False, -math.inf, branch="no_root")
            y2 = p.L1 * delta / 2.0 + math.sqrt(disc)
            return pack(y2, p.eta1 * y2 - p.L1 * delta / 2.0, "progress_binding")
    # upper(y2) = eta1 y2 - L1 |x| <=> y2^2 - 2 L1 |x| y2 + amount = 0,
    # whose larger root is L1 |x| + radius.
    y2 = p.L1 * norm_x + radius
    return pack(y2, p.eta1 * y2 - p.L1 * norm_x, "norm_binding")


def _root_in_interval(qa: float, qb: float, qc: float, lo: float, hi: float) -> float | None:
    """Root of qa t^2 + qb t + qc in (lo, hi]. The callers guarantee one exists
    when the bracketing signs differ; degenerate cases fall back to bisection."""
    roots = []
    if qa == 0.0:
        if qb != 0.0:
            roots = [-qc / qb]
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            sq = math.sqrt(disc)
            roots = [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)]
    inside = [t for t in roots if lo < t <= hi * (1.0 + 1e-12)]
    if inside:
        return min(inside)

    def q(t):
        return qa * t * t + qb * t + qc

    a, b = max(lo, 1e-300), hi
    if q(a) == 0.0:
        return a
    if q(a) * q(b) > 0.0:
        return None
    for _ in range(200):
        mid = 0.5 * (a + b)
        if q(a) * q(mid) <= 0.0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def recover_gradient(y: YSolution, x: Array, rng: np.random.Generator) -> Array:
    """Build g with <x, g/|g|> = y1 and |g| = y2 as g = a1 x + a2 v.

    v is a random unit vector, re-drawn while nearly collinear with x,
    where the two-equation system for (a1, a2) is singular.
    """
    x = np.asarray(x, dtype=float)
    norm_x = float(np.linalg.norm(x))
    if norm_x == 0.0:
        raise ConfigurationError("recover_gradient needs x != 0")
    if not y.feasible:
        raise ConfigurationError("cannot recover a gradient from an infeasible solution")
    y1 = min(max(y.y1, -norm_x), norm_x)
    y2 = y.y2
    if y2 == 0.0:
        return np.zeros_like(x)
    xhat = x / norm_x
    v = _draw_direction(rng, x.size)
    while abs(float(v @ xhat)) > 0.99:
        v = _draw_direction(rng, x.size)
    c = float(x @ v)
    a2 = y2 * math.sqrt(max(norm_x**2 - y1**2, 0.0) / (norm_x**2 - c**2))
    a1 = (y1 * y2 - a2 * c) / norm_x**2
    return a1 * x + a2 * v


def _draw_direction(rng: np.random.Generator, n: int) -> Array:
    v = rng.standard_normal(n)
    nrm = np.linalg.norm(v)
    while nrm == 0.0:
        v = rng.standard_normal(n)
        nrm = np.linalg.norm(v)
    return v / nrm


class AdversarialGradientOracle:
    """Full decision tree for the adversarial gradient on the scaled sphere.

    Flip a coin with success p1; on success the emitted gradient must stay
    accurate, on failure it is unconstrained.  Prefers: trick the algorithm
    into an accepted loss; else force a rejection (ascent program first);
    else concede the least possible gain.  Decisions are logged per call.

    With grow_aware=True (default) the emitted gradient norm is tie-broken
    toward keeping the radius-growth test alive: the unconstrained tricks
    pick |g| = eta2 delta among the equally optimal norms, and concessions
    pay the minimal extra loss for a norm that passes the growth test.  The
    strict per-iteration greedy (grow_aware=False) lets the trust region
    collapse together with the iterates, which the single-iteration analysis
    does not rule out; the radius-aware policy is what sustains the
    worst-case stall level.
    """

    def __init__(
        self,
        params: AdversaryParams,
        p1: float,
        rng: np.random.Generator,
        grow_aware: bool = True,
    ):
        if not 0.0 <= p1 <= 1.0:
            raise ConfigurationError(f"p1 must be in [0,1], got {p1}")
        self.params = params
        self.p1 = p1
        self.rng = rng
        self.grow_aware = grow_aware
        self.decision_log: list[tuple[str, float, float]] = []

    def _log(self, branch: str, y: YSolution | None = None):
        if y is None:
            self.decision_log.append((branch, math.nan, math.nan))
        else:
            self.decision_log.append((branch, y.y1, y.y2))

    def __call__(self, x: Array, delta: float) -> tuple[Array, bool]:
        p = self.params
        x = np.asarray(x, dtype=float)
        norm_x = float(np.linalg.norm(x))
        i_k = bool(self.rng.random() < self.p1)
        if norm_x == 0.0:
            self._log("degenerate_x")
            return np.zeros_like(x), i_k
        if not i_k:
            sol = solve_most_loss(x, delta, accurate=False, p=p)
            if not sol.feasible or sol.y1 > delta / 2.0:
                self._log("inaccurate_reject")
                return np.zeros_like(x), i_k
            if self.grow_aware:
                # any norm with a slack acceptance bound attains the same loss
                y2_grow = p.eta2 * delta
                if _accept_bound(y2_grow, delta, p) <= sol.y1:
                    sol = YSolution(sol.y1, y2_grow, True, sol.y1, branch=sol.branch + "_grow")
            self._log("inaccurate_most_loss", sol)
            return recover_gradient(sol, x, self.rng), i_k

        sol = solve_most_loss(x, delta, accurate=True, p=p)
        if not sol.feasible:
            self._log("accurate_infeasible_true_grad")
            return p.L1 * x, i_k
        if sol.y1 < delta / 2.0:
            self._log("accurate_most_loss", sol)
            return recover_gradient(sol, x, self.rng), i_k

        radius = p.kappa_eg * delta + p.eps_g
        if p.L1 * norm_x <= radius:
            self._log("accurate_zero_grad")
            return np.zeros_like(x), i_k
        thresh_ascent = (2.0 * p.eps_f + p.r) / delta - p.L1 * delta / 2.0
        thresh_descent = (-2.0 * p.eps_f + p.r) / delta - p.L1 * delta / 2.0
        asc = solve_reject("ascent", x, delta, p)
        if asc.feasible and asc.objective_value > thresh_ascent:
            self._log("reject_ascent", asc)
            return recover_gradient(asc, x, self.rng), i_k
        desc = solve_reject("descent", x, delta, p)
        if desc.feasible and desc.objective_value > thresh_descent:
            self._log("reject_descent", desc)
            return recover_gradient(desc, x, self.rng), i_k
        gain = solve_least_gain(x, delta, p)
        if not gain.feasible:
            self._log("least_gain_infeasible_true_grad")
            return p.L1 * x, i_k
        if self.grow_aware and gain.y2 < p.eta2 * delta:
            # slide along the accuracy boundary to a norm that passes the
            # growth test; costs a slightly larger conceded decrease
            amount = (p.L1 * norm_x) ** 2 - radius**2
            y2_grow = min(p.eta2 * delta, p.L1 * norm_x + radius)
            if y2_grow > gain.y2:
                y1_grow = _accuracy_bound(y2_grow, amount, p.L1)
                gain = YSolution(y1_grow, y2_grow, True, y1_grow, branch="least_gain_grow")
        self._log("least_gain", gain)
        return recover_gradient(gain, x, self.rng), i_k
