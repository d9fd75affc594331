"""Computable pieces of the convergence theory: complexity constants,
achievable-accuracy floors, iteration bounds, and high-probability tails.

Conventions: a floor of +inf means "no guarantee at these noise levels";
probability bounds are clipped to [0,1], so vacuous bounds come out as a
failure mass of 1 rather than an error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, field

import numpy as np

from .core import Array, ConfigurationError, Objective
from .subproblem import min_eigenpair

REGIMES = ("first_bounded", "first_subexp", "second_bounded", "second_subexp")


@dataclass(frozen=True)
class FirstOrderConstants:
    c1: float
    c2: float
    c3: float
    L1: float
    kappa_bhm: float
    kappa_eg: float
    kappa_fcd: float
    eta1: float
    eta2: float


@dataclass(frozen=True)
class SecondOrderConstants:
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float
    L2: float
    kappa_bhm: float
    kappa_eg: float
    kappa_eh: float
    kappa_fod: float
    eta1: float
    eta2: float


def constants_first(
    L1: float,
    kappa_bhm: float,
    kappa_eg: float,
    kappa_fcd: float,
    eta1: float,
    eta2: float,
) -> FirstOrderConstants:
    """Success-radius constants c1 <= c2 and the progress constant c3.

    kappa_bhm = 0 elides the eta2/kappa_bhm branch of c3 (zero model
    Hessians make it vacuous).
    """
    if not 0.0 < eta1 < 1.0:
        raise ConfigurationError(f"eta1 must be in (0,1), got {eta1}")
    if min(L1, kappa_eg, kappa_bhm) < 0 or kappa_fcd <= 0 or eta2 <= 0:
        raise ConfigurationError("constants_first needs nonnegative inputs and kappa_fcd, eta2 > 0")
    denom = L1 + kappa_bhm + 2.0 * kappa_eg + (1.0 - eta1) * kappa_fcd * kappa_eg
    c1 = min((1.0 - eta1) * kappa_fcd / denom, 1.0 / (kappa_eg + eta2))
    c2 = max(((1.0 - eta1) * kappa_fcd + 2.0) / denom, 1.0 / (kappa_eg + eta2))
    curv = eta2 / kappa_bhm if kappa_bhm > 0 else math.inf
    c3 = 0.5 * eta1 * eta2 * kappa_fcd * min(curv, 1.0)
    return FirstOrderConstants(c1, c2, c3, L1, kappa_bhm, kappa_eg, kappa_fcd, eta1, eta2)


def constants_second(
    L2: float,
    kappa_bhm: float,
    kappa_eg: float,
    kappa_eh: float,
    kappa_fod: float,
    eta1: float,
    eta2: float,
) -> SecondOrderConstants:
    """Stationarity constants c4..c7 and the progress constant c8."""
    if not 0.0 < eta1 < 1.0:
        raise ConfigurationError(f"eta1 must be in (0,1), got {eta1}")
    if min(L2, kappa_eg, kappa_eh, kappa_bhm) < 0 or kappa_fod <= 0 or eta2 <= 0:
        raise ConfigurationError("constants_second needs nonnegative inputs and kappa_fod, eta2 > 0")
    lead = (1.0 - eta1) * kappa_fod
    dg = (L2 / 3.0 + 2.0 * kappa_eg + 3.0 + kappa_eh) + lead * kappa_eg
    dh = (L2 / 3.0 + 2.0 * kappa_eg + 2.0 + kappa_eh) + lead * kappa_eh
    inv_bg = 1.0 / (kappa_bhm + kappa_eg) if kappa_bhm + kappa_eg > 0 else math.inf
    c4 = min(inv_bg, lead / dg, 1.0 / (kappa_eg + eta2))
    c5 = max(inv_bg, lead / dg, 1.0 / (kappa_eg + eta2))
    c6 = min(lead / dh, 1.0 / (kappa_eh + eta2))
    c7 = max((lead + 1.0) / dh, 1.0 / (kappa_eh + eta2))
    curv = eta2 / kappa_bhm if kappa_bhm > 0 else math.inf
    c8 = 0.5 * eta1 * eta2 * kappa_fod * min(curv, 1.0)
    return SecondOrderConstants(
        c4, c5, c6, c7, c8, L2, kappa_bhm, kappa_eg, kappa_eh, kappa_fod, eta1, eta2
    )


def h_first(delta: float, c: FirstOrderConstants) -> float:
    """Guaranteed decrease on a successful first-order iteration."""
    return c.c3 * delta**2


def h_second(delta: float, c: SecondOrderConstants) -> float:
    """Guaranteed decrease on a successful second-order iteration."""
    return c.c8 * min(1.0, delta**3)


def beta(
    x: Array,
    obj: Objective,
    c: SecondOrderConstants,
    eps_g: float = 0.0,
    eps_h: float = 0.0,
) -> float:
    """Second-order stationarity measure of the true function at x.

    max{c4 |grad phi| - c5 eps_g, -c6 lambda_min(hess phi) - c7 eps_H};
    nonpositive at an approximate second-order point.  Infinite constants
    (degenerate kappa inputs) only matter when multiplied by nonzero noise.
    """
    gnorm = float(np.linalg.norm(obj.grad(x)))
    lam, _ = min_eigenpair(obj.hess(x))
    t_grad = c.c4 * gnorm - (c.c5 * eps_g if eps_g > 0 else 0.0)
    t_curv = -c.c6 * lam - (c.c7 * eps_h if eps_h > 0 else 0.0)
    return max(t_grad, t_curv)


def beta_model(g: Array, lam_min: float) -> float:
    """Model stationarity measure max{|g|, -lambda_min(H)}."""
    return max(float(np.linalg.norm(g)), -lam_min)


def p0(regime: str, eps_f: float, eps_g: float, a: float, r: float) -> float:
    """Probability that the relaxation covers both subexponential errors.

    May be negative; only values above 1/2 support a guarantee, which needs
    r > 2 eps_f + (2/a) log 4 in the first-order case.
    """
    if a <= 0:
        raise ConfigurationError(f"p0 needs a > 0, got {a}")
    if regime == "first":
        return 1.0 - 2.0 * math.exp(a * (eps_f - r / 2.0))
    if regime == "second":
        return 1.0 - 2.0 * math.exp(0.5 * a * (2.0 * eps_f + eps_g**1.5 - r))
    raise ConfigurationError(f"unknown p0 regime {regime!r}")


def epsilon_floor(
    regime: str,
    *,
    eps_f: float,
    eps_g: float = 0.0,
    a: float | None = None,
    r: float,
    p1: float,
    p2: float = 1.0,
    gamma: float,
    constants,
) -> float:
    """Smallest stationarity tolerance with a nonvacuous guarantee.

    Returns +inf when the probability parameters cannot support any
    guarantee (e.g. p1 <= 1/2 in the bounded first-order regime).
    """
    if regime not in REGIMES:
        raise ConfigurationError(f"unknown regime {regime!r}; choose from {REGIMES}")
    if regime.startswith("first"):
        c = constants
        base = c.c3 * gamma**2 * c.c1**2
        shift = (c.c2 / c.c1) * eps_g
        if regime == "first_bounded":
            margin = 2.0 * p1 - 1.0
            num = 4.0 * eps_f + 2.0 * r
        else:
            if a is None:
                raise ConfigurationError("first_subexp needs the tail parameter a")
            margin = 2.0 * p0("first", eps_f, eps_g, a, r) + 2.0 * p1 - 3.0
            num = 4.0 * eps_f + 8.0 / a + 2.0 * r
        if margin <= 0 or base <= 0:
            return math.inf
        return math.sqrt(num / (base * margin)) + shift
    c = constants
    base = c.c8 * gamma**3
    p12 = p1 * p2
    if regime == "second_bounded":
        margin = 2.0 * p12 - 1.0
        num = 4.0 * eps_f + 2.0 * r
    else:
        if a is None:
            raise ConfigurationError("second_subexp needs the tail parameter a")
        margin = 2.0 * p0("second", eps_f, eps_g, a, r) + 2.0 * p12 - 3.0
        num = 4.0 * eps_f + 8.0 / a + 2.0 * r
    if margin <= 0 or base <= 0:
        return math.inf
    return (num / (base * margin)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class TraceAnchors:
    """Run-specific quantities entering the iteration bounds."""

    grad0_norm: float  # |grad phi(x0)| (first order) or beta(x0) (second order)
    delta0: float
    phi0: float
    phi_hat: float


def _log_gamma(value: float, gamma: float) -> float:
    return math.log(value) / math.log(gamma)


def _first_denom(epsilon: float, eps_g: float, gamma: float, c: FirstOrderConstants) -> float:
    gap = c.c1 * epsilon - c.c2 * eps_g
    if gap <= 0:
        raise ConfigurationError("epsilon is below the achievable accuracy (c1 e <= c2 eps_g)")
    return c.c3 * gamma**2 * gap**2


def _first_bracket(
    epsilon: float, eps_g: float, gamma: float, c: FirstOrderConstants, anchors: TraceAnchors
) -> float:
    gap = c.c1 * epsilon - c.c2 * eps_g
    start_gap = c.c1 * anchors.grad0_norm - c.c2 * eps_g
    if start_gap <= 0:
        # Already below the reachable level at k = 0; any horizon works.
        return -math.inf
    return 0.5 * _log_gamma(min(gap / anchors.delta0, anchors.delta0 / start_gap), gamma) + 0.5


def _second_denom(epsilon: float, gamma: float, c: SecondOrderConstants) -> float:
    if epsilon <= 0:
        raise ConfigurationError("epsilon must be > 0")
    return c.c8 * (gamma * epsilon) ** 3


def _second_bracket(
    epsilon: float, gamma: float, anchors: TraceAnchors
) -> float:
    if anchors.grad0_norm <= 0:
        return -math.inf
    return 0.5 * _log_gamma(min(epsilon / anchors.delta0, anchors.delta0 / anchors.grad0_norm), gamma) + 0.5


def iteration_bound(
    regime: str,
    epsilon: float,
    p_hats,
    t_shift: float,
    *,
    eps_f: float,
    eps_g: float = 0.0,
    a: float | None = None,
    r: float,
    gamma: float,
    constants,
    anchors: TraceAnchors,
) -> int:
    """Smallest horizon T certified by the tail bound at the given p-hats.

    p_hats is a float (bounded regimes: p1-hat or p12-hat) or a pair
    (p0-hat, p1-hat / p12-hat) in the subexponential regimes, where t_shift
    enters the numerator.
    """
    if regime not in REGIMES:
        raise ConfigurationError(f"unknown regime {regime!r}")
    gap_term = phi_term = bracket = lead = None
    if regime.startswith("first"):
        denom = _first_denom(epsilon, eps_g, gamma, constants)
        bracket = _first_bracket(epsilon, eps_g, gamma, constants, anchors)
        if regime == "first_bounded":
            p_hat = float(p_hats)
            lead = p_hat - 0.5 - (2.0 * eps_f + r) / denom
            phi_term = (anchors.phi0 - anchors.phi_hat) / denom
        else:
            p_hat0, p_hat1 = p_hats
            lead = p_hat0 + p_hat1 - 1.5 - (2.0 * eps_f + 4.0 / a + r) / denom
            phi_term = (anchors.phi0 - anchors.phi_hat + t_shift) / denom
    else:
        denom = _second_denom(epsilon, gamma, constants)
        bracket = _second_bracket(epsilon, gamma, anchors)
        if regime == "second_bounded":
            p_hat = float(p_hats)
            lead = p_hat - 0.5 - (2.0 * eps_f + r) / denom
            phi_term = (anchors.phi0 - anchors.phi_hat) / denom
        else:
            p_hat0, p_hat12 = p_hats
            lead = p_hat0 + p_hat12 - 1.5 - (2.0 * eps_f + 4.0 / a + r) / denom
            phi_term = (anchors.phi0 - anchors.phi_hat + t_shift) / denom
    if lead <= 0:
        raise ConfigurationError(
            "p-hat is not admissible for this epsilon (leading factor nonpositive)"
        )
    if bracket == -math.inf:
        return 1
    return max(1, math.ceil((phi_term + bracket) / lead))


def azuma_tail(T: int, p: float, p_hat: float) -> float:
    """Tail mass exp(-(1 - p_hat/p)^2 T / 2) for the submartingale count."""
    if not 0.0 <= p_hat <= p <= 1.0:
        raise ConfigurationError(f"need 0 <= p_hat <= p <= 1, got p_hat={p_hat}, p={p}")
    if p == 0.0:
        return 0.0
    return math.exp(-0.5 * (1.0 - p_hat / p) ** 2 * T)


def failure_prob(
    regime: str,
    T: int,
    p_hats,
    p_true,
    a: float | None = None,
    t_shift: float = 0.0,
) -> float:
    """Upper bound on the probability that the stationarity target is missed.

    Bounded regimes: exp tail for the accuracy count.  Subexponential
    regimes add the relaxation-count tail and the noise-mass tail
    exp(-a t / 4).  Clipped to [0,1]; 1 means the bound is vacuous.
    """
    if regime not in REGIMES:
        raise ConfigurationError(f"unknown regime {regime!r}")
    if regime.endswith("bounded"):
        mass = azuma_tail(T, float(p_true), float(p_hats))
    else:
        if a is None or a <= 0:
            raise ConfigurationError("subexponential regimes need a > 0")
        p_hat0, p_hat1 = p_hats
        p0_true, p1_true = p_true
        mass = (
            azuma_tail(T, p1_true, p_hat1)
            + azuma_tail(T, p0_true, p_hat0)
            + math.exp(-0.25 * a * t_shift)
        )
    return min(1.0, max(0.0, mass))


def optimal_p_hat(
    regime: str,
    T: int,
    epsilon: float,
    *,
    eps_f: float,
    eps_g: float = 0.0,
    r: float,
    gamma: float,
    p1: float,
    p2: float = 1.0,
    constants,
    anchors: TraceAnchors,
) -> float:
    """The p-hat making the horizon constraint tight, clipped into (1/2, p].

    Plugging the unclipped value into the tail reproduces the optimized
    corollary exponent exactly.
    """
    if regime == "first_bounded":
        denom = _first_denom(epsilon, eps_g, gamma, constants)
        bracket = _first_bracket(epsilon, eps_g, gamma, constants, anchors)
        phi_term = (anchors.phi0 - anchors.phi_hat) / denom
        cap = p1
    elif regime == "second_bounded":
        denom = _second_denom(epsilon, gamma, constants)
        bracket = _second_bracket(epsilon, gamma, anchors)
        phi_term = (anchors.phi0 - anchors.phi_hat) / denom
        cap = p1 * p2
    else:
        raise ConfigurationError("optimal_p_hat supports the bounded regimes only")
    if bracket == -math.inf:
        bracket = 0.0
    value = 0.5 + (2.0 * eps_f + r) / denom + (phi_term + bracket) / T
    return min(value, cap)


def split_p_hats(total: float, p0_true: float, p1_true: float) -> tuple[float, float]:
    """Split a p-hat budget so both subexponential tail exponents match.

    p_hat_j = p_j * total / (p0 + p1) equalizes 1 - p_hat_j / p_j.
    """
    if p0_true + p1_true <= 0:
        raise ConfigurationError("cannot split p-hats over nonpositive probabilities")
    frac = total / (p0_true + p1_true)
    return p0_true * frac, p1_true * frac


def delta_bar(trace_grad_norms, c: FirstOrderConstants, eps_g: float) -> float:
    """Success-radius threshold c1 min_k |grad phi(x_k)| - c2 eps_g."""
    return c.c1 * float(np.min(trace_grad_norms)) - c.c2 * eps_g


@dataclass
class BoundReport:
    """Audit record for one bound computation; serializes with inputs echoed."""

    regime: str
    epsilon: float
    epsilon_floor: float
    t_min: int
    p_hats: tuple[float, ...]
    failure_bound: float
    inputs: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = asdict(self)
        return json.dumps(payload, sort_keys=True, indent=2)
