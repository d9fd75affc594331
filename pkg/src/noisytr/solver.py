"""Modified first- and second-order trust-region loops with full tracing.

Both loops run a fixed iteration budget (the theory is a fixed-horizon tail
bound), accept a step when the relaxed ratio (f_k - f_k+ + r) / predicted
decrease reaches eta1, and move the radius on the exact lattice
delta = delta0 * gamma^m.  A step with zero predicted decrease is rejected
without spending function evaluations.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict
from typing import Callable

import numpy as np

from .core import (
    Array,
    IterationRecord,
    Objective,
    QuadraticModel,
    RunTrace,
    TrParams,
    model_decrease,
)
from .oracles import FirstOracle, SecondOracle, ZerothOracle
from .subproblem import cauchy_step, min_eigenpair, second_order_step

DELTA_UNDERFLOW = 1e-14

HkProvider = Callable[[Array, int], Array]


def zero_hessians(x: Array, k: int) -> Array:
    return np.zeros((x.size, x.size))


def clipped_hessian_provider(obj: Objective, kappa_bhm: float) -> HkProvider:
    """Exact Hessians rescaled onto the ball |H| <= kappa_bhm when needed."""

    def provider(x: Array, k: int) -> Array:
        H = obj.hess(x)
        nrm = float(np.linalg.norm(H, 2))
        if nrm > kappa_bhm > 0:
            H = H * (kappa_bhm / nrm)
        return H

    return provider


def compute_rho(f_k: float, f_k_plus: float, r: float, decrease: float) -> float:
    """Relaxed acceptance ratio; callers must reject before decrease <= 0."""
    if decrease <= 0:
        raise ValueError("compute_rho requires a positive model decrease")
    return (f_k - f_k_plus + r) / decrease


def _grad_tolerance(oracle: FirstOracle, delta_in: float) -> float:
    return oracle.eps_g + oracle.kappa_eg * delta_in


def run_tr1(
    obj: Objective,
    zeroth: ZerothOracle,
    first: FirstOracle,
    hk_provider: HkProvider | None,
    params: TrParams,
    x0: Array,
    seed: int | None = None,
    eval_budget: int | None = None,
    stop_grad_below: float | None = None,
) -> RunTrace:
    """First-order loop: Cauchy steps on models with bounded Hessians.

    The gradient oracle is queried with the radius delta_k; the radius grows
    only on accepted steps with |g_k| >= eta2 delta_k.  stop_grad_below is an
    evaluation shortcut for Monte-Carlo tail estimates: it ends the run once
    the true gradient norm crosses the target, which cannot change whether
    the run's minimum crossed it.
    """
    if hk_provider is None:
        hk_provider = zero_hessians
    x = np.asarray(x0, dtype=float).copy()
    m = 0  # radius exponent: delta = delta0 * gamma^m
    records: list[IterationRecord] = []
    stop_reason = None
    for k in range(params.budget):
        delta = params.delta0 * params.gamma**m
        if delta < DELTA_UNDERFLOW:
            stop_reason = "delta_underflow"
            break
        if eval_budget is not None and zeroth.n_evals >= eval_budget:
            stop_reason = "eval_budget"
            break
        true_grad = obj.grad(x)
        true_grad_norm = float(np.linalg.norm(true_grad))
        phi_here = obj.eval(x)
        if stop_grad_below is not None and true_grad_norm <= stop_grad_below:
            stop_reason = "grad_target"
            break
        g, _ = first.sample(x, delta)
        H = hk_provider(x, k)
        model = QuadraticModel(x, g, H)
        s = cauchy_step(model, delta)
        dec = model_decrease(model, s)
        g_norm = float(np.linalg.norm(g))
        i_k = bool(np.linalg.norm(g - true_grad) <= _grad_tolerance(first, delta) + 1e-12)
        if dec <= 0.0:
            rho = math.nan
            accepted = False
            success = False
            e_k = e_plus = math.nan
            j_k = True
            x_next = x
            m += 1
        else:
            f_k, f_plus, e_k, e_plus = zeroth.sample_pair(x, x + s)
            rho = compute_rho(f_k, f_plus, params.r, dec)
            accepted = rho >= params.eta1
            grow = accepted and g_norm >= params.eta2 * delta
            success = grow
            j_k = bool(params.r >= abs(e_k) + abs(e_plus))
            if accepted:
                x_next = x + s
                m += -1 if grow else 1
            else:
                x_next = x
                m += 1
        records.append(
            IterationRecord(
                k=k,
                x=x.copy(),
                delta=delta,
                g_norm=g_norm,
                model_decrease=dec,
                rho=rho,
                accepted=accepted,
                success=success,
                true_grad_norm=true_grad_norm,
                phi_value=phi_here,
                phi_next=obj.eval(x_next),
                e_k=e_k,
                e_k_plus=e_plus,
                i_k=i_k,
                j_k=j_k,
            )
        )
        x = x_next
    return RunTrace(
        tuple(records),
        seed,
        params,
        variant="first_order",
        stopped_early=stop_reason is not None,
        stop_reason=stop_reason,
    )


def run_tr2(
    obj: Objective,
    zeroth: ZerothOracle,
    first: FirstOracle,
    second: SecondOracle,
    params: TrParams,
    x0: Array,
    seed: int | None = None,
    eval_budget: int | None = None,
) -> RunTrace:
    """Second-order loop: better of Cauchy/eigen steps, curvature-aware radius.

    The gradient oracle is queried with delta_k^2 and the Hessian oracle with
    delta_k; the radius grows when max{|g_k|, -lambda_min(H_k)} >= eta2 delta_k.
    """
    x = np.asarray(x0, dtype=float).copy()
    m = 0
    records: list[IterationRecord] = []
    stop_reason = None
    for k in range(params.budget):
        delta = params.delta0 * params.gamma**m
        if delta < DELTA_UNDERFLOW:
            stop_reason = "delta_underflow"
            break
        if eval_budget is not None and zeroth.n_evals >= eval_budget:
            stop_reason = "eval_budget"
            break
        true_grad = obj.grad(x)
        true_hess = obj.hess(x)
        true_grad_norm = float(np.linalg.norm(true_grad))
        phi_here = obj.eval(x)
        g, _ = first.sample(x, delta**2)
        H, _ = second.sample(x, delta)
        model = QuadraticModel(x, g, H)
        eigpair = min_eigenpair(H)
        s = second_order_step(model, delta, eigpair=eigpair)
        dec = model_decrease(model, s)
        g_norm = float(np.linalg.norm(g))
        lam_min = eigpair[0]
        beta_m = max(g_norm, -lam_min)
        grad_ok = np.linalg.norm(g - true_grad) <= _grad_tolerance(first, delta**2) + 1e-12
        hess_ok = (
            np.linalg.norm(H - true_hess, 2) <= second.eps_h + second.kappa_eh * delta + 1e-12
        )
        i_k = bool(grad_ok and hess_ok)
        if dec <= 0.0:
            rho = math.nan
            accepted = False
            success = False
            e_k = e_plus = math.nan
            j_k = True
            x_next = x
            m += 1
        else:
            f_k, f_plus, e_k, e_plus = zeroth.sample_pair(x, x + s)
            rho = compute_rho(f_k, f_plus, params.r, dec)
            accepted = rho >= params.eta1
            grow = accepted and beta_m >= params.eta2 * delta
            success = grow
            j_k = bool(params.r >= abs(e_k) + abs(e_plus) + first.eps_g**1.5)
            if accepted:
                x_next = x + s
                m += -1 if grow else 1
            else:
                x_next = x
                m += 1
        records.append(
            IterationRecord(
                k=k,
                x=x.copy(),
                delta=delta,
                g_norm=g_norm,
                model_decrease=dec,
                rho=rho,
                accepted=accepted,
                success=success,
                true_grad_norm=true_grad_norm,
                phi_value=phi_here,
                phi_next=obj.eval(x_next),
                e_k=e_k,
                e_k_plus=e_plus,
                i_k=i_k,
                j_k=j_k,
                beta_m=beta_m,
                lambda_min_model=lam_min,
            )
        )
        x = x_next
    return RunTrace(
        tuple(records),
        seed,
        params,
        variant="second_order",
        stopped_early=stop_reason is not None,
        stop_reason=stop_reason,
    )


# ---------------------------------------------------------------------------
# Trace serialization
# ---------------------------------------------------------------------------

_SCALAR_COLUMNS = (
    "k",
    "delta",
    "g_norm",
    "model_decrease",
    "rho",
    "accepted",
    "success",
    "true_grad_norm",
    "phi_value",
    "phi_next",
    "e_k",
    "e_k_plus",
    "i_k",
    "j_k",
    "beta_m",
    "lambda_min_model",
)


def _fmt(value) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def trace_csv_lines(trace: RunTrace) -> list[str]:
    """CSV rows, one per iteration; floats carry 17 significant digits."""
    dim = trace.records[0].x.size if trace.records else 0
    header = ",".join(_SCALAR_COLUMNS + tuple(f"x{i}" for i in range(dim)))
    lines = [header]
    for rec in trace.records:
        vals = [_fmt(getattr(rec, col)) for col in _SCALAR_COLUMNS]
        vals.extend(_fmt(v) for v in rec.x)
        lines.append(",".join(vals))
    return lines


def write_trace_csv(trace: RunTrace, path) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(trace_csv_lines(trace)) + "\n")


def trace_summary(trace: RunTrace, extra: dict | None = None) -> dict:
    summary = {
        "variant": trace.variant,
        "seed": trace.seed,
        "params": asdict(trace.params),
        "iterations": len(trace.records),
        "stopped_early": trace.stopped_early,
        "stop_reason": trace.stop_reason,
        "min_true_grad_norm": trace.min_true_grad_norm,
        "final_phi": trace.final_phi,
    }
    if extra:
        summary.update(extra)
    return summary


def write_summary_json(trace: RunTrace, path, extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(trace_summary(trace, extra), fh, sort_keys=True, indent=2)
        fh.write("\n")
