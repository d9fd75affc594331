"""Trust-region subproblem steps and a small dense symmetric eigensolver.

Steps only need to achieve a fixed fraction of the Cauchy (respectively
Cauchy-or-eigen) model decrease; no exact subproblem solve is attempted.
All functions here are pure.
"""

from __future__ import annotations

import numpy as np

from .core import QuadraticModel, model_decrease

Array = np.ndarray


def jacobi_eigh(H: Array, tol: float = 1e-13, max_sweeps: int = 60) -> tuple[Array, Array]:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns).  Deterministic
    sweep order, so results are bit-reproducible for identical input.
    """
    A = np.array(H, dtype=float, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {A.shape}")
    if n and np.max(np.abs(A - A.T)) > 1e-12 * (1.0 + np.max(np.abs(A))):
        raise ValueError("jacobi_eigh requires a symmetric matrix")
    V = np.eye(n)
    if n < 2:
        return np.diag(A).copy(), V
    scale = np.max(np.abs(A)) or 1.0
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= tol * scale:
                    continue
                off = max(off, abs(apq))
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0.0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if off <= tol * scale:
            break
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def min_eigenpair(H: Array) -> tuple[float, Array]:
    """Smallest eigenvalue and a unit eigenvector of a symmetric matrix."""
    w, V = jacobi_eigh(np.asarray(H, dtype=float))
    v = V[:, 0]
    return float(w[0]), v / np.linalg.norm(v)


def cauchy_step(model: QuadraticModel, delta: float) -> Array:
    """Step to the Cauchy point: minimize the model along -g inside the ball.

    Guarantees a decrease of at least 0.5 |g| min{|g|/|H|, delta}.
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    g = model.g
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return np.zeros_like(g)
    gHg = float(g @ (model.H @ g))
    if gHg > 0.0:
        tau = min(1.0, gnorm**3 / (delta * gHg))
    else:
        tau = 1.0
    return (-tau * delta / gnorm) * g


def eigen_step(
    model: QuadraticModel, delta: float, eigpair: tuple[float, Array] | None = None
) -> Array:
    """Step of length delta along the most negative curvature direction.

    The sign is chosen so the linear term does not fight the step; when
    lambda_min < 0 the decrease is at least 0.5 |lambda_min| delta^2.
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    lam, v = eigpair if eigpair is not None else min_eigenpair(model.H)
    sign = -1.0 if float(model.g @ v) > 0.0 else 1.0
    return sign * delta * v


def second_order_step(
    model: QuadraticModel, delta: float, eigpair: tuple[float, Array] | None = None
) -> Array:
    """Better of the Cauchy and eigen steps; ties break toward Cauchy."""
    s_c = cauchy_step(model, delta)
    s_e = eigen_step(model, delta, eigpair=eigpair)
    if model_decrease(model, s_c) >= model_decrease(model, s_e):
        return s_c
    return s_e
