"""Reduced radial simulator of the adversarial dynamics (scratch, not shipped)."""
import math

import numpy as np


def simulate(T, seed, eps_f=0.2, r=0.4, eta1=0.25, eta2=1.0, gamma=0.8, p1=0.8,
             X0=6.26, D0=0.5, variant="v0"):
    rng = np.random.default_rng(seed)
    X, D = X0, D0
    xs = []
    for _ in range(T):
        xs.append(X)
        budget = 2 * eps_f + r
        i1 = rng.random() < p1
        rad = D  # kappa_eg=1, eps_g=0, L1=1
        A = X * X - rad * rad

        def b_acc(y2):
            return eta1 * y2 + D / 2 - budget / D

        y2min = min(1e-6, 1e-2 * X)
        event = None
        if not i1:
            y1 = max(b_acc(y2min), -X)
            y2pick = y2min
            if variant in ("vb0", "vb1", "vc") and y1 <= D / 2:
                # same optimal y1 is achievable with any y2 while b_acc(y2) <= y1
                if b_acc(eta2 * D) <= y1:
                    y2pick = eta2 * D
            event = ("acc", y1, y2pick) if y1 <= D / 2 else ("rej", None, None)
        else:
            if A <= 0:
                y1 = max(b_acc(y2min), -X)
                y2pick = y2min
                if variant == "vb1" and y1 < D / 2:
                    y2big = (y1 - D / 2 + budget / D) / eta1
                    # must stay accuracy-feasible: y2^2 - 2 y1 y2 + X^2 <= rad^2
                    disc = y1 * y1 - (X * X - rad * rad)
                    if disc >= 0:
                        y2acc_hi = y1 + math.sqrt(disc)
                        y2big = min(y2big, y2acc_hi)
                        if y2big >= eta2 * D:
                            y2pick = y2big
                event = ("acc", y1, y2pick) if y1 < D / 2 else ("rej", None, None)
            else:
                sq = math.sqrt(A)
                y1h, y2h = sq, sq
                if b_acc(sq) > y1h:
                    qa, qb, qc = 2 * eta1 - 1.0, D - 2 * budget / D, -A
                    disc = qb * qb - 4 * qa * qc
                    root = None
                    if qa != 0 and disc >= 0:
                        for t in ((-qb - math.sqrt(disc)) / (2 * qa), (-qb + math.sqrt(disc)) / (2 * qa)):
                            if 0 < t <= sq:
                                root = t
                    elif qa == 0 and qb != 0:
                        t = -qc / qb
                        if 0 < t <= sq:
                            root = t
                    if root is None:
                        y1h = math.inf
                    else:
                        y1h, y2h = b_acc(root), root
                if y1h < D / 2 and y1h <= X:
                    event = ("acc", y1h, y2h)
                else:
                    rejected = False
                    # ascent-side reject
                    m = min(X, D / 2 - 1e-7)
                    best_a = None
                    if 2 * eta1 < 1:
                        y2s = math.sqrt(A / (1 - 2 * eta1))
                        y3s = -math.sqrt(A * (1 - 2 * eta1))
                        if y3s >= eta1 * y2s - m:
                            best_a = y3s
                    if best_a is None and m * m - A >= 0:
                        y2a = m + math.sqrt(m * m - A)
                        best_a = eta1 * y2a - m
                    if best_a is not None and best_a > (2 * eps_f + r) / D - D / 2:
                        rejected = True
                    if not rejected and X >= D / 2:
                        # descent-side reject
                        y3d = None
                        if 2 * eta1 < 1:
                            y2s = math.sqrt(A / (1 - 2 * eta1))
                            y3s = -math.sqrt(A * (1 - 2 * eta1))
                            ok_prog = y3s <= eta1 * y2s - D / 2
                            ok_norm = y3s >= eta1 * y2s - X
                            if ok_prog and ok_norm:
                                y3d = y3s
                            elif not ok_prog:
                                disc = (D / 2) ** 2 - A
                                if disc >= 0:
                                    y2d = D / 2 + math.sqrt(disc)
                                    y3d = eta1 * y2d - D / 2
                            else:
                                y2d = X + rad
                                y3d = eta1 * y2d - X
                        else:
                            y2d = X + rad
                            y3d = eta1 * y2d - X
                        if y3d is not None and y3d > (r - 2 * eps_f) / D - D / 2:
                            rejected = True
                    if rejected:
                        event = ("rej", None, None)
                    else:
                        y1g, y2g = sq, sq  # least gain optimum
                        if variant == "vc":
                            y2g = min(max(sq, eta2 * D), X + rad)
                            y1g = y2g / 2 + A / (2 * y2g)
                        event = ("acc", y1g, y2g)
        if event[0] == "acc":
            y1, y2 = event[1], event[2]
            true_dec = D * (y1 - D / 2)
            noise = -2 * eps_f if true_dec >= 0 else 2 * eps_f
            rho = (true_dec + noise + r) / (y2 * D)
            if rho >= eta1 - 1e-12:
                X = math.sqrt(max(X * X + D * D - 2 * D * y1, 0))
                D = D / gamma if y2 >= eta2 * D else D * gamma
            else:
                D = D * gamma
        else:
            D = D * gamma
    return np.array(xs)


if __name__ == "__main__":
    import sys

    T = int(sys.argv[1]) if len(sys.argv) > 1 else 250
    variant = sys.argv[2] if len(sys.argv) > 2 else "v0"
    vals = []
    for seed in range(8):
        xs = simulate(T, seed, variant=variant)
        vals.append(float(xs[-50:].mean()))
        print(seed, "last50:", round(vals[-1], 3), "min:", round(float(xs.min()), 4))
    print("mean:", round(float(np.mean(vals)), 3))
