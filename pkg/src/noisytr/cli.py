"""Command-line front end.

Commands: solve, adversarial, sweep-r, profiles, verify-bounds, fd-check.
Configs are INI files (key = value under sections); NOISYTR_SEED overrides
the configured seed.  Every CSV/JSON output embeds the resolved config and
seed; CSV numbers carry 17 significant digits so reruns are byte-identical.
Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import plots
from .adversarial import AdversaryParams
from .bench import (
    ExperimentSpec,
    ProfileData,
    data_profile,
    monte_carlo_tail,
    performance_profile,
    r_sweep,
    run_adversarial_experiment,
    run_sweep_instance,
    convergence_test,
    stabilization_level,
)
from .core import (
    ConfigurationError,
    TrParams,
    builtin_objective,
    standard_start,
)
from .oracles import (
    STREAM_FIRST,
    STREAM_SECOND,
    STREAM_ZEROTH,
    FirstOracle,
    SecondOracle,
    ZerothOracle,
    fd_gradient,
    fd_hessian,
    optimal_sigma,
    substream,
)
from .solver import run_tr1, run_tr2, trace_csv_lines, trace_summary
from .theory import constants_first, epsilon_floor

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _read_config(path: str) -> configparser.ConfigParser:
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    cfg = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cfg.read(path)
    return cfg


def _resolved(cfg: configparser.ConfigParser) -> dict:
    return {section: dict(cfg.items(section)) for section in cfg.sections()}


def _require(cfg, section: str, key: str) -> str:
    if not cfg.has_option(section, key):
        raise ConfigurationError(f"missing required key [{section}] {key}")
    return cfg.get(section, key)


def _seed_from(cfg, args) -> int:
    if os.environ.get("NOISYTR_SEED"):
        return int(os.environ["NOISYTR_SEED"])
    if getattr(args, "seed", None) is not None:
        return args.seed
    if cfg is not None and cfg.has_option("run", "seed"):
        return cfg.getint("run", "seed")
    raise ConfigurationError("no seed given (config [run] seed, --seed, or NOISYTR_SEED)")


def _build_objective(cfg):
    name = _require(cfg, "problem", "objective")
    dim = cfg.getint("problem", "dim", fallback=None)
    kwargs = {}
    if name == "scaled_sphere":
        kwargs["L1"] = cfg.getfloat("problem", "l1", fallback=1.0)
    if name == "indefinite_quadratic":
        diag = _require(cfg, "problem", "diag")
        kwargs["A"] = np.diag([float(v) for v in diag.split(",")])
    return builtin_objective(name, dim, **kwargs)


def _build_x0(cfg, obj):
    raw = cfg.get("run", "x0", fallback="standard").strip()
    if raw == "standard":
        return standard_start(obj)
    vals = [float(v) for v in raw.split(",")]
    if len(vals) == 1:
        return vals[0] * np.ones(obj.dim)
    if len(vals) != obj.dim:
        raise ConfigurationError(f"x0 has {len(vals)} entries, objective dim is {obj.dim}")
    return np.asarray(vals)


def _build_oracles(cfg, obj, seed: int):
    zmode = cfg.get("oracles", "zeroth", fallback="exact")
    eps_f = cfg.getfloat("oracles", "eps_f", fallback=0.0)
    a = cfg.getfloat("oracles", "a", fallback=0.0)
    zeroth = ZerothOracle(
        obj, mode=zmode, eps_f=eps_f, a=a,
        rng=substream(seed, STREAM_ZEROTH) if zmode != "exact" else None,
    )
    fmode = cfg.get("oracles", "first", fallback="exact")
    fkw = dict(
        mode=fmode,
        eps_g=cfg.getfloat("oracles", "eps_g", fallback=0.0),
        kappa_eg=cfg.getfloat("oracles", "kappa_eg", fallback=0.0),
        p1=cfg.getfloat("oracles", "p1", fallback=1.0),
        outlier_scale=cfg.getfloat("oracles", "outlier_scale", fallback=10.0),
    )
    if fmode == "corrupted":
        fkw["rng"] = substream(seed, STREAM_FIRST)
    if fmode == "finite_difference":
        fkw["sigma"] = cfg.getfloat("oracles", "sigma_g")
        fkw["zeroth"] = zeroth
    first = FirstOracle(obj, **fkw)
    smode = cfg.get("oracles", "second", fallback="exact")
    skw = dict(
        mode=smode,
        eps_h=cfg.getfloat("oracles", "eps_h", fallback=0.0),
        kappa_eh=cfg.getfloat("oracles", "kappa_eh", fallback=0.0),
        p2=cfg.getfloat("oracles", "p2", fallback=1.0),
        outlier_scale=cfg.getfloat("oracles", "outlier_scale", fallback=10.0),
    )
    if smode == "corrupted":
        skw["rng"] = substream(seed, STREAM_SECOND)
    if smode == "finite_difference":
        skw["sigma"] = cfg.getfloat("oracles", "sigma_h")
        skw["zeroth"] = zeroth
    second = SecondOracle(obj, **skw)
    return zeroth, first, second


def _build_params(cfg) -> TrParams:
    sec = "trust_region"
    return TrParams(
        eta1=cfg.getfloat(sec, "eta1", fallback=0.25),
        eta2=cfg.getfloat(sec, "eta2", fallback=1.0),
        gamma=cfg.getfloat(sec, "gamma", fallback=0.8),
        r=cfg.getfloat(sec, "r", fallback=0.0),
        delta0=cfg.getfloat(sec, "delta0", fallback=0.5),
        kappa_fcd=cfg.getfloat(sec, "kappa_fcd", fallback=2.0),
        kappa_fod=cfg.getfloat(sec, "kappa_fod", fallback=1.0),
        p1=cfg.getfloat(sec, "p1", fallback=cfg.getfloat("oracles", "p1", fallback=1.0)),
        p2=cfg.getfloat(sec, "p2", fallback=cfg.getfloat("oracles", "p2", fallback=1.0)),
        budget=cfg.getint(sec, "budget", fallback=250),
    )


def _write_csv(path, header_cols, rows, meta: dict) -> None:
    lines = [f"# {json.dumps(meta, sort_keys=True, separators=(',', ':'))}"]
    lines.append(",".join(header_cols))
    lines.extend(",".join(str(v) for v in row) for row in rows)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    cfg = _read_config(args.config)
    seed = _seed_from(cfg, args)
    obj = _build_objective(cfg)
    x0 = _build_x0(cfg, obj)
    zeroth, first, second = _build_oracles(cfg, obj, seed)
    params = _build_params(cfg)
    variant = cfg.get("trust_region", "variant", fallback="first")
    if variant == "first":
        trace = run_tr1(obj, zeroth, first, None, params, x0, seed=seed)
    elif variant == "second":
        trace = run_tr2(obj, zeroth, first, second, params, x0, seed=seed)
    else:
        raise ConfigurationError(f"unknown variant {variant!r}; use first or second")
    out = _outdir(args)
    meta = {"config": _resolved(cfg), "seed": seed}
    csv_path = os.path.join(out, "trace.csv")
    with open(csv_path, "w") as fh:
        fh.write(f"# {json.dumps(meta, sort_keys=True, separators=(',', ':'))}\n")
        fh.write("\n".join(trace_csv_lines(trace)) + "\n")
    _write_json(os.path.join(out, "summary.json"), trace_summary(trace, extra=meta))
    plots.plot_run_series(
        os.path.join(out, "trace.png"),
        trace.grad_norms(),
        trace.deltas(),
        title=f"{obj.name} ({trace.variant})",
    )
    return EXIT_OK


def cmd_adversarial(args) -> int:
    for nm in ("eps_f", "eps_g", "r"):
        if getattr(args, nm) < 0:
            raise ConfigurationError(f"--{nm.replace('_', '-')} must be >= 0")
    seed = args.seed if args.seed is not None else int(os.environ.get("NOISYTR_SEED", "1"))
    trace = run_adversarial_experiment(args.eps_f, args.eps_g, args.r, seed, iters=args.iters)
    consts = constants_first(L1=1.0, kappa_bhm=0.0, kappa_eg=1.0, kappa_fcd=2.0, eta1=0.25, eta2=1.0)
    floor = epsilon_floor(
        "first_bounded", eps_f=args.eps_f, eps_g=args.eps_g, r=args.r,
        p1=0.8, gamma=0.8, constants=consts,
    )
    out = _outdir(args)
    meta = {
        "eps_f": args.eps_f, "eps_g": args.eps_g, "r": args.r,
        "seed": seed, "iters": args.iters, "epsilon_floor": floor,
    }
    rows = [
        (rec.k, _fmt(rec.true_grad_norm), _fmt(rec.delta)) for rec in trace.records
    ]
    _write_csv(os.path.join(out, "adversarial.csv"), ("k", "grad_norm", "delta"), rows, meta)
    _write_json(
        os.path.join(out, "adversarial.json"),
        dict(meta, stabilization=stabilization_level(trace), final_phi=trace.final_phi),
    )
    plots.plot_run_series(
        os.path.join(out, "adversarial.png"),
        trace.grad_norms(),
        trace.deltas(),
        title=f"adversarial eps_f={args.eps_f} eps_g={args.eps_g} r={args.r}",
        floor=floor,
    )
    return EXIT_OK


def _spec_from_config(cfg, seed: int) -> ExperimentSpec:
    sec = "sweep"
    kwargs = dict(master_seed=seed)
    if cfg.has_option(sec, "noise"):
        kwargs["noise_kind"] = cfg.get(sec, "noise")
    for key, conv in (
        ("eps_f", cfg.getfloat), ("a", cfg.getfloat), ("replications", cfg.getint),
        ("budget", cfg.getint), ("delta0", cfg.getfloat),
    ):
        if cfg.has_option(sec, key):
            kwargs[key] = conv(sec, key)
    if cfg.has_option(sec, "r_values"):
        kwargs["r_values"] = tuple(float(v) for v in cfg.get(sec, "r_values").split(","))
    if cfg.has_option(sec, "taus"):
        kwargs["taus"] = tuple(float(v) for v in cfg.get(sec, "taus").split(","))
    return ExperimentSpec(**kwargs)


def cmd_sweep_r(args) -> int:
    cfg = _read_config(args.config)
    seed = _seed_from(cfg, args)
    out = _outdir(args)
    meta = {"config": _resolved(cfg), "seed": seed}
    mode = cfg.get("sweep", "noise", fallback="uniform_bounded")
    if mode == "adversarial":
        eps_f = cfg.getfloat("sweep", "eps_f", fallback=0.2)
        eps_g = cfg.getfloat("sweep", "eps_g", fallback=4.0)
        r_values = [float(v) for v in _require(cfg, "sweep", "r_values").split(",")]
        n_seeds = cfg.getint("sweep", "replications", fallback=5)
        iters = cfg.getint("sweep", "iters", fallback=250)
        rows = []
        for r in r_values:
            levels = []
            for rep in range(n_seeds):
                trace = run_adversarial_experiment(eps_f, eps_g, r, seed + rep, iters=iters)
                levels.append(stabilization_level(trace))
            rows.append((_fmt(r), _fmt(float(np.mean(levels)))))
        _write_csv(os.path.join(out, "sweep_r.csv"), ("r", "stabilization"), rows, meta)
        _write_json(
            os.path.join(out, "sweep_r.json"),
            dict(meta, levels={row[0]: float(row[1]) for row in rows}),
        )
        xs = [float(r) for r, _ in rows]
        ys = [float(s) for _, s in rows]
        plots.plot_profiles(
            os.path.join(out, "sweep_r.png"),
            xs,
            {"stabilization": np.array(ys) / max(max(ys), 1e-12)},
            xlabel="r",
            title="adversarial stabilization vs r (normalized)",
        )
        return EXIT_OK
    spec = _spec_from_config(cfg, seed)
    jobs = max(1, args.jobs)
    cells = [
        (p, rep, r)
        for p in range(len(spec.objectives))
        for rep in range(spec.replications)
        for r in spec.r_values
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda c: run_sweep_instance(spec, *c), cells))
    else:
        results = [run_sweep_instance(spec, *c) for c in cells]
    rows = []
    profile = {tau: ProfileData() for tau in spec.taus}
    for (p, rep, r), (instance, dim, values) in zip(cells, results):
        label = f"r={r:g}"
        for tau in spec.taus:
            evals = convergence_test(values, 100.0, 0.0, tau)
            profile[tau].add(instance, label, dim, evals)
            rows.append((instance, dim, label, _fmt(tau), "" if evals is None else evals))
    _write_csv(
        os.path.join(out, "sweep_evals.csv"),
        ("problem", "dim", "solver", "tau", "evals"),
        rows,
        meta,
    )
    _write_json(
        os.path.join(out, "sweep_summary.json"),
        dict(
            meta,
            solved={
                _fmt(tau): {s: profile[tau].solved_count(s) for s in profile[tau].solvers}
                for tau in spec.taus
            },
        ),
    )
    return EXIT_OK


def _profile_data_from_csv(path: str) -> dict[float, ProfileData]:
    if not os.path.exists(path):
        raise ConfigurationError(f"profile data file not found: {path}")
    out: dict[float, ProfileData] = {}
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    header = lines[0].split(",")
    expected = ["problem", "dim", "solver", "tau", "evals"]
    if header != expected:
        raise ConfigurationError(f"profile CSV must have columns {expected}, got {header}")
    for ln in lines[1:]:
        prob, dim, solver, tau, evals = ln.split(",")
        tau = float(tau)
        out.setdefault(tau, ProfileData()).add(
            prob, solver, int(dim), None if evals == "" else int(evals)
        )
    return out


def cmd_profiles(args) -> int:
    cfg = _read_config(args.config)
    seed = _seed_from(cfg, args)
    data_path = _require(cfg, "profiles", "data")
    if not os.path.isabs(data_path):
        data_path = os.path.join(os.path.dirname(os.path.abspath(args.config)), data_path)
    by_tau = _profile_data_from_csv(data_path)
    alpha_max = cfg.getfloat("profiles", "alpha_max", fallback=64.0)
    kappa_max = cfg.getfloat("profiles", "kappa_max", fallback=200.0)
    alpha_grid = np.geomspace(1.0, alpha_max, 65)
    kappa_grid = np.linspace(0.0, kappa_max, 101)
    out = _outdir(args)
    meta = {"config": _resolved(cfg), "seed": seed, "data": os.path.basename(data_path)}
    for tau, data in sorted(by_tau.items()):
        perf = performance_profile(data, alpha_grid)
        dat = data_profile(data, kappa_grid)
        tag = f"tau{tau:g}".replace("-", "m").replace(".", "p")
        rows = []
        for s in sorted(perf):
            rows.extend(
                ("performance", s, _fmt(a), _fmt(v)) for a, v in zip(alpha_grid, perf[s])
            )
        for s in sorted(dat):
            rows.extend(("data", s, _fmt(k), _fmt(v)) for k, v in zip(kappa_grid, dat[s]))
        _write_csv(
            os.path.join(out, f"profiles_{tag}.csv"),
            ("kind", "solver", "x", "y"),
            rows,
            dict(meta, tau=tau),
        )
        plots.plot_profiles(
            os.path.join(out, f"performance_{tag}.png"),
            alpha_grid, perf, xlabel=r"$\alpha$", title=f"performance profile, tau={tau:g}",
            logx=True,
        )
        plots.plot_profiles(
            os.path.join(out, f"data_{tag}.png"),
            kappa_grid, dat, xlabel=r"$\kappa$", title=f"data profile, tau={tau:g}",
        )
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    cfg = _read_config(args.config)
    seed = _seed_from(cfg, args)
    sec = "verify"
    check = monte_carlo_tail(
        epsilon=cfg.getfloat(sec, "epsilon", fallback=None),
        n_runs=cfg.getint(sec, "n_runs", fallback=200),
        master_seed=seed,
        p1=cfg.getfloat(sec, "p1", fallback=0.8),
        kappa_eg=cfg.getfloat(sec, "kappa_eg", fallback=1.0),
        eps_f=cfg.getfloat(sec, "eps_f", fallback=0.0),
        eps_g=cfg.getfloat(sec, "eps_g", fallback=0.0),
        r=cfg.getfloat(sec, "r", fallback=0.0),
        dim=cfg.getint(sec, "dim", fallback=20),
    )
    out = _outdir(args)
    report = {
        "config": _resolved(cfg),
        "seed": seed,
        "epsilon": check.epsilon,
        "floor": check.floor,
        "horizon": check.horizon,
        "n_runs": check.n_runs,
        "empirical": check.empirical,
        "theoretical_bound": check.bound,
        "margin": check.margin,
        "passed": check.passed,
    }
    _write_json(os.path.join(out, "verify_bounds.json"), report)
    return EXIT_OK if check.passed else EXIT_NUMERIC


def cmd_fd_check(args) -> int:
    cfg = _read_config(args.config)
    seed = _seed_from(cfg, args)
    sec = "fd_check"
    dim = cfg.getint(sec, "dim", fallback=20)
    l1 = cfg.getfloat(sec, "l1", fallback=1.0)
    eps_f = cfg.getfloat(sec, "eps_f", fallback=0.02)
    n_sigmas = cfg.getint(sec, "n_sigmas", fallback=9)
    obj = builtin_objective("scaled_sphere", dim, L1=l1)
    x = _build_x0(cfg, obj) if cfg.has_option("run", "x0") else 0.7 * np.ones(dim)
    sigma_star_g, _ = optimal_sigma("grad_fd", eps_f, obj.L1, dim)
    grid = np.geomspace(sigma_star_g / 10.0, sigma_star_g * 10.0, n_sigmas)
    rows = []
    ok = True
    meas_g, bnd_g = [], []
    for j, sigma in enumerate(grid):
        z = ZerothOracle(
            obj, mode="bounded_uniform", eps_f=eps_f, rng=substream(seed, j, STREAM_ZEROTH)
        )
        g_err = float(np.linalg.norm(fd_gradient(z, x, sigma) - obj.grad(x)))
        g_bound = math.sqrt(dim) * (obj.L1 * sigma / 2.0 + eps_f / sigma)
        h_err = float(np.linalg.norm(fd_hessian(z, x, sigma) - obj.hess(x), 2))
        h_bound = (math.sqrt(2) + 1) * dim * obj.L2 * sigma / 3.0 + 4.0 * dim * eps_f / sigma**2
        good = g_err <= g_bound and h_err <= h_bound
        ok = ok and good
        meas_g.append(g_err)
        bnd_g.append(g_bound)
        rows.append(
            (_fmt(sigma), _fmt(g_err), _fmt(g_bound), _fmt(h_err), _fmt(h_bound), int(good))
        )
    out = _outdir(args)
    meta = {"config": _resolved(cfg), "seed": seed, "passed": ok}
    _write_csv(
        os.path.join(out, "fd_check.csv"),
        ("sigma", "grad_err", "grad_bound", "hess_err", "hess_bound", "ok"),
        rows,
        meta,
    )
    _write_json(os.path.join(out, "fd_check.json"), meta)
    plots.plot_fd_errors(
        os.path.join(out, "fd_check.png"), grid, meas_g, bnd_g, title="forward-difference gradient"
    )
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisytr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")

    common(sub.add_parser("solve", help="run one trust-region solve"))
    adv = sub.add_parser("adversarial", help="worst-case noise run on the sphere")
    adv.add_argument("--eps-f", dest="eps_f", type=float, required=True)
    adv.add_argument("--eps-g", dest="eps_g", type=float, required=True)
    adv.add_argument("--r", type=float, required=True)
    adv.add_argument("--iters", type=int, default=250)
    common(adv, config_required=False)
    common(sub.add_parser("sweep-r", help="sweep the acceptance relaxation r"))
    common(sub.add_parser("profiles", help="performance/data profiles from an evals table"))
    common(sub.add_parser("verify-bounds", help="Monte-Carlo check of the tail bound"))
    common(sub.add_parser("fd-check", help="finite-difference error-bound check"))
    return parser


_DISPATCH = {
    "solve": cmd_solve,
    "adversarial": cmd_adversarial,
    "sweep-r": cmd_sweep_r,
    "profiles": cmd_profiles,
    "verify-bounds": cmd_verify_bounds,
    "fd-check": cmd_fd_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, configparser.Error) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
