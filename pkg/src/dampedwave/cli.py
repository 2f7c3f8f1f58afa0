"""Command line interface: ``dampedwave <subcommand> ...`` (or ``python -m dampedwave``).

Exit status: 0 success, 1 a check or criterion failed, 2 usage or
configuration error, 3 runtime abort (non-finite state).
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, checks
from .config import (ConfigError, OdeConfig, RunConfig, bundled_config, config_digest, load_config,
                     prepared_run)
from .dynamics import InitSpec, SimulationError, simulate, simulate_ode
from .functionals import mu_exponents
from .inequalities import InequalityParams, estimate_gn_constant, lemma_bound, verify_integral_inequality, verify_lemma
from .io import RunManifest, read_trajectory, to_jsonable, write_json, write_trajectory
from .rates import check_bound, fit_log_rate, fit_power_rate
from .spectral import make_box_domain

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _emit(obj) -> None:
    print(json.dumps(to_jsonable(obj), indent=2, sort_keys=True))


def _load(arg: str):
    path = Path(arg)
    if not path.exists() and not arg.endswith(".json"):
        path = bundled_config(arg)
    return load_config(path)


def _with_seed(rc: RunConfig, seed):
    if seed is None:
        return rc
    init = rc.sim.init
    rc.sim = rc.sim.with_(init=InitSpec(init.kind, seed, init.cutoff, init.energy, init.modes))
    rc.raw = {**rc.raw, "init": {**rc.raw.get("init", {}), "seed": seed}}
    return rc


def _fit(records, model, window):
    return (fit_power_rate if model == "power" else fit_log_rate)(records, window)


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    rc = _load(args.config)
    if isinstance(rc, OdeConfig):
        raise UsageError("this is an ode config; use the 'ode' subcommand")
    rc = _with_seed(rc, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(config_digest(rc.raw), rc.seed, __version__, _now())
    sim = prepared_run(rc)
    tr = simulate(sim)
    man.outputs["trajectory"] = str(write_trajectory(tr, out / "trajectory.csv"))
    status = EXIT_OK
    summary = {"records": len(tr), "E0": tr.E[0], "E_final": tr.E[-1], **tr.diagnostics}
    damp = sim.damping
    rep = None
    if damp.kind != "none" and not (damp.kind == "double" and sim.operator.kind != "wave"):
        rep = mu_exponents(damp.p, sim.domain.dims, damp.q if damp.kind == "double" else None, sim.operator.kind)
        man.outputs["exponents"] = str(write_json(rep, out / "exponents.json"))
    a = rc.analysis
    if a.fit_model:
        fit = _fit(tr, a.fit_model, a.fit_window)
        man.outputs["fit"] = str(write_json(fit, out / "fit.json"))
        summary["fitted_exponent"] = fit.exponent
    if a.bound_kinds:
        if rep is None:
            raise UsageError("analysis.bounds needs a damped run with a known exponent report")
        bcs = [check_bound(tr, rep, k, a.t_fit, a.slack, config=sim, t_end=a.t_end) for k in a.bound_kinds]
        man.outputs["bounds"] = str(write_json(bcs, out / "bounds.json"))
        summary["bounds"] = {b.kind: {"max_ratio": b.max_ratio, "passed": b.passed} for b in bcs}
        if not all(b.passed for b in bcs):
            status = EXIT_FAIL
    man.finished = _now()
    man.exit_status = status
    man.write(out / "manifest.json")
    _emit(summary)
    return status


_ODE_FLAGS = ("omega", "c", "p", "u0", "u1", "dt", "t_max", "per_decade")


def cmd_ode(args) -> int:
    given = {k: getattr(args, k) for k in _ODE_FLAGS if getattr(args, k) is not None}
    if args.config:
        if given:
            raise UsageError(f"--{next(iter(given)).replace('_', '-')} cannot be combined with a config")
        cfg = _load(args.config)
        if not isinstance(cfg, OdeConfig):
            raise UsageError("config has no ode section; use 'simulate'")
    else:
        cfg = OdeConfig(**given)
        cfg.raw = {"ode": {k: getattr(cfg, k) for k in _ODE_FLAGS}}
    window = tuple(args.window) if args.window else cfg.analysis.fit_window
    model = args.model or cfg.analysis.fit_model or "power"
    man = RunManifest(config_digest(cfg.raw), None, __version__, _now())
    tr = simulate_ode(cfg.omega, cfg.c, cfg.p, cfg.u0, cfg.u1, cfg.dt, cfg.t_max, cfg.per_decade)
    report = {"omega": cfg.omega, "c": cfg.c, "p": cfg.p, "records": len(tr), "E_final": float(tr.E[-1])}
    if cfg.c > 0:
        report["expected_exponent"] = 2.0 / (cfg.p - 2.0)
    try:
        fit = _fit(tr, model, window)
        report["fit"] = to_jsonable(fit)
    except ValueError as exc:
        report["fit_error"] = str(exc)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "ode.csv"
        with path.open("w") as fh:
            fh.write("t,u,du,E\n")
            for row in tr:
                fh.write(",".join("%.17g" % x for x in row) + "\n")
        man.outputs["trajectory"] = str(path)
        man.outputs["fit"] = str(write_json(report, out / "fit.json"))
        man.finished = _now()
        man.write(out / "manifest.json")
    _emit(report)
    return EXIT_OK


def cmd_exponents(args) -> int:
    rep = mu_exponents(args.p, args.N, args.q, args.operator)
    if args.out:
        write_json(rep, args.out)
    _emit(rep)
    return EXIT_OK


def cmd_fit(args) -> int:
    tr = read_trajectory(args.trajectory)
    fit = _fit(tr, args.model, tuple(args.window) if args.window else None)
    if args.out:
        write_json(fit, args.out)
    _emit(fit)
    return EXIT_OK


_FRESH_ONLY = {"dissipativity", "contractivity"}
_ALL_CHECKS = ("energy", "lp", "sandwich", "F", "dissipativity", "contractivity")


def cmd_verify(args) -> int:
    rc = _load(args.config)
    if isinstance(rc, OdeConfig):
        raise UsageError("verify needs a PDE config")
    rc = _with_seed(rc, args.seed)
    sim = prepared_run(rc)
    wanted = args.checks.split(",") if args.checks else None
    for w in wanted or ():
        if w not in _ALL_CHECKS:
            raise UsageError(f"unknown check {w!r}; choose from {', '.join(_ALL_CHECKS)}")
    if args.trajectory:
        if wanted and _FRESH_ONLY & set(wanted):
            raise UsageError(f"checks {sorted(_FRESH_ONLY & set(wanted))} need a fresh run, not --trajectory")
        tr = read_trajectory(args.trajectory)
    else:
        tr = simulate(sim)
    rec = sim.record
    auto = ["energy"]
    if sim.damping.kind != "none" and (rec.lp == sim.damping.p or rec.lq == sim.damping.q):
        auto.append("lp")
    if rec.eps is not None:
        auto.append("sandwich")
    if rec.F:
        auto.append("F")
    if not args.trajectory:
        auto.append("dissipativity")
    names = wanted or auto
    results = []
    for name in names:
        if name == "energy":
            results.append(checks.check_energy_identity(tr, args.energy_tol))
        elif name == "lp":
            results.extend(checks.check_lp_growth(tr, sim))
        elif name == "sandwich":
            results.append(checks.check_sandwich(tr, sim))
        elif name == "F":
            results.append(checks.check_f_monotone(tr))
        elif name == "dissipativity":
            results.append(checks.check_dissipativity(tr))
        elif name == "contractivity":
            init = sim.init
            other = InitSpec(init.kind, args.other_seed, init.cutoff, init.energy, init.modes)
            results.append(checks.check_contractivity(sim, other))
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_lemma(args) -> int:
    if (args.t is None) == (args.trace is None):
        raise UsageError("give exactly one of --t (evaluate the bound) or --trace (verify a trace)")
    prm = InequalityParams(A=args.A, beta=args.beta, weight=args.phi, E0=args.e0)
    if args.t is not None:
        vals = lemma_bound(prm, np.array(args.t))
        vals = np.atleast_1d(vals)
        for t, v in zip(args.t, vals):
            print("%.17g" % v if len(args.t) == 1 else f"{t:.17g} {v:.17g}")
        return EXIT_OK
    if args.trace.endswith(".csv"):
        tr = read_trajectory(args.trace)
        samples = (tr.t, tr.E)
    else:
        arr = np.loadtxt(args.trace, ndmin=2)
        samples = (arr[:, 0], arr[:, 1])
    if args.e0_from_trace:
        prm = InequalityParams(A=args.A, beta=args.beta, weight=args.phi, E0=float(samples[1][0]))
    lem = verify_lemma(samples, prm, hyp_rtol=args.hyp_rtol, tol=args.tol)
    integ = verify_integral_inequality(samples, prm)
    _emit({"lemma": lem, "passed": lem.passed, "integral": {"ok": integ.ok, "margin": integ.margin,
                                                              "worst_t": integ.worst_t}})
    return EXIT_OK if lem.passed and integ.ok else EXIT_FAIL


def cmd_gn(args) -> int:
    lengths = args.lengths or [1.0] * args.N
    if len(lengths) != args.N:
        raise UsageError("--lengths must have N entries")
    d = make_box_domain(lengths, [args.n] * args.N)
    rep = estimate_gn_constant(d, args.p, n_fields=args.fields, seed=args.seed, cutoff=args.cutoff)
    _emit({"C_star": rep.C_star, "delta": rep.delta, "p": rep.p, "N": rep.N, "skipped": rep.skipped,
           "quantiles": rep.quantiles, "resolution": args.n})
    return EXIT_OK


def cmd_accept(args) -> int:
    from .acceptance import run_all

    nums = args.criterion or None
    ok = True
    for res in run_all(nums):
        print(res.line(), flush=True)
        ok &= res.passed
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dampedwave", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    s = sub.add_parser("simulate", aliases=["run"], help="PDE run from a JSON config")
    s.add_argument("config", help="config path or bundled config name")
    s.add_argument("--out", default="out", help="output directory (default: out)")
    s.add_argument("--seed", type=int, help="override init.seed")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("ode", help="reference scalar ODE with rate fit")
    s.add_argument("config", nargs="?", help="ode config path or bundled name (e.g. ode-p4)")
    for k in _ODE_FLAGS:
        s.add_argument(f"--{k.replace('_', '-')}", dest=k, type=int if k == "per_decade" else float)
    s.add_argument("--model", choices=["power", "log"])
    s.add_argument("--window", type=float, nargs=2, metavar=("T_LO", "T_HI"))
    s.add_argument("--out", help="write ode.csv, fit.json and manifest.json here")
    s.set_defaults(func=cmd_ode)

    s = sub.add_parser("exponents", help="decay exponents for (p, N[, q])")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--q", type=float)
    s.add_argument("--operator", choices=["wave", "hinged_plate"], default="wave")
    s.add_argument("--out")
    s.set_defaults(func=cmd_exponents)

    s = sub.add_parser("fit", help="fit a decay rate to a stored trajectory")
    s.add_argument("trajectory")
    s.add_argument("--model", choices=["power", "log"], default="power")
    s.add_argument("--window", type=float, nargs=2, metavar=("T_LO", "T_HI"))
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("verify", help="identity, growth, sandwich, F and contractivity checks")
    s.add_argument("config")
    s.add_argument("--trajectory", help="check this stored CSV instead of a fresh run")
    s.add_argument("--checks", help=f"comma list from {','.join(_ALL_CHECKS)} (default: all applicable)")
    s.add_argument("--seed", type=int)
    s.add_argument("--other-seed", type=int, default=1, help="second trajectory for contractivity")
    s.add_argument("--energy-tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("lemma", help="evaluate the decay bound or verify a trace")
    s.add_argument("--A", type=float, required=True)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--phi", choices=["linear", "logshift"], default="linear")
    s.add_argument("--e0", type=float, default=1.0)
    s.add_argument("--t", type=float, nargs="+")
    s.add_argument("--trace", help="CSV trajectory or two-column text file of (t, E)")
    s.add_argument("--e0-from-trace", action="store_true", help="take E0 from the first sample")
    s.add_argument("--hyp-rtol", type=float, default=1e-3)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_lemma)

    s = sub.add_parser("gn", help="ensemble estimate of the interpolation constant")
    s.add_argument("--N", type=int, default=3)
    s.add_argument("--n", type=int, default=16, help="points per axis")
    s.add_argument("--p", type=float, default=4.0)
    s.add_argument("--lengths", type=float, nargs="+")
    s.add_argument("--fields", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cutoff", type=int, default=8)
    s.set_defaults(func=cmd_gn)

    s = sub.add_parser("accept", help="run acceptance criteria")
    s.add_argument("--criterion", type=int, nargs="+", choices=range(1, 13), metavar="K")
    s.set_defaults(func=cmd_accept)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        ap.error(str(exc))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SimulationError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
