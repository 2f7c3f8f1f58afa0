"""Acceptance criteria as runnable functions.

Each ``criterion_k()`` returns a :class:`CriterionResult` with the pass flag,
the measured values and the tolerance it was held to. The runs use the
bundled configs in ``dampedwave/configs``; expensive runs are cached per
process so criteria that share a run (2, 7, 10 and 3, 4, 7) integrate once.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from . import checks
from .config import bundled_config, load_config, prepared_run
from .dynamics import DampingSpec, InitSpec, OperatorSpec, RecordSpec, SimConfig, simulate, simulate_ode
from .functionals import mu_exponents
from .inequalities import (InequalityParams, estimate_gn_constant, holder_interpolation_check, lemma_bound,
                           random_smooth_coefficients, verify_integral_inequality, verify_lemma)
from .rates import check_bound, classify_regime, fit_power_rate
from .spectral import inverse_transform, make_box_domain

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}: {self.summary}"


@lru_cache(maxsize=None)
def _bundled_run(name: str):
    rc = load_config(bundled_config(name))
    sim = prepared_run(rc)
    return rc, sim, simulate(sim)


# --------------------------------------------------------------------------


def criterion_1() -> CriterionResult:
    vals, ok = {}, True
    for p, expected in ((4, 1.0), (3, 2.0), (6, 0.5)):
        cfg = load_config(bundled_config(f"ode-p{p}"))
        tr = simulate_ode(cfg.omega, cfg.c, cfg.p, cfg.u0, cfg.u1, cfg.dt, cfg.t_max, cfg.per_decade)
        fit = fit_power_rate(tr, cfg.analysis.fit_window)
        rel = abs(fit.exponent / expected - 1.0)
        vals[f"p={p}"] = {"exponent": fit.exponent, "expected": expected, "rel_err": rel}
        ok &= rel <= 0.15
    s = ", ".join(f"{k}: e={v['exponent']:.4f} (expect {v['expected']:g})" for k, v in vals.items())
    return CriterionResult(1, "ODE decay exponents within 15%", ok, s, vals)


def criterion_2() -> CriterionResult:
    rc, sim, tr = _bundled_run("wave1d-p4")
    a = rc.analysis
    rep = mu_exponents(sim.damping.p, sim.domain.dims)
    bc = check_bound(tr, rep, "power", a.t_fit, a.slack, config=sim)
    return CriterionResult(2, "1-D p=4 power bound, exponent 1, slack 2%", bc.passed,
                           f"exponent {bc.exponent:g}, max E/bound {bc.max_ratio:.4f} at t={bc.worst_t:.0f}",
                           bc.as_dict())


def _cube():
    return _bundled_run("cube-p7")


def criterion_3() -> CriterionResult:
    rc, sim, tr = _cube()
    a = rc.analysis
    rep = mu_exponents(sim.damping.p, sim.domain.dims)
    bc = check_bound(tr, rep, "power", a.t_fit, a.slack, config=sim, t_end=a.t_end)
    fit = fit_power_rate(tr, (a.t_fit, a.t_end))
    F = checks.check_f_monotone(tr)
    ok = bc.passed and rep.power_theorem == "strong" and rep.predicted_power_exponent == Fraction(2, 5)
    vals = {**bc.as_dict(), "fitted_exponent": fit.exponent, "F_monotone": F.value}
    return CriterionResult(3, "3-D p=7 strong bound, exponent 0.4 on [10, 200]", ok,
                           f"max E/bound {bc.max_ratio:.4f}, fitted exponent {fit.exponent:.3f}, "
                           f"F increase {F.value:.1e}", vals)


def criterion_4() -> CriterionResult:
    rc, sim, tr = _cube()
    a = rc.analysis
    rep = mu_exponents(sim.damping.p, sim.domain.dims)
    bc = check_bound(tr, rep, "log", a.t_fit, a.slack, config=sim, t_end=a.t_end)
    ok = bc.passed and rep.weak_log_applicable and rep.predicted_log_exponent == Fraction(2, 5)
    return CriterionResult(4, "3-D p=7 log bound, exponent 0.4", ok,
                           f"max E/bound {bc.max_ratio:.4f}", bc.as_dict())


def criterion_5() -> CriterionResult:
    rc = load_config(bundled_config("identity-p4"))
    defects = {}
    for dt in (4e-3, 2e-3, 1e-3):
        tr = simulate(rc.sim.with_(dt=dt))
        defects[dt] = abs(tr.E[-1] - tr.E[0] + tr.D[-1])
    d = list(defects.values())
    orders = [math.log2(d[0] / d[1]), math.log2(d[1] / d[2])]
    ok = min(orders) >= 1.8
    return CriterionResult(5, "energy identity defect order >= 1.8", ok,
                           "orders " + ", ".join(f"{o:.3f}" for o in orders)
                           + "; defects " + ", ".join(f"{x:.2e}" for x in d),
                           {"defects": {str(k): v for k, v in defects.items()}, "orders": orders})


def dissipativity_suite(n_runs: int = 50, seed: int = 0) -> list[tuple[SimConfig, InitSpec]]:
    """Seeded sweep over dimension, operator and damping kind."""
    rng = np.random.default_rng(seed)
    shapes = {1: (64,), 2: (24, 24), 3: (12, 12, 12)}
    out = []
    for i in range(n_runs):
        N = 1 + i % 3
        op = ("wave", "hinged_plate")[(i // 3) % 2]
        kind = ("single", "double")[(i // 6) % 2]
        lengths = tuple(np.round(rng.uniform(1.0, 4.0, N), 3))
        p = float(np.round(rng.uniform(2.5, 7.0), 2))
        if kind == "single":
            damp = DampingSpec.single(float(np.round(rng.uniform(0.2, 3.0), 2)), p)
        else:
            q = float(np.round(p + rng.uniform(0.5, 4.0), 2))
            damp = DampingSpec.double(float(np.round(rng.uniform(0.2, 3.0), 2)), p,
                                      float(np.round(rng.uniform(0.2, 3.0), 2)), q,
                                      ("newton", "split")[(i // 12) % 2])
        d = make_box_domain(lengths, shapes[N])
        wmax = float(OperatorSpec(op).frequencies(d).max())
        dt = float(min(2e-2, 2.0 / wmax))
        energy = float(np.round(10.0 ** rng.uniform(-1, 1), 4))
        cfg = SimConfig(d, OperatorSpec(op), damp, InitSpec(seed=i, cutoff=4, energy=energy),
                        dt=dt, t_max=200 * dt, record=RecordSpec(per_decade=5))
        out.append((cfg, InitSpec(seed=1000 + i, cutoff=4, energy=energy)))
    return out


def criterion_6() -> CriterionResult:
    worst_rel, worst_c, events, fails = -math.inf, -math.inf, 0, []
    runs = dissipativity_suite()
    for i, (cfg, other) in enumerate(runs):
        dis = checks.check_dissipativity(simulate(cfg))
        con = checks.check_contractivity(cfg, other)
        worst_rel = max(worst_rel, dis.value)
        worst_c = max(worst_c, con.value)
        events += dis.detail["increase_events"]
        if not (dis.passed and con.passed):
            fails.append(i)
    ok = not fails
    return CriterionResult(6, f"dissipativity and contractivity over {len(runs)} runs", ok,
                           f"increase events {events}, max step dE/E0 {worst_rel:.2e}, "
                           f"max contractivity excess {worst_c:.2e}, failing runs {fails}",
                           {"increase_events": events, "max_rel_increase": worst_rel,
                            "max_contractivity_excess": worst_c, "failing_runs": fails})


def criterion_7() -> CriterionResult:
    results = []
    for name in ("wave1d-p4", "cube-p7", "double2d-p3q5"):
        _, sim, tr = _bundled_run(name)
        results.extend((name, r) for r in checks.check_lp_growth(tr, sim))
    ok = all(r.passed for _, r in results)
    s = ", ".join(f"{n} {r.name} max ratio {r.value:.3f}" for n, r in results)
    return CriterionResult(7, "L^p growth bounds", ok, s, {f"{n}:{r.name}": r.value for n, r in results})


def criterion_8() -> CriterionResult:
    r = mu_exponents(3, 12)
    c1 = r.predicted_power_exponent == 2 and r.mu_pN == Fraction(1, 2)
    branches = []
    for N in range(5, 21):
        p = Fraction(2 * N, N - 4)
        e = mu_exponents(p, N).predicted_power_exponent
        want = Fraction(N + 4, N - 4) if N >= 12 else Fraction(N - 4, 4)
        branches.append(e == want)
    c2 = all(branches) and Fraction(12 + 4, 12 - 4) == Fraction(12 - 4, 4) == 2
    reductions = []
    for p in (Fraction(5, 2), 3, 4, 7):
        for N in range(1, 15):
            r2 = mu_exponents(p, N, q=p)
            reductions.append(r2.mu_pqN == r2.mu_pN)
    c3 = all(reductions)
    ok = c1 and c2 and c3
    return CriterionResult(8, "exact exponent special cases", ok,
                           f"N=12,p=3 exponent {r.predicted_power_exponent}; critical-line branches "
                           f"{sum(branches)}/{len(branches)}; q=p reductions {sum(reductions)}/{len(reductions)}",
                           {"N12_p3": str(r.predicted_power_exponent), "branches_ok": c2, "reductions_ok": c3})


def _equality_trace(params: InequalityParams, t: np.ndarray) -> np.ndarray:
    from .functionals import weight_derivative

    A, b = params.A, params.beta

    def rhs(s, E):
        return -A * weight_derivative(s, params.weight) * np.abs(E) ** (1.0 + b)

    sol = solve_ivp(rhs, (t[0], t[-1]), [params.E0], method="DOP853", t_eval=t, rtol=1e-13, atol=1e-300)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[0]


def criterion_9() -> CriterionResult:
    t = np.linspace(0.0, 10.0, 1000)
    vals, ok = {}, True
    for beta in (0.0, 1.0):
        for weight in ("linear", "logshift"):
            prm = InequalityParams(A=1.0, beta=beta, weight=weight, E0=2.0)
            E = _equality_trace(prm, t)
            dev = float(np.max(np.abs(E / lemma_bound(prm, t) - 1.0)))
            lem = verify_lemma((t, E), prm, tol=1e-8)
            integ = verify_integral_inequality((t, E), prm)
            good = dev <= 1e-8 and lem.conclusion_ok and integ.ok
            ok &= good
            vals[f"beta={beta:g},{weight}"] = {"max_rel_dev": dev, "integral_margin": integ.margin}
    s = "; ".join(f"{k}: dev {v['max_rel_dev']:.1e}, integral margin {v['integral_margin']:.2f}"
                  for k, v in vals.items())
    return CriterionResult(9, "differential inequality oracle", ok, s, vals)


def criterion_10() -> CriterionResult:
    rc, sim, tr = _bundled_run("wave1d-p4")
    mu_p = float(mu_exponents(sim.damping.p, sim.domain.dims).mu_p)
    E0 = float(tr.E[0])
    want = 0.1 * sim.domain.lam / E0**mu_p
    ok_eps = math.isclose(sim.record.eps, want, rel_tol=1e-12) and sim.record.mu == mu_p
    r = checks.check_sandwich(tr, sim)
    return CriterionResult(10, "perturbed-energy sandwich along the 1-D run", r.passed and ok_eps,
                           f"{r.detail['violations']} violations over {len(tr)} records, "
                           f"eps={sim.record.eps:.3g}, min slack {r.detail['min_relative_slack']:.3f}",
                           r.detail)


def criterion_11() -> CriterionResult:
    d = make_box_domain([np.pi, 2.0], [32, 32])
    rng = np.random.default_rng(11)
    fails = {}
    for p, q in ((3, 5), (4, 8), (2.5, 7)):
        bad = 0
        for _ in range(1000):
            f = inverse_transform(random_smooth_coefficients(d, rng, cutoff=8), d)
            bad += not holder_interpolation_check(f, d, p, q, tol=1e-12).ok
        fails[f"({p},{q})"] = bad
    g16 = estimate_gn_constant(make_box_domain([1.0] * 3, [16] * 3), 4, n_fields=200, seed=0)
    g32 = estimate_gn_constant(make_box_domain([1.0] * 3, [32] * 3), 4, n_fields=200, seed=0)
    rel = abs(g32.C_star / g16.C_star - 1.0)
    ok = not any(fails.values()) and rel < 0.2
    return CriterionResult(11, "Holder interpolation and GN stability", ok,
                           f"Holder failures {fails}; C* 16^3={g16.C_star:.5f} 32^3={g32.C_star:.5f} "
                           f"(rel diff {rel:.2e})",
                           {"holder_failures": fails, "C16": g16.C_star, "C32": g32.C_star, "rel": rel})


def criterion_12() -> CriterionResult:
    reg = classify_regime(3, 5, q=8)
    rep = mu_exponents(3, 5, q=8)
    ok = (reg.ncst_holds is True and (8 - 2) * (5 - 4) == 6 and 4 * (3 - 2) * (8 - 1) == 28
          and rep.mu_pqN == Fraction(1, 2) and rep.predicted_power_exponent == 2
          and reg.dominant_damping == "p" and reg.mu_pqN_branch == "p")
    return CriterionResult(12, "two-damping regime dichotomy", ok,
                           f"condition holds={reg.ncst_holds}, mu_pqN={rep.mu_pqN}, exponent "
                           f"{rep.predicted_power_exponent}, dominant={reg.dominant_damping}",
                           {"mu_pqN": str(rep.mu_pqN), "exponent": str(rep.predicted_power_exponent)})


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 13)}


def run_criterion(k: int) -> CriterionResult:
    if k not in CRITERIA:
        raise ValueError(f"no criterion {k}; choose 1..12")
    t0 = time.perf_counter()
    res = CRITERIA[k]()
    res.seconds = time.perf_counter() - t0
    return res


def run_all(numbers=None):
    for k in numbers or sorted(CRITERIA):
        yield run_criterion(k)
