"""Trajectory checks: energy identity, L^p growth, sandwich, F monotonicity, dissipativity."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import functionals as fn
from .dynamics import SimConfig, contractivity_check, InitSpec

__all__ = [
    "CheckResult",
    "check_energy_identity",
    "check_lp_growth",
    "check_sandwich",
    "check_f_monotone",
    "check_dissipativity",
    "check_contractivity",
    "poincare_constant",
    "resolve_eps",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} (value {self.value:.3e}, tol {self.tol:.1e})"


def poincare_constant(cfg: SimConfig) -> float:
    """Smallest modal frequency: ``lambda`` (wave) or ``lambda^2`` (plate)."""
    d = cfg.domain
    return d.lam if cfg.operator.kind == "wave" else d.lambda2


def resolve_eps(scale: float, cfg: SimConfig, E0: float, mu: float) -> float:
    """``eps = scale * poincare / E0**mu``."""
    return scale * poincare_constant(cfg) / E0**mu


def check_energy_identity(traj, tol: float = 1e-8) -> CheckResult:
    """``max |E(t) - E(0) + D(t)| / E(0)`` over the records."""
    E, D = traj.E, traj.D
    defect = np.abs(E - E[0] + D)
    rel = float(defect.max() / E[0]) if E[0] > 0 else float(defect.max())
    return CheckResult("energy-identity", rel <= tol, rel, tol,
                       {"final_defect": float(defect[-1]), "max_defect": float(defect.max())})


def _growth(traj, column: str, coeff: float, power: float, E0: float, name: str) -> CheckResult:
    vals = traj.column(column)
    if np.all(np.isnan(vals)):
        raise ValueError(f"trajectory has no {column} column")
    t = traj.t
    bound = fn.lp_growth_bound(t, vals[0], E0, coeff, power)
    ratio = vals / bound
    j = int(np.nanargmax(ratio))
    return CheckResult(name, bool(np.nanmax(ratio) <= 1.0), float(ratio[j]), 1.0,
                       {"worst_t": float(t[j]), "power": power, "coeff": coeff})


def check_lp_growth(traj, cfg: SimConfig) -> list[CheckResult]:
    """Recorded ``|y|_p`` (and ``|y|_q`` for double damping) against the growth bound.

    For single damping the ``lp`` column must be recorded at the damping
    exponent; for double damping ``lp`` pairs with ``(a, p)`` and ``lq``
    with ``(b, q)``.
    """
    damp, rec = cfg.damping, cfg.record
    E0 = float(traj.E[0])
    out = []
    if damp.kind == "none":
        raise ValueError("undamped run: no growth bound applies")
    if rec.lp is not None and rec.lp == damp.p:
        out.append(_growth(traj, "lp", damp.a, damp.p, E0, f"lp-growth(p={damp.p:g})"))
    if damp.kind == "double" and damp.b > 0 and rec.lq is not None and rec.lq == damp.q:
        out.append(_growth(traj, "lq", damp.b, damp.q, E0, f"lq-growth(q={damp.q:g})"))
    if not out:
        raise ValueError("record lp at the damping exponent p (or lq at q) to check growth bounds")
    return out


def check_sandwich(traj, cfg: SimConfig, eps: float | None = None, mu: float | None = None) -> CheckResult:
    """Every recorded ``Eeps`` lies inside the equivalence window around ``E``."""
    rec = cfg.record
    eps = rec.eps if eps is None else eps
    mu = rec.mu if mu is None else mu
    Eeps = traj.Eeps
    if eps is None or np.all(np.isnan(Eeps)):
        raise ValueError("trajectory has no perturbed-energy column")
    E = traj.E
    w0 = float(fn.weight_derivative(0.0, rec.weight))
    lo, hi = fn.perturbed_energy_sandwich(E, float(E[0]), eps, mu, w0, poincare_constant(cfg))
    viol = (Eeps < lo) | (Eeps > hi)
    with np.errstate(invalid="ignore", divide="ignore"):
        slack = np.minimum(Eeps - lo, hi - Eeps) / E
    return CheckResult("sandwich", not bool(viol.any()), float(viol.sum()), 0.0,
                       {"violations": int(viol.sum()), "min_relative_slack": float(np.nanmin(slack)),
                        "eps": eps, "mu": mu})


def check_f_monotone(traj, tol: float = 1e-8) -> CheckResult:
    """Largest increase of ``F`` between records, relative to ``F(0)``."""
    F = traj.F
    if np.all(np.isnan(F)):
        raise ValueError("trajectory has no F column")
    inc = float(np.max(np.diff(F), initial=0.0)) / F[0] if F[0] > 0 else 0.0
    excess = float(np.max(F) / F[0] - 1.0) if F[0] > 0 else 0.0
    val = max(inc, excess)
    return CheckResult("F-monotone", val <= tol, val, tol, {"F0": float(F[0])})


def check_dissipativity(traj, tol_rel: float = 1e-12) -> CheckResult:
    """Per-step energy increases beyond ``tol_rel * E(0)`` counted during integration."""
    diag = traj.diagnostics
    if "increase_events" not in diag:
        raise ValueError("trajectory carries no integrator diagnostics (stored runs cannot be checked)")
    E0 = diag["E0"]
    rel = diag["max_increase"] / E0 if E0 > 0 else diag["max_increase"]
    return CheckResult("dissipativity", diag["increase_events"] == 0 and rel <= tol_rel, float(rel), tol_rel,
                       {"increase_events": diag["increase_events"]})


def check_contractivity(cfg: SimConfig, other: InitSpec, tol: float = 1e-10) -> CheckResult:
    """Absolute growth of the difference energy, overall and per step."""
    rep = contractivity_check(cfg, other)
    val = max(rep.max_excess, rep.max_step_increase)
    return CheckResult("contractivity", val <= tol, val, tol,
                       {"E_diff0": rep.E_diff0, "max_excess": rep.max_excess,
                        "max_step_increase": rep.max_step_increase})
