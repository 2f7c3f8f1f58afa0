"""Decay-rate fitting, regime classification and anchored bound checks."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .functionals import ExponentReport, _frac, _op_kind, bound_curve, mu_exponents

__all__ = [
    "FitResult",
    "BoundCheck",
    "RegimeRecord",
    "fit_power_rate",
    "fit_log_rate",
    "check_bound",
    "check_all_bounds",
    "classify_regime",
    "default_window",
]

MIN_FIT_POINTS = 10


def _series(records):
    if hasattr(records, "t") and hasattr(records, "E"):
        t, E = records.t, records.E
    else:
        t = [r.t for r in records]
        E = [r.E for r in records]
    return np.asarray(t, dtype=float), np.asarray(E, dtype=float)


def default_window(t) -> tuple[float, float]:
    """Last decade of the record: ``[t_max/10, t_max]``."""
    t_max = float(np.max(t))
    return t_max / 10.0, t_max


@dataclass
class FitResult:
    model: str
    exponent: float
    K: float
    t_lo: float
    t_hi: float
    residual: float
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


def _fit(records, window, model: str) -> FitResult:
    t, E = _series(records)
    lo, hi = default_window(t) if window is None else window
    if not lo < hi:
        raise ValueError(f"empty fit window [{lo}, {hi}]")
    m = (t >= lo) & (t <= hi)
    if m.sum() < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} records in [{lo:g}, {hi:g}], got {int(m.sum())}")
    if np.any(E[m] <= 0) or not np.all(np.isfinite(E[m])):
        raise ValueError("energy must be positive and finite inside the fit window")
    x = np.log1p(t[m]) if model == "power" else np.log(np.log(2.0 + t[m]))
    yv = np.log(E[m])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, yv, rcond=None)
    res = yv - (slope * x + icpt)
    return FitResult(model, float(-slope), float(np.exp(icpt)), float(t[m].min()), float(t[m].max()),
                     float(np.sqrt(np.mean(res**2))), int(m.sum()))


def fit_power_rate(records, window=None) -> FitResult:
    """Least squares of ``log E`` on ``log(1+t)``; ``exponent = -slope``."""
    return _fit(records, window, "power")


def fit_log_rate(records, window=None) -> FitResult:
    """Least squares of ``log E`` on ``log log(2+t)``."""
    return _fit(records, window, "log")


@dataclass
class RegimeRecord:
    p: Fraction
    N: int
    q: Fraction | None
    operator: str
    regime: str
    strong_admissible: bool
    weak_log_applicable: bool
    mu_pN_branch: str
    mu_p_branch: str
    p_ge_N_over_4: bool
    ncst_holds: bool | None = None
    dominant_damping: str | None = None
    mu_pqN_branch: str | None = None


def _branch(first, second, names) -> str:
    if first > second:
        return names[0]
    if first < second:
        return names[1]
    return "tie"


def classify_regime(p, N: int, q=None, operator="wave") -> RegimeRecord:
    """Which theorems apply and which branch of each ``max`` is active."""
    rep = mu_exponents(p, N, q, operator)
    P = rep.p
    op = _op_kind(operator)
    order = 4 if op == "wave" else 6
    dim_term = Fraction(N - order) / ((order) * (P - 1))
    out = RegimeRecord(
        p=P, N=int(N), q=rep.q, operator=op, regime=rep.regime,
        strong_admissible=rep.strong_admissible, weak_log_applicable=rep.weak_log_applicable,
        mu_pN_branch=_branch(Fraction(1), dim_term, ("unit", "dimensional")),
        mu_p_branch=_branch((P - 2) / 2, 1 / (P - 1), ("half", "reciprocal")),
        p_ge_N_over_4=P >= Fraction(N, 4),
    )
    if rep.q is not None:
        Q = rep.q
        out.ncst_holds = (Q - 2) * (N - 4) <= 4 * (P - 2) * (Q - 1)
        out.dominant_damping = rep.dominant_damping
        out.mu_pqN_branch = _branch((P - 2) / 2, (Q - 2) * (N - 4) / (8 * (Q - 1)), ("p", "q"))
    return out


@dataclass
class BoundCheck:
    kind: str
    theorem: str
    exponent: float
    t_fit: float
    K: float
    slack: float
    n_checked: int
    max_ratio: float
    worst_t: float
    min_ratio: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _applicable(report: ExponentReport, kind: str) -> tuple[str, Fraction]:
    if kind == "power":
        if report.predicted_power_exponent is None:
            raise ValueError(
                f"no power-law decay theorem applies to p={report.p}, q={report.q}, N={report.N}, "
                f"operator={report.operator} (regime {report.regime}, strong admissible "
                f"{report.strong_admissible})")
        return report.power_theorem, report.predicted_power_exponent
    if kind == "log":
        if not report.weak_log_applicable:
            raise ValueError(f"logarithmic bound requires the supercritical regime; got {report.regime}")
        return "weak-log", report.predicted_log_exponent
    raise ValueError(f"unknown bound kind {kind!r}")


def _check_run_matches(report: ExponentReport, cfg) -> None:
    damp = cfg.damping
    if damp.kind == "none":
        raise ValueError("undamped run: no decay theorem applies")
    if cfg.domain.dims != report.N:
        raise ValueError(f"report is for N={report.N} but the run has N={cfg.domain.dims}")
    if cfg.operator.kind != report.operator:
        raise ValueError(f"report is for {report.operator} but the run uses {cfg.operator.kind}")
    if _frac(damp.p) != report.p:
        raise ValueError(f"report is for p={report.p} but the run has p={damp.p}")
    run_q = _frac(damp.q) if damp.kind == "double" else None
    if run_q != report.q:
        raise ValueError(f"report is for q={report.q} but the run has q={run_q}")


def check_bound(records, exponent_report: ExponentReport, kind: str, t_fit: float,
                slack: float = 0.02, config=None, t_end: float | None = None) -> BoundCheck:
    """Anchor ``K`` so the bound equals ``E(t_fit)``, then test every later record.

    Refuses (``ValueError``) when the report's regime does not admit a
    theorem of the requested kind, or when ``config`` is given and does not
    match the report's ``(p, q, N, operator)``.
    """
    theorem, e = _applicable(exponent_report, kind)
    if config is not None:
        _check_run_matches(exponent_report, config)
    t, E = _series(records)
    if t.max() <= t_fit:
        raise ValueError(f"records end at t={t.max():g}, before t_fit={t_fit:g}")
    i0 = int(np.searchsorted(t, t_fit))
    m = t >= t[i0]
    if t_end is not None:
        m &= t <= t_end
    e = float(e)
    K = E[i0] / bound_curve(t[i0], kind, 1.0, e)
    ratio = E[m] / bound_curve(t[m], kind, K, e)
    j = int(np.argmax(ratio))
    return BoundCheck(kind, theorem, e, float(t[i0]), float(K), slack, int(m.sum()),
                      float(ratio[j]), float(t[m][j]), float(ratio.min()),
                      bool(ratio[j] <= 1.0 + slack))


def check_all_bounds(records, exponent_report: ExponentReport, t_fit: float, slack: float = 0.02,
                     config=None, t_end: float | None = None) -> list[BoundCheck]:
    """Every applicable bound family, each checked separately."""
    if config is not None:
        _check_run_matches(exponent_report, config)
    out = []
    for kind in ("power", "log"):
        try:
            _applicable(exponent_report, kind)
        except ValueError:
            continue
        out.append(check_bound(records, exponent_report, kind, t_fit, slack, None, t_end))
    return out
