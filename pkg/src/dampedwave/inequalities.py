"""Numerical checks of the differential/integral inequality and the interpolation toolkit."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .functionals import gn_delta, weight_derivative, weight_phi
from .spectral import BoxDomain, inverse_transform, lp_norm, sobolev_seminorms

__all__ = [
    "InequalityParams",
    "lemma_bound",
    "verify_lemma",
    "verify_integral_inequality",
    "LemmaReport",
    "IntegralReport",
    "random_smooth_coefficients",
    "estimate_gn_constant",
    "GNReport",
    "holder_exponent",
    "holder_interpolation_check",
    "HolderReport",
]


@dataclass(frozen=True)
class InequalityParams:
    """Hypothesis ``E' <= -A phi'(t) E^(1+beta)`` with weight ``phi`` and ``E(0) = E0``."""

    A: float
    beta: float = 0.0
    weight: str = "linear"
    E0: float = 1.0

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError(f"A must be positive, got {self.A}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.weight not in ("linear", "logshift"):
            raise ValueError(f"unknown weight {self.weight!r}")
        if not self.E0 >= 0:
            raise ValueError("E0 must be nonnegative")


def lemma_bound(params: InequalityParams, t):
    """Closed-form majorant: ``E0 exp(-A phi)`` or ``E0 (1 + A beta E0^beta phi)^(-1/beta)``."""
    phi = np.asarray(weight_phi(np.asarray(t, dtype=float), params.weight))
    A, b, E0 = params.A, params.beta, params.E0
    if b == 0:
        out = E0 * np.exp(-A * phi)
    else:
        out = E0 * np.exp(-np.log1p(A * b * E0**b * phi) / b)
    return float(out) if out.ndim == 0 else out


def _samples(samples):
    if hasattr(samples, "t") and hasattr(samples, "E"):
        t, E = samples.t, samples.E
    else:
        arr = np.asarray(samples, dtype=float)
        if arr.ndim == 2 and arr.shape[1] == 2:
            t, E = arr[:, 0], arr[:, 1]
        else:
            t, E = arr
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    if t.shape != E.shape or t.ndim != 1 or len(t) < 2:
        raise ValueError("samples must be matching 1-D sequences of (t, E) with at least two points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    return t, E


@dataclass
class LemmaReport:
    hypothesis_ok: bool
    hypothesis_margin: float
    hypothesis_worst_t: float
    conclusion_ok: bool
    conclusion_margin: float
    conclusion_worst_t: float
    n: int

    @property
    def passed(self) -> bool:
        return self.hypothesis_ok and self.conclusion_ok


def verify_lemma(samples, params: InequalityParams, hyp_rtol: float = 1e-3,
                 tol: float = 1e-8) -> LemmaReport:
    """Check the hypothesis on difference quotients and the conclusion at every sample.

    Hypothesis: ``(E[i+1]-E[i])/(t[i+1]-t[i]) <= -A h(t[i+1]) (1 - hyp_rtol)``
    with ``h = phi' E^(1+beta)``, the right endpoint being where the
    (nonincreasing) ``h`` is smallest on the interval. Margins are the largest
    violations relative to ``A h``; an uptick in ``E`` always fails.
    Conclusion margin: ``max(E/bound - 1)``.
    """
    t, E = _samples(samples)
    A, b = params.A, params.beta
    q = np.diff(E) / np.diff(t)
    h = A * weight_derivative(t[1:], params.weight) * np.abs(E[1:]) ** (1.0 + b)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(h > 0, (q + h) / h, np.where(q > 0, np.inf, 0.0))
    i = int(np.argmax(rel))
    hyp_margin = float(rel[i])
    hyp_ok = bool(hyp_margin <= hyp_rtol and np.all(q <= 0))

    bound = lemma_bound(params, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, E / bound - 1.0, np.where(E > 0, np.inf, 0.0))
    j = int(np.argmax(ratio))
    return LemmaReport(hyp_ok, hyp_margin, float(t[i + 1]), bool(ratio[j] <= tol),
                       float(ratio[j]), float(t[j]), len(t))


@dataclass
class IntegralReport:
    ok: bool
    margin: float
    worst_t: float
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def verify_integral_inequality(samples, params: InequalityParams, tol: float = 1e-6) -> IntegralReport:
    """``int_S^T phi' E^(1+beta) dt <= E(S)/A`` at every sample ``S``.

    The integral is truncated at the last sample ``T``; the neglected tail is
    nonnegative, so truncation can only make the inequality easier.
    Margin: ``max (lhs - rhs)/rhs`` (``0`` where both sides vanish).
    """
    t, E = _samples(samples)
    f = weight_derivative(t, params.weight) * np.abs(E) ** (1.0 + params.beta)
    cum = cumulative_trapezoid(f, t, initial=0.0)
    lhs = cum[-1] - cum
    rhs = E / params.A
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(rhs > 0, (lhs - rhs) / rhs, np.where(lhs > 0, np.inf, 0.0))
    i = int(np.argmax(rel))
    return IntegralReport(bool(rel[i] <= tol), float(rel[i]), float(t[i]), lhs, rhs)


# --------------------------------------------------------------------------
# interpolation inequalities


def random_smooth_coefficients(d: BoxDomain, rng: np.random.Generator, cutoff: int = 8) -> np.ndarray:
    """Normal coefficients on the lowest ``cutoff`` modes per axis, damped by ``1/(1+eig)``."""
    if cutoff > min(d.resolution):
        raise ValueError("cutoff exceeds grid resolution")
    c = np.zeros(d.resolution)
    sl = tuple(slice(0, cutoff) for _ in range(d.dims))
    c[sl] = rng.standard_normal(c[sl].shape) / (1.0 + d.eig[sl])
    return c


@dataclass
class GNReport:
    C_star: float
    delta: float
    p: float
    N: int
    ratios: np.ndarray = field(repr=False)
    skipped: int = 0

    @property
    def quantiles(self) -> dict:
        qs = np.quantile(self.ratios, [0.0, 0.25, 0.5, 0.75, 1.0])
        return dict(zip(("min", "q25", "median", "q75", "max"), qs.tolist()))


def gn_ratio(coeffs: np.ndarray, d: BoxDomain, p: float, delta: float) -> float:
    """``|v|_p / (||v||_{H^2}^delta |v|_2^(1-delta))`` with ``||v||_{H^2}^2 = |v|_2^2 + |Lap v|_2^2``."""
    l2sq = sobolev_seminorms(coeffs, d, 0)
    h2 = np.sqrt(l2sq + sobolev_seminorms(coeffs, d, 2))
    lp = lp_norm(inverse_transform(coeffs, d), d, p)
    return lp / (h2**delta * np.sqrt(l2sq) ** (1.0 - delta))


def estimate_gn_constant(d: BoxDomain, p: float, n_fields: int = 100, seed: int = 0,
                         cutoff: int = 8, ensemble=None) -> GNReport:
    """Empirical constant ``max |v|_p/(||v||_{H^2}^delta |v|_2^(1-delta))`` over an ensemble.

    The ensemble is ``n_fields`` seeded random smooth fields unless an explicit
    iterable of coefficient arrays is passed. Zero fields are skipped.
    """
    N = d.dims
    delta = float(gn_delta(p, N))
    if ensemble is None:
        if n_fields < 100:
            raise ValueError("ensemble size must be at least 100")
        rng = np.random.default_rng(seed)
        ensemble = (random_smooth_coefficients(d, rng, cutoff) for _ in range(n_fields))
    ratios = []
    skipped = 0
    for c in ensemble:
        if not np.any(c):
            skipped += 1
            continue
        ratios.append(gn_ratio(c, d, p, delta))
    if not ratios:
        raise ValueError("ensemble contains no nonzero field")
    ratios = np.array(ratios)
    return GNReport(float(ratios.max()), delta, float(p), N, ratios, skipped)


def holder_exponent(p: float, q: float) -> float:
    """``tau = 2(q-p)/(p(q-2))`` so that ``1/p = tau/2 + (1-tau)/q``."""
    return 2.0 * (q - p) / (p * (q - 2.0))


@dataclass
class HolderReport:
    lhs: float
    rhs: float
    tau: float
    ok: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def holder_interpolation_check(field, d: BoxDomain, p: float, q: float, tol: float = 1e-12) -> HolderReport:
    """``|y|_p <= |y|_2^tau |y|_q^(1-tau)`` on grid values ``field``."""
    if not 2 < p < q:
        raise ValueError(f"need 2 < p < q, got p={p}, q={q}")
    tau = holder_exponent(p, q)
    lhs = lp_norm(field, d, p)
    rhs = lp_norm(field, d, 2) ** tau * lp_norm(field, d, q) ** (1.0 - tau)
    return HolderReport(lhs, rhs, tau, bool(lhs <= rhs * (1.0 + tol)))
