"""Energies, exponent formulas and theoretical bound curves.

Exponent arithmetic is done in :class:`fractions.Fraction` so that special
cases (``p = 3, N = 12`` and friends) come out exact; floats are converted
through their decimal repr, so ``2.5`` becomes ``5/2``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .spectral import BoxDomain, inner_product

__all__ = [
    "TrajectoryRecord",
    "Trajectory",
    "ExponentReport",
    "frequencies_squared",
    "energy",
    "energy_physical",
    "f_functional",
    "perturbed_energy",
    "perturbed_energy_sandwich",
    "weight_phi",
    "weight_derivative",
    "mu_exponents",
    "gn_delta",
    "lp_growth_bound",
    "bound_curve",
]

OPERATORS = ("wave", "hinged_plate")


def _op_kind(op) -> str:
    kind = getattr(op, "kind", op)
    if kind not in OPERATORS:
        raise ValueError(f"unknown operator {kind!r}")
    return kind


def frequencies_squared(d: BoxDomain, op="wave") -> np.ndarray:
    """Per-mode ``omega_k**2``: ``eig`` for the wave operator, ``eig**2`` for the plate."""
    return d.eig if _op_kind(op) == "wave" else d.eig2


# --------------------------------------------------------------------------
# trajectory records


@dataclass
class TrajectoryRecord:
    t: float
    E: float
    D: float
    F: float | None = None
    lp: float | None = None
    lq: float | None = None
    Eeps: float | None = None
    Eprime: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


class Trajectory(Sequence):
    """Ordered list of :class:`TrajectoryRecord` with column access.

    ``traj.E`` returns a float array (``nan`` where a value is absent).
    ``diagnostics`` carries integrator bookkeeping such as the largest
    per-step energy increase.
    """

    COLUMNS = ("t", "E", "D", "F", "lp", "lq", "Eeps", "Eprime")

    def __init__(self, records=(), diagnostics=None, meta=None):
        self.records: list[TrajectoryRecord] = list(records)
        self.diagnostics: dict = dict(diagnostics or {})
        self.meta: dict = dict(meta or {})

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trajectory(self.records[i], self.diagnostics, self.meta)
        return self.records[i]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TrajectoryRecord]:
        return iter(self.records)

    def append(self, rec: TrajectoryRecord) -> None:
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS:
            raise KeyError(name)
        vals = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    def __getattr__(self, name):
        if name in Trajectory.COLUMNS:
            return self.column(name)
        raise AttributeError(name)


# --------------------------------------------------------------------------
# energies


def energy(state, d: BoxDomain, op="wave") -> float:
    """``E = 1/2 int |y_t|^2 + |grad y|^2`` (plate: ``|Lap y|^2``), evaluated spectrally."""
    w2 = frequencies_squared(d, op)
    y, v = np.asarray(state.y), np.asarray(state.v)
    return 0.5 * float(np.sum(v * v) + np.sum(w2 * y * y)) * d.mode_weight


def energy_physical(y_grid, v_grid, d: BoxDomain) -> float:
    """Wave energy from grid samples with one-sided difference gradients.

    Independent of the sine basis: the missing boundary nodes are zero-padded
    and each axis contributes ``sum ((y[j+1]-y[j])/h)^2 * prod(h)`` over the
    ``n+1`` cell edges.
    """
    y = np.asarray(y_grid, dtype=float).reshape(d.resolution)
    v = np.asarray(v_grid, dtype=float).reshape(d.resolution)
    grad2 = 0.0
    for axis, h in enumerate(d.spacing):
        pad = [(0, 0)] * d.dims
        pad[axis] = (1, 1)
        dy = np.diff(np.pad(y, pad), axis=axis) / h
        grad2 += float(np.sum(dy * dy))
    return 0.5 * (float(np.sum(v * v)) + grad2) * d.cell_volume


def f_functional(state, d: BoxDomain, op="wave") -> float:
    """Higher-order energy.

    wave:  ``int |grad y_t|^2 + |Lap y|^2``;
    plate: ``1/2 int |grad y_t|^2 + |grad Lap y|^2``.
    """
    y, v = np.asarray(state.y), np.asarray(state.v)
    if _op_kind(op) == "wave":
        return float(np.sum(d.eig * v * v) + np.sum(d.eig2 * y * y)) * d.mode_weight
    return 0.5 * float(np.sum(d.eig * v * v) + np.sum(d.eig2 * d.eig * y * y)) * d.mode_weight


def weight_phi(t, weight: str = "linear"):
    """Built-in weights: ``linear`` (phi = t) and ``logshift`` (phi = log(2+t) - log 2)."""
    if weight == "linear":
        return t
    if weight == "logshift":
        return np.log1p(np.asarray(t, dtype=float) / 2.0)
    raise ValueError(f"unknown weight {weight!r}")


def weight_derivative(t, weight: str = "linear"):
    if weight == "linear":
        return np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0
    if weight == "logshift":
        return 1.0 / (2.0 + np.asarray(t, dtype=float))
    raise ValueError(f"unknown weight {weight!r}")


def perturbed_energy(state, eps: float, mu: float, weight_derivative: float, d: BoxDomain,
                     op="wave", E: float | None = None) -> float:
    """``E + eps * phi' * E**mu * <y, y_t>``; ``weight_derivative=1`` is the unweighted form."""
    if E is None:
        E = energy(state, d, op)
    return E + eps * weight_derivative * E**mu * inner_product(state.y, state.v, d)


def perturbed_energy_sandwich(E, E0: float, eps: float, mu: float, weight0: float,
                              poincare: float):
    """Equivalence window ``(1 -+ eps*phi'(0)*E0**mu/poincare) * E``.

    ``poincare`` is the smallest modal frequency: ``lambda`` for the wave
    operator, ``lambda**2`` for the hinged plate.
    """
    r = eps * weight0 * E0**mu / poincare
    E = np.asarray(E, dtype=float)
    return (1.0 - r) * E, (1.0 + r) * E


# --------------------------------------------------------------------------
# exponents


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"exponent must be finite, got {x}")
    return Fraction(repr(x))


@dataclass
class ExponentReport:
    p: Fraction
    N: int
    q: Fraction | None = None
    operator: str = "wave"
    mu_p: Fraction = Fraction(0)
    mu_pN: Fraction = Fraction(0)
    mu_pq: Fraction | None = None
    mu_pqN: Fraction | None = None
    delta_gn: Fraction | None = None
    regime: str = ""
    strong_admissible: bool = False
    weak_log_applicable: bool = False
    power_theorem: str | None = None
    predicted_power_exponent: Fraction | None = None
    predicted_log_exponent: Fraction | None = None
    dominant_damping: str | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, Fraction):
                out[k] = float(v)
                out[k + "_exact"] = str(v)
            else:
                out[k] = v
        return out


def _regime(p: Fraction, N: int, order: int) -> str:
    # order 2: wave (H^1 embedding, compare (N-2)p with 2N); order 4: plate
    lhs = (N - order) * p
    if lhs < 2 * N:
        return "subcritical"
    if lhs == 2 * N:
        return "critical"
    return "supercritical"


def mu_exponents(p, N: int, q=None, operator="wave") -> ExponentReport:
    """Every applicable decay exponent for damping power ``p`` (and ``q``) in dimension ``N``."""
    op = _op_kind(operator)
    p = _frac(p)
    N = int(N)
    if p <= 2:
        raise ValueError(f"p must exceed 2, got {p}")
    if N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if q is not None:
        q = _frac(q)
        if q < p:
            raise ValueError(f"q must be >= p, got p={p}, q={q}")
        if op != "wave":
            raise ValueError("two-damping exponents are only defined for the wave operator")

    half = (p - 2) / 2
    rep = ExponentReport(p=p, N=N, q=q, operator=op)
    rep.mu_p = max(half, 1 / (p - 1))
    if op == "wave":
        rep.mu_pN = half * max(Fraction(1), Fraction(N - 4) / (4 * (p - 1)))
        rep.regime = _regime(p, N, 2)
        top = q if q is not None else p
        rep.strong_admissible = top * (N - 4) <= 2 * N
        if (N - 4) * p <= 2 * N:
            rep.delta_gn = gn_delta(p, N)
    else:
        rep.mu_pN = half * max(Fraction(1), Fraction(N - 6) / (6 * (p - 1)))
        rep.regime = _regime(p, N, 4)
        rep.strong_admissible = p * (N - 6) <= 2 * N

    rep.weak_log_applicable = rep.regime == "supercritical"
    rep.predicted_log_exponent = 1 / rep.mu_p

    if q is None:
        if rep.regime != "supercritical":
            rep.power_theorem = "classical"
            rep.predicted_power_exponent = 2 / (p - 2)
        elif rep.strong_admissible:
            rep.power_theorem = "strong"
            rep.predicted_power_exponent = 1 / rep.mu_pN
        return rep

    rep.mu_pq = max(half, 1 / (q - 1))
    rep.mu_pqN = max(half, (q - 2) * (N - 4) / (8 * (q - 1)))
    rep.predicted_log_exponent = 1 / rep.mu_pq
    rep.dominant_damping = "p" if (q - 2) * (N - 4) <= 4 * (p - 2) * (q - 1) else "q"
    q_regime = _regime(q, N, 2)
    if q_regime != "supercritical":
        rep.power_theorem = "classical"
        rep.predicted_power_exponent = 2 / (p - 2)
        rep.notes.append("q-damping subcritical: classical rate 2/(p-2)")
    elif rep.strong_admissible:
        rep.power_theorem = "strong"
        rep.predicted_power_exponent = 1 / rep.mu_pqN
    return rep


def gn_delta(p, N: int) -> Fraction:
    """Interpolation exponent ``N(p-2)/(4p)`` for ``|v|_p <= C ||v||_{H^2}^d |v|_2^(1-d)``."""
    p = _frac(p)
    if p <= 2:
        raise ValueError(f"p must exceed 2, got {p}")
    if (N - 4) * p > 2 * N:
        raise ValueError(f"H^2 does not embed in L^{p} for N={N}: need (N-4)p <= 2N")
    return N * (p - 2) / (4 * p)


def lp_growth_bound(t, y0_p_norm: float, E0: float, coeff: float, power: float):
    """Upper bound on ``|y(t)|_p`` for damping ``coeff*|y_t|^(p-2) y_t``."""
    if coeff <= 0 or power <= 2:
        raise ValueError("coeff must be positive and power must exceed 2")
    p = float(power)
    t = np.asarray(t, dtype=float)
    out = 2.0 ** ((p - 1) / p) * (y0_p_norm + coeff ** (-1.0 / p) * t ** ((p - 1) / p) * E0 ** (1.0 / p))
    return float(out) if out.ndim == 0 else out


def bound_curve(t, kind: str, K: float, e: float):
    """``K(1+t)^-e`` (``power``) or ``K log(2+t)^-e`` (``log``)."""
    t = np.asarray(t, dtype=float)
    if kind == "power":
        out = K * (1.0 + t) ** (-e)
    elif kind == "log":
        out = K * np.log(2.0 + t) ** (-e)
    else:
        raise ValueError(f"unknown bound kind {kind!r}")
    return float(out) if out.ndim == 0 else out
