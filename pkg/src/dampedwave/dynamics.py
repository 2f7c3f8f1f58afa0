"""Strang-split time integration of nonlinearly damped wave and plate equations.

One step is ``D(dt/2) W(dt) D(dt/2)``: ``W`` rotates every sine mode exactly
at its frequency (conservative), ``D`` applies the damping ODE
``v' = -g(v)`` pointwise on the grid (dissipative, contractive). Both
substeps are exact or monotone for any ``dt``, so the discrete energy can
never increase.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from . import functionals as fn
from .spectral import BoxDomain, forward_transform, inverse_transform, lp_norm

log = logging.getLogger(__name__)

__all__ = [
    "DampingSpec",
    "OperatorSpec",
    "State",
    "InitSpec",
    "RecordSpec",
    "SimConfig",
    "SimulationError",
    "damping_substep_closed_form",
    "damping_substep_newton",
    "damping_substep_split",
    "wave_substep",
    "strang_step",
    "initial_state",
    "simulate",
    "simulate_ode",
    "OdeTrajectory",
    "contractivity_check",
    "ContractivityReport",
]

NEWTON_RTOL = 1e-13
NEWTON_MAXITER = 50


class SimulationError(RuntimeError):
    """Raised when the state becomes non-finite."""


# --------------------------------------------------------------------------
# model specs


@dataclass(frozen=True)
class DampingSpec:
    """``c|v|^(p-2)v`` (single) or ``a|v|^(p-2)v + b|v|^(q-2)v`` (double).

    For ``single`` the coefficient lives in ``a`` (alias ``c``). ``scheme``
    selects the double-damping substep: ``newton`` is backward Euler (first
    order), ``split`` composes the exact ``a``- and ``b``-flows symmetrically
    (second order). Both are odd, monotone and contractive.
    """

    kind: str = "none"
    a: float = 0.0
    p: float = 0.0
    b: float = 0.0
    q: float = 0.0
    scheme: str = "newton"

    def __post_init__(self):
        if self.kind not in ("none", "single", "double"):
            raise ValueError(f"unknown damping kind {self.kind!r}")
        if self.scheme not in ("newton", "split"):
            raise ValueError(f"unknown double-damping scheme {self.scheme!r}")
        if self.kind == "none":
            return
        if not self.p > 2:
            raise ValueError(f"damping exponent p must exceed 2, got {self.p}")
        if not self.a > 0:
            raise ValueError(f"damping coefficient must be positive, got {self.a}")
        if self.kind == "double":
            if not self.b >= 0:
                raise ValueError(f"b must be nonnegative, got {self.b}")
            if not self.q > self.p:
                raise ValueError(f"q must exceed p, got p={self.p}, q={self.q}")

    @classmethod
    def none(cls) -> "DampingSpec":
        return cls("none")

    @classmethod
    def single(cls, c: float, p: float) -> "DampingSpec":
        return cls("single", a=float(c), p=float(p))

    @classmethod
    def double(cls, a: float, p: float, b: float, q: float, scheme: str = "newton") -> "DampingSpec":
        return cls("double", a=float(a), p=float(p), b=float(b), q=float(q), scheme=scheme)

    @property
    def c(self) -> float:
        return self.a

    def density(self, v: np.ndarray) -> np.ndarray:
        """Pointwise dissipation power ``a|v|^p + b|v|^q``."""
        if self.kind == "none":
            return np.zeros_like(v)
        av = np.abs(v)
        out = self.a * av**self.p
        if self.kind == "double" and self.b > 0:
            out = out + self.b * av**self.q
        return out

    def substep(self, v, dt: float):
        """Damping flow over ``dt``: exact for single, backward Euler for double."""
        if self.kind == "none" or dt == 0:
            return v
        if self.kind == "single":
            return damping_substep_closed_form(v, self.a, self.p, dt)
        if self.scheme == "split":
            return damping_substep_split(v, self, dt)
        return damping_substep_newton(v, self, dt)


@dataclass(frozen=True)
class OperatorSpec:
    kind: str = "wave"

    def __post_init__(self):
        if self.kind not in fn.OPERATORS:
            raise ValueError(f"unknown operator {self.kind!r}; expected one of {fn.OPERATORS}")

    def frequencies(self, d: BoxDomain) -> np.ndarray:
        """Modal angular frequencies: ``sqrt(eig)`` (wave) or ``eig`` (plate)."""
        return np.sqrt(d.eig) if self.kind == "wave" else np.array(d.eig)


@dataclass
class State:
    """Displacement and velocity as sine coefficients at time ``t``."""

    t: float
    y: np.ndarray
    v: np.ndarray

    def physical(self, d: BoxDomain) -> tuple[np.ndarray, np.ndarray]:
        return inverse_transform(self.y, d), inverse_transform(self.v, d)

    def copy(self) -> "State":
        return State(self.t, np.array(self.y), np.array(self.v))


# --------------------------------------------------------------------------
# damping substeps


def damping_substep_closed_form(v, c: float, p: float, dt: float):
    """Exact flow of ``v' = -c|v|^(p-2) v`` over ``dt``.

    Written as ``v * (1 + c(p-2) dt |v|^(p-2))^(-1/(p-2))`` so that ``v = 0``
    needs no special case and nothing overflows.
    """
    k = p - 2.0
    scalar = np.ndim(v) == 0
    v = np.asarray(v, dtype=float)
    w = v * (1.0 + c * k * dt * np.abs(v) ** k) ** (-1.0 / k)
    return float(w) if scalar else w


def damping_substep_newton(v, spec: DampingSpec, dt: float, rtol: float = NEWTON_RTOL,
                           maxiter: int = NEWTON_MAXITER):
    """Backward-Euler damping substep: solve ``w + dt*g(w) = v`` pointwise.

    Works on ``s = |w|``; the residual ``s + dt(a s^(p-1) + b s^(q-1)) - |v|``
    is increasing and convex on ``[0, |v|]``, so Newton from the closed-form
    single-damping guess converges; unconverged points are finished by
    bisection on ``[0, |v|]``.
    """
    if spec.kind != "double":
        raise ValueError("damping_substep_newton needs a double damping spec")
    a, p, b, q = spec.a, spec.p, spec.b, spec.q
    scalar = np.ndim(v) == 0
    v = np.asarray(v, dtype=float)
    target = np.abs(v)

    def resid(s):
        return s + dt * (a * s ** (p - 1) + b * s ** (q - 1)) - target

    s = np.abs(damping_substep_closed_form(target, a, p, dt))
    done = target == 0
    for _ in range(maxiter):
        r = resid(s)
        dr = 1.0 + dt * (a * (p - 1) * s ** (p - 2) + b * (q - 1) * s ** (q - 2))
        s_new = np.clip(s - r / dr, 0.0, target)
        step = np.abs(s_new - s)
        s = s_new
        done = done | (step <= rtol * s) | (r == 0)
        if done.all():
            break
    else:
        bad = ~done
        log.debug("newton fallback to bisection at %d points", int(bad.sum()))
        s[bad] = _bisect(resid, target, bad)
    w = np.copysign(s, v)
    return float(w) if scalar else w


def damping_substep_split(v, spec: DampingSpec, dt: float):
    """``a``-flow for ``dt/2``, ``b``-flow for ``dt``, ``a``-flow for ``dt/2``, all exact."""
    w = damping_substep_closed_form(v, spec.a, spec.p, 0.5 * dt)
    if spec.b > 0:
        w = damping_substep_closed_form(w, spec.b, spec.q, dt)
    return damping_substep_closed_form(w, spec.a, spec.p, 0.5 * dt)


def _bisect(resid, target, mask, tol=1e-15, maxiter=200):
    lo = np.zeros(int(mask.sum()))
    hi = np.array(target[mask], dtype=float)

    def r(s):
        full = np.zeros_like(target)
        full[mask] = s
        return resid(full)[mask]

    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        pos = r(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= tol * np.maximum(hi, 1e-300)):
            break
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# conservative substep and the split step


def _rotate(y, v, omega, c, s):
    """Exact modal rotation given ``c = cos(omega dt)``, ``s = sin(omega dt)``."""
    return y * c + (v / omega) * s, v * c - y * omega * s


def wave_substep(state: State, dt: float, op: OperatorSpec, d: BoxDomain) -> State:
    omega = op.frequencies(d)
    y, v = _rotate(state.y, state.v, omega, np.cos(omega * dt), np.sin(omega * dt))
    return State(state.t + dt, y, v)


def strang_step(state: State, dt: float, config: "SimConfig") -> State:
    """One ``D(dt/2) W(dt) D(dt/2)`` step; damping is applied on grid values."""
    d, damp = config.domain, config.damping
    vp = damp.substep(inverse_transform(state.v, d), 0.5 * dt)
    rotated = wave_substep(State(state.t, state.y, forward_transform(vp, d)), dt, config.operator, d)
    vp = damp.substep(inverse_transform(rotated.v, d), 0.5 * dt)
    return State(state.t + dt, rotated.y, forward_transform(vp, d))


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class InitSpec:
    """Initial-data recipe.

    ``random``: seeded normal coefficients on the lowest ``cutoff`` modes per
    axis, with modal energy weights ``1/(1+eig)``, rescaled so that
    ``E(0) = energy``. ``modes``: explicit ``(index, y_amp, v_amp)`` triples
    (1-based indices); rescaled only when ``energy`` is given.
    """

    kind: str = "random"
    seed: int = 0
    cutoff: int = 8
    energy: float | None = 1.0
    modes: tuple = ()

    def __post_init__(self):
        if self.kind not in ("random", "modes"):
            raise ValueError(f"unknown init kind {self.kind!r}")
        if self.kind == "random" and self.cutoff < 1:
            raise ValueError("cutoff must be positive")
        if self.energy is not None and self.energy < 0:
            raise ValueError("target energy must be nonnegative")


@dataclass(frozen=True)
class RecordSpec:
    """When to record and what.

    ``stride``: every ``stride`` steps. ``geometric``: ``per_decade`` records
    per decade of ``t`` between ``dt`` and ``t_max`` (plus ``t=0`` and the
    final step).
    """

    mode: str = "geometric"
    stride: int = 1
    per_decade: int = 40
    F: bool = False
    lp: float | None = None
    lq: float | None = None
    eps: float | None = None
    mu: float = 1.0
    weight: str = "linear"

    def __post_init__(self):
        if self.mode not in ("stride", "geometric"):
            raise ValueError(f"unknown record mode {self.mode!r}")
        if self.stride < 1 or self.per_decade < 1:
            raise ValueError("record stride and per_decade must be positive")
        if self.weight not in ("linear", "logshift"):
            raise ValueError(f"unknown weight {self.weight!r}")
        for name in ("lp", "lq"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} exponent must be >= 1")


@dataclass(frozen=True)
class SimConfig:
    domain: BoxDomain
    operator: OperatorSpec = field(default_factory=OperatorSpec)
    damping: DampingSpec = field(default_factory=DampingSpec)
    init: InitSpec = field(default_factory=InitSpec)
    dt: float = 1e-2
    t_max: float = 1.0
    record: RecordSpec = field(default_factory=RecordSpec)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_max >= self.dt or self.t_max == 0):
            raise ValueError(f"t_max must be 0 or >= dt, got {self.t_max}")
        if self.init.kind == "random" and self.init.cutoff > min(self.domain.resolution):
            raise ValueError("mode cutoff exceeds grid resolution")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)


def initial_state(cfg: SimConfig) -> State:
    d, init = cfg.domain, cfg.init
    omega = cfg.operator.frequencies(d)
    y = np.zeros(d.resolution)
    v = np.zeros(d.resolution)
    if init.kind == "random":
        rng = np.random.default_rng(init.seed)
        sl = tuple(slice(0, init.cutoff) for _ in range(d.dims))
        shape = y[sl].shape
        scale = 1.0 / np.sqrt(1.0 + d.eig[sl])
        y[sl] = rng.standard_normal(shape) * scale / omega[sl]
        v[sl] = rng.standard_normal(shape) * scale
    else:
        for entry in init.modes:
            idx, ya, va = entry
            idx = tuple(int(k) - 1 for k in np.atleast_1d(idx))
            if len(idx) != d.dims or any(not 0 <= k < n for k, n in zip(idx, d.resolution)):
                raise ValueError(f"mode index {entry[0]} out of range for {d.resolution}")
            y[idx] += ya
            v[idx] += va
    state = State(0.0, y, v)
    if init.energy is not None:
        E = fn.energy(state, d, cfg.operator)
        if E > 0:
            s = math.sqrt(init.energy / E)
            state = State(0.0, y * s, v * s)
    return state


def record_steps(n: int, rec: RecordSpec) -> np.ndarray:
    """Step indices at which a run of ``n`` steps is recorded."""
    if n == 0:
        return np.array([0])
    if rec.mode == "stride":
        steps = np.arange(0, n + 1, rec.stride)
    else:
        decades = max(math.log10(n), 0.0)
        m = max(int(math.ceil(decades * rec.per_decade)), 1) + 1
        steps = np.unique(np.round(np.logspace(0.0, math.log10(n), m)).astype(np.int64))
        steps = np.concatenate([[0], steps])
    return np.unique(np.concatenate([steps, [n]]))


# --------------------------------------------------------------------------
# integrator


class _Integrator:
    """Fused stepping loop: ``y`` spectral, ``v`` on the grid between steps.

    Two transforms per step. ``D`` accumulates the dissipation integral by
    the trapezoid rule on the step-boundary velocities.
    """

    def __init__(self, cfg: SimConfig, state: State):
        self.cfg = cfg
        d = cfg.domain
        self.d = d
        self.omega = cfg.operator.frequencies(d)
        self.w2 = self.omega**2
        self.cos = np.cos(self.omega * cfg.dt)
        self.sin = np.sin(self.omega * cfg.dt)
        self.t = state.t
        self.n = 0
        self.y = np.array(state.y, dtype=float)
        self.vp = inverse_transform(state.v, d)
        self.g = self._power(self.vp)
        self.D = 0.0
        self.last_increment = 0.0

    def _power(self, vp) -> float:
        damp = self.cfg.damping
        if damp.kind == "none":
            return 0.0
        return float(damp.density(vp).sum()) * self.d.cell_volume

    def energy(self) -> float:
        d = self.d
        vp, y = self.vp.ravel(), self.y.ravel()
        return 0.5 * (float(vp @ vp) * d.cell_volume + float((self.w2.ravel() * y) @ y) * d.mode_weight)

    def step(self) -> None:
        cfg = self.cfg
        half = 0.5 * cfg.dt
        damp = cfg.damping
        vp = damp.substep(self.vp, half)
        v = forward_transform(vp, self.d)
        self.y, v = _rotate(self.y, v, self.omega, self.cos, self.sin)
        self.vp = damp.substep(inverse_transform(v, self.d), half)
        g = self._power(self.vp)
        self.last_increment = 0.5 * cfg.dt * (self.g + g)
        self.D += self.last_increment
        self.g = g
        self.n += 1
        self.t = self.n * cfg.dt

    def state(self) -> State:
        return State(self.t, np.array(self.y), forward_transform(self.vp, self.d))

    def check_finite(self, E: float = 0.0) -> None:
        if not (math.isfinite(E) and math.isfinite(self.g) and np.isfinite(self.vp).all()
                and np.isfinite(self.y).all()):
            vmax = float(np.nanmax(np.abs(self.vp))) if np.isfinite(self.vp).any() else float("nan")
            raise SimulationError(f"non-finite state at step {self.n} (t={self.t:g}), max|v|={vmax:g}")


def _record(it: _Integrator, cfg: SimConfig, E: float, E0: float) -> fn.TrajectoryRecord:
    d, op, rec = cfg.domain, cfg.operator, cfg.record
    state = it.state()
    out = fn.TrajectoryRecord(t=it.t, E=E, D=it.D, Eprime=-it.last_increment / cfg.dt if it.n else None)
    if rec.F:
        out.F = fn.f_functional(state, d, op)
    if rec.lp is not None or rec.lq is not None:
        y_grid = inverse_transform(state.y, d)
        if rec.lp is not None:
            out.lp = lp_norm(y_grid, d, rec.lp)
        if rec.lq is not None:
            out.lq = lp_norm(y_grid, d, rec.lq)
    if rec.eps is not None:
        phi1 = fn.weight_derivative(it.t, rec.weight)
        out.Eeps = fn.perturbed_energy(state, rec.eps, rec.mu, phi1, d, op, E=E)
    return out


def simulate(cfg: SimConfig, state: State | None = None) -> fn.Trajectory:
    """Integrate to ``t_max`` and return the recorded trajectory.

    ``diagnostics`` holds ``E0``, the largest per-step energy increase
    (``max_increase``) and the count of steps whose energy rose by more
    than ``1e-12 * E0`` (``increase_events``).
    """
    if state is None:
        state = initial_state(cfg)
    it = _Integrator(cfg, state)
    steps = record_steps(cfg.n_steps, cfg.record)
    E = it.energy()
    E0 = E
    traj = fn.Trajectory(meta={"n_steps": cfg.n_steps, "dt": cfg.dt})
    traj.append(_record(it, cfg, E, E0))
    max_inc = -math.inf
    events = 0
    tol = 1e-12 * E0
    k = 1
    for n in range(1, cfg.n_steps + 1):
        it.step()
        E_new = it.energy()
        inc = E_new - E
        if inc > max_inc:
            max_inc = inc
        if inc > tol:
            events += 1
        E = E_new
        if not math.isfinite(E) or not math.isfinite(it.g):
            it.check_finite(E)
        if k < len(steps) and n == steps[k]:
            it.check_finite()
            traj.append(_record(it, cfg, E, E0))
            k += 1
    traj.diagnostics.update(E0=E0, max_increase=max_inc if cfg.n_steps else 0.0,
                            increase_events=events)
    return traj


# --------------------------------------------------------------------------
# contractivity


@dataclass
class ContractivityReport:
    E_diff0: float
    max_excess: float
    max_step_increase: float
    n_steps: int
    t: np.ndarray = field(repr=False)
    E_diff: np.ndarray = field(repr=False)

    def passed(self, tol: float = 1e-10) -> bool:
        return self.max_excess <= tol and self.max_step_increase <= tol


def contractivity_check(cfg: SimConfig, other: InitSpec | State) -> ContractivityReport:
    """Run two trajectories in lockstep and track the energy of their difference."""
    z0 = other if isinstance(other, State) else initial_state(cfg.with_(init=other))
    if np.shape(z0.y) != cfg.domain.resolution:
        raise ValueError("second initial state does not match the configured domain")
    a = _Integrator(cfg, initial_state(cfg))
    b = _Integrator(cfg, z0)
    d = cfg.domain

    def diff_energy():
        dv = a.vp - b.vp
        dy = a.y - b.y
        return 0.5 * (float(np.sum(dv * dv)) * d.cell_volume
                      + float(np.sum(a.w2 * dy * dy)) * d.mode_weight)

    steps = set(record_steps(cfg.n_steps, cfg.record).tolist())
    e = diff_energy()
    e0 = e
    ts, es = [0.0], [e]
    max_excess = 0.0
    max_inc = -math.inf
    for n in range(1, cfg.n_steps + 1):
        a.step()
        b.step()
        e_new = diff_energy()
        max_inc = max(max_inc, e_new - e)
        max_excess = max(max_excess, e_new - e0)
        e = e_new
        if n in steps:
            ts.append(a.t)
            es.append(e)
    if cfg.n_steps == 0:
        max_inc = 0.0
    return ContractivityReport(e0, max_excess, max_inc, cfg.n_steps, np.array(ts), np.array(es))


# --------------------------------------------------------------------------
# reference ODE u'' + w^2 u + c|u'|^(p-2) u' = 0


@dataclass
class OdeTrajectory:
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    E: np.ndarray

    def __len__(self):
        return len(self.t)

    def __iter__(self):
        return iter(zip(self.t, self.u, self.du, self.E))


@numba.njit(cache=True)
def _ode_kernel(omega, c, p, u, v, dt, n_steps, rec_steps, out):
    k = p - 2.0
    ck = c * k * 0.5 * dt
    cs = math.cos(omega * dt)
    sn = math.sin(omega * dt)
    j = 0
    if rec_steps[0] == 0:
        out[0, 0] = 0.0
        out[0, 1] = u
        out[0, 2] = v
        j = 1
    for n in range(1, n_steps + 1):
        if c > 0.0:
            v = v * (1.0 + ck * abs(v) ** k) ** (-1.0 / k)
        u, v = u * cs + (v / omega) * sn, v * cs - u * omega * sn
        if c > 0.0:
            v = v * (1.0 + ck * abs(v) ** k) ** (-1.0 / k)
        if not (math.isfinite(u) and math.isfinite(v)):
            return -n
        if j < rec_steps.shape[0] and rec_steps[j] == n:
            out[j, 0] = n * dt
            out[j, 1] = u
            out[j, 2] = v
            j += 1
    return j


def simulate_ode(omega: float, c: float, p: float, u0: float, u1: float, dt: float,
                 t_max: float, per_decade: int = 40, stride: int | None = None) -> OdeTrajectory:
    """Same splitting on one mode: exact rotation plus exact damping halves.

    Records are geometrically spaced unless ``stride`` is given.
    """
    if not omega > 0 or not dt > 0 or t_max < 0:
        raise ValueError("need omega > 0, dt > 0 and t_max >= 0")
    if c < 0 or (c > 0 and not p > 2):
        raise ValueError("need c >= 0 and p > 2")
    rec = RecordSpec(mode="geometric" if stride is None else "stride",
                     stride=stride or 1, per_decade=per_decade)
    n_steps = int(round(t_max / dt))
    steps = record_steps(n_steps, rec).astype(np.int64)
    out = np.zeros((len(steps), 3))
    j = _ode_kernel(float(omega), float(c), float(p if c > 0 else 3.0), float(u0), float(u1),
                    float(dt), n_steps, steps, out)
    if j < 0:
        raise SimulationError(f"non-finite ODE state at step {-j}")
    t, u, du = out[:j, 0], out[:j, 1], out[:j, 2]
    return OdeTrajectory(t, u, du, 0.5 * (du**2 + omega**2 * u**2))
