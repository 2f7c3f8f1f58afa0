"""JSON run configurations: parsing, validation and content digests.

A PDE config has the sections ``domain``, ``operator``, ``damping``,
``init``, ``time``, ``record`` and ``analysis``; an ODE config has an
``ode`` section instead of the PDE ones. Unknown keys are rejected with
their dotted path so that typos (``"pp": 4``) never pass silently.

Lengths may be numbers or strings such as ``"pi"``, ``"2*pi"``, ``"pi/2"``.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dynamics import DampingSpec, InitSpec, OperatorSpec, RecordSpec, SimConfig, initial_state
from .functionals import energy
from .spectral import make_box_domain

__all__ = [
    "ConfigError",
    "RunConfig",
    "OdeConfig",
    "AnalysisSpec",
    "parse_config",
    "load_config",
    "config_digest",
    "bundled_config",
    "bundled_names",
    "prepared_run",
]

CONFIG_DIR = Path(__file__).with_name("configs")

_SECTIONS = {"domain", "operator", "damping", "init", "time", "record", "analysis", "ode", "name"}
_KEYS = {
    "domain": {"lengths", "resolution"},
    "operator": {"kind"},
    "damping": {"kind", "c", "a", "p", "b", "q", "scheme"},
    "init": {"kind", "seed", "cutoff", "energy", "modes"},
    "time": {"dt", "t_max"},
    "record": {"mode", "stride", "per_decade", "F", "lp", "lq", "eps", "eps_scale", "mu", "weight"},
    "analysis": {"fit", "bounds"},
    "analysis.fit": {"model", "window"},
    "analysis.bounds": {"kinds", "t_fit", "slack", "t_end"},
    "ode": {"omega", "c", "p", "u0", "u1", "dt", "t_max", "per_decade"},
}
_PI_RE = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending line or field."""


@dataclass
class AnalysisSpec:
    fit_model: str | None = None
    fit_window: tuple[float, float] | None = None
    bound_kinds: tuple[str, ...] = ()
    t_fit: float | None = None
    slack: float = 0.02
    t_end: float | None = None


@dataclass
class RunConfig:
    sim: SimConfig
    analysis: AnalysisSpec
    eps_scale: float | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def seed(self) -> int:
        return self.sim.init.seed


@dataclass
class OdeConfig:
    omega: float = 1.0
    c: float = 1.0
    p: float = 4.0
    u0: float = 1.0
    u1: float = 0.0
    dt: float = 1e-3
    t_max: float = 1e4
    per_decade: int = 40
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    raw: dict = field(default_factory=dict, repr=False)

    seed = None


def _check_keys(obj, section: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{section}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - _KEYS[section])
    if unknown:
        raise ConfigError(f"unknown key {section}.{unknown[0]} (allowed: {', '.join(sorted(_KEYS[section]))})")
    return obj


def _length(x, where: str) -> float:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    if isinstance(x, str):
        m = _PI_RE.match(x)
        if m:
            mult = float(m.group(1)) if m.group(1) else 1.0
            div = float(m.group(2)) if m.group(2) else 1.0
            return mult * math.pi / div
    raise ConfigError(f"{where}: cannot read length {x!r}")


def _num(sec: dict, key: str, where: str, default=None, kind=float):
    if key not in sec:
        if default is ConfigError:
            raise ConfigError(f"missing required field {where}.{key}")
        return default
    val = sec[key]
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {val!r}")
    if kind is int:
        if float(val) != int(val):
            raise ConfigError(f"{where}.{key}: expected an integer, got {val!r}")
        return int(val)
    return float(val)


def _analysis(doc: dict) -> AnalysisSpec:
    sec = _check_keys(doc.get("analysis", {}), "analysis")
    out = AnalysisSpec()
    if "fit" in sec:
        fit = _check_keys(sec["fit"], "analysis.fit")
        out.fit_model = fit.get("model", "power")
        if out.fit_model not in ("power", "log"):
            raise ConfigError(f"analysis.fit.model: expected 'power' or 'log', got {out.fit_model!r}")
        if fit.get("window") is not None:
            w = fit["window"]
            if not (isinstance(w, list) and len(w) == 2):
                raise ConfigError("analysis.fit.window: expected [t_lo, t_hi]")
            out.fit_window = (float(w[0]), float(w[1]))
    if "bounds" in sec:
        b = _check_keys(sec["bounds"], "analysis.bounds")
        kinds = b.get("kinds", ["power", "log"])
        if isinstance(kinds, str):
            kinds = [kinds]
        for k in kinds:
            if k not in ("power", "log"):
                raise ConfigError(f"analysis.bounds.kinds: unknown bound kind {k!r}")
        out.bound_kinds = tuple(kinds)
        out.t_fit = _num(b, "t_fit", "analysis.bounds", ConfigError)
        out.slack = _num(b, "slack", "analysis.bounds", 0.02)
        out.t_end = _num(b, "t_end", "analysis.bounds")
    return out


def _build_ode(doc: dict) -> OdeConfig:
    extra = sorted(set(doc) - {"ode", "analysis", "name"})
    if extra:
        raise ConfigError(f"section {extra[0]!r} cannot be combined with an ode section")
    sec = _check_keys(doc["ode"], "ode")
    kw = {k: _num(sec, k, "ode", getattr(OdeConfig, k), int if k == "per_decade" else float)
          for k in _KEYS["ode"]}
    cfg = OdeConfig(**kw, analysis=_analysis(doc), raw=doc)
    if not cfg.omega > 0 or not cfg.dt > 0 or cfg.t_max < 0 or cfg.c < 0 or (cfg.c > 0 and not cfg.p > 2):
        raise ConfigError("ode: need omega > 0, dt > 0, t_max >= 0, c >= 0 and p > 2")
    return cfg


def _build_pde(doc: dict) -> RunConfig:
    for name in ("domain", "time"):
        if name not in doc:
            raise ConfigError(f"missing required section {name!r}")
    dom = _check_keys(doc["domain"], "domain")
    if "lengths" not in dom or "resolution" not in dom:
        raise ConfigError("domain: both lengths and resolution are required")
    lengths = dom["lengths"] if isinstance(dom["lengths"], list) else [dom["lengths"]]
    lengths = [_length(x, f"domain.lengths[{i}]") for i, x in enumerate(lengths)]
    res = dom["resolution"] if isinstance(dom["resolution"], list) else [dom["resolution"]]
    if len(res) == 1 and len(lengths) > 1:
        res = res * len(lengths)
    op = _check_keys(doc.get("operator", {}), "operator")
    damp = _check_keys(doc.get("damping", {"kind": "none"}), "damping")
    init = _check_keys(doc.get("init", {}), "init")
    tm = _check_keys(doc["time"], "time")
    rec = _check_keys(doc.get("record", {}), "record")
    try:
        domain = make_box_domain(lengths, res)
        operator = OperatorSpec(op.get("kind", "wave"))
        kind = damp.get("kind", "single")
        if kind == "none":
            damping = DampingSpec.none()
        elif kind == "single":
            if "a" in damp or "b" in damp or "q" in damp:
                raise ConfigError("damping: single damping takes c and p only")
            damping = DampingSpec.single(_num(damp, "c", "damping", 1.0), _num(damp, "p", "damping", ConfigError))
        elif kind == "double":
            if "c" in damp:
                raise ConfigError("damping: double damping takes a, p, b, q (not c)")
            damping = DampingSpec.double(_num(damp, "a", "damping", 1.0), _num(damp, "p", "damping", ConfigError),
                                         _num(damp, "b", "damping", 1.0), _num(damp, "q", "damping", ConfigError),
                                         damp.get("scheme", "newton"))
        else:
            raise ConfigError(f"damping.kind: unknown damping kind {kind!r}")
        modes = tuple((tuple(m[0]) if isinstance(m[0], list) else m[0], float(m[1]), float(m[2]))
                      for m in init.get("modes", []))
        init_spec = InitSpec(kind=init.get("kind", "random"), seed=_num(init, "seed", "init", 0, int),
                             cutoff=_num(init, "cutoff", "init", 8, int),
                             energy=_num(init, "energy", "init", 1.0), modes=modes)
        if "eps" in rec and "eps_scale" in rec:
            raise ConfigError("record: give either eps or eps_scale, not both")
        record = RecordSpec(mode=rec.get("mode", "geometric"), stride=_num(rec, "stride", "record", 1, int),
                            per_decade=_num(rec, "per_decade", "record", 40, int), F=bool(rec.get("F", False)),
                            lp=_num(rec, "lp", "record"), lq=_num(rec, "lq", "record"),
                            eps=_num(rec, "eps", "record"), mu=_num(rec, "mu", "record", 1.0),
                            weight=rec.get("weight", "linear"))
        sim = SimConfig(domain, operator, damping, init_spec, dt=_num(tm, "dt", "time", ConfigError),
                        t_max=_num(tm, "t_max", "time", ConfigError), record=record)
    except ConfigError:
        raise
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return RunConfig(sim, _analysis(doc), _num(rec, "eps_scale", "record"), raw=doc)


def parse_config(text: str, source: str = "<config>") -> RunConfig | OdeConfig:
    """Parse JSON text into a :class:`RunConfig` or :class:`OdeConfig`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be an object")
    unknown = sorted(set(doc) - _SECTIONS)
    if unknown:
        raise ConfigError(f"{source}: unknown section {unknown[0]!r}")
    try:
        return _build_ode(doc) if "ode" in doc else _build_pde(doc)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig | OdeConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def config_digest(doc: dict) -> str:
    """sha256 of the canonical JSON form (sorted keys, no whitespace)."""
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def bundled_names() -> list[str]:
    return sorted(p.stem for p in CONFIG_DIR.glob("*.json"))


def bundled_config(name: str) -> Path:
    path = CONFIG_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"no bundled config {name!r}; available: {', '.join(bundled_names())}")
    return path


def prepared_run(rc: RunConfig) -> SimConfig:
    """Resolve ``record.eps_scale`` into ``eps = scale * poincare / E0**mu``.

    ``poincare`` is ``lambda`` for the wave operator and ``lambda**2`` for the
    plate; ``E0`` is the energy of the configured initial state.
    """
    sim = rc.sim
    if rc.eps_scale is None:
        return sim
    d = sim.domain
    E0 = energy(initial_state(sim), d, sim.operator)
    poincare = d.lam if sim.operator.kind == "wave" else d.lambda2
    rec = sim.record
    eps = rc.eps_scale * poincare / E0**rec.mu
    return sim.with_(record=replace(rec, eps=eps))
