"""Scenario parameters, agent states, and the YAML scenario file format.

A scenario document is a nested key/value tree.  Lengths are meters, times
seconds, angles radians.  The EI block holds one shared parameter set; each
entry of ``ei.units`` supplies a patrol center and an initial pose and may
override any shared field.  See ``docs/scenario.yaml`` for the canonical
example.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np
import yaml

DEFAULT_MAX_TIME = 60.0
DEFAULT_SEED = 0
# relative tolerance for the "master step divides planner step" check
GRID_TOL = 1e-9


class ScenarioError(ValueError):
    """Raised when a scenario document cannot be turned into a valid config."""

    def __init__(self, message: str, violations: list[Violation] | None = None):
        super().__init__(message)
        self.violations = violations or []


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    v: float
    theta: float
    energy: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.v, self.theta])


@dataclass(frozen=True)
class Limits:
    v_min: float
    v_max: float
    a_min: float
    a_max: float
    omega_min: float
    omega_max: float

    @property
    def control_lo(self) -> np.ndarray:
        return np.array([self.a_min, self.omega_min])

    @property
    def control_hi(self) -> np.ndarray:
        return np.array([self.a_max, self.omega_max])


@dataclass(frozen=True)
class ITParams:
    limits: Limits
    turn_penalty: float
    m1: float
    m2: float
    m3: float
    slack_weight: float
    step: float
    horizon: int
    v_atk: float
    initial: AgentState


@dataclass(frozen=True)
class EIParams:
    limits: Limits
    turn_penalty: float
    mu1: float
    mu2: float
    mu3: float
    slack_weight: float
    step: float
    horizon: int
    v_itc: float
    patrol_center: tuple[float, float]
    initial: AgentState


@dataclass(frozen=True)
class FieldParams:
    w_sd: float
    sigma_sd: float
    w_ei: float
    sigma_ei: float
    w_pac: float
    r_pac: float
    w_htc: float
    r_htc: float
    psi: float


@dataclass(frozen=True)
class EngagementParams:
    r_dz: float
    r_iz: float
    r_pz: float
    master_step: float
    max_time: float = DEFAULT_MAX_TIME
    # off: depletion ends the run; on: the depleted IT coasts and may still hit the DZ
    ballistic_depletion: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    hva: tuple[float, float]
    static_defenses: tuple[tuple[float, float], ...]
    it: ITParams
    eis: tuple[EIParams, ...]
    fields: FieldParams
    engagement: EngagementParams
    seed: int = DEFAULT_SEED

    @property
    def n(self) -> int:
        return len(self.eis)

    @property
    def hva_array(self) -> np.ndarray:
        return np.asarray(self.hva, dtype=float)

    @property
    def defenses_array(self) -> np.ndarray:
        return np.asarray(self.static_defenses, dtype=float).reshape(-1, 2)

    @property
    def ei_step(self) -> float | None:
        return self.eis[0].step if self.eis else None


# --------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.path}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def add(self, code: str, path: str, message: str) -> None:
        self.violations.append(Violation(code, path, message))

    def __bool__(self) -> bool:
        return bool(self.violations)


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def _check_limits(rep: ValidationReport, lim: Limits, path: str, prefix: str) -> bool:
    before = len(rep.violations)
    if not lim.v_min > 0:
        rep.add(f"{prefix}_forward_motion", f"{path}.v_min", "forward motion violated: v_min must be > 0")
    if not lim.v_min <= lim.v_max:
        rep.add(f"{prefix}_speed_box", f"{path}.v_max", "speed box empty: v_min > v_max")
    if not lim.a_min <= lim.a_max:
        rep.add(f"{prefix}_accel_box", f"{path}.a_max", "acceleration box empty: a_min > a_max")
    if not lim.omega_min <= lim.omega_max:
        rep.add(f"{prefix}_turn_box", f"{path}.omega_max", "turn-rate box empty: omega_min > omega_max")
    return len(rep.violations) == before


def _positive(rep: ValidationReport, value: float, code: str, path: str, what: str) -> None:
    if not (_finite(value) and value > 0):
        rep.add(code, path, f"{what} must be > 0, got {value!r}")


def _check_initial(rep: ValidationReport, st: AgentState, lim: Limits, limits_ok: bool,
                   path: str, prefix: str) -> None:
    if not st.energy >= 0:
        rep.add(f"{prefix}_energy", f"{path}.energy", f"initial energy must be >= 0, got {st.energy!r}")
    # an empty or non-positive speed box already has its own code
    if limits_ok and lim.v_min > 0 and not lim.v_min <= st.v <= lim.v_max:
        rep.add(f"{prefix}_initial_speed", f"{path}.initial.v",
                f"initial speed {st.v!r} outside [{lim.v_min}, {lim.v_max}]")


def _grid_ratio_ok(step: float, master: float) -> bool:
    if not (master > 0 and step > 0):
        return True  # reported by the positivity checks
    ratio = step / master
    k = round(ratio)
    return k >= 1 and abs(ratio - k) <= GRID_TOL * max(1.0, ratio)


def validate(cfg: ScenarioConfig) -> ValidationReport:
    """Check every documented invariant; violations are returned, never raised."""
    rep = ValidationReport()

    it = cfg.it
    ok = _check_limits(rep, it.limits, "it.limits", "it")
    _positive(rep, it.turn_penalty, "it_turn_penalty", "it.turn_penalty", "turn penalty")
    for name in ("m1", "m2", "m3"):
        _positive(rep, getattr(it, name), "it_weight", f"it.weights.{name}", name)
    _positive(rep, it.slack_weight, "it_slack_weight", "it.slack_weight", "slack weight")
    _positive(rep, it.step, "it_step", "it.step", "planner step")
    if not (isinstance(it.horizon, int) and it.horizon >= 1):
        rep.add("it_horizon", "it.horizon", f"horizon must be an integer >= 1, got {it.horizon!r}")
    _positive(rep, it.v_atk, "it_v_atk", "it.v_atk", "nominal attack speed")
    _check_initial(rep, it.initial, it.limits, ok, "it", "it")

    for i, ei in enumerate(cfg.eis):
        p = f"ei.units[{i}]"
        ok = _check_limits(rep, ei.limits, f"{p}.limits", "ei")
        _positive(rep, ei.turn_penalty, "ei_turn_penalty", f"{p}.turn_penalty", "turn penalty")
        for name in ("mu1", "mu2", "mu3"):
            _positive(rep, getattr(ei, name), "ei_weight", f"{p}.weights.{name}", name)
        _positive(rep, ei.slack_weight, "ei_slack_weight", f"{p}.slack_weight", "slack weight")
        _positive(rep, ei.step, "ei_step", f"{p}.step", "planner step")
        if not (isinstance(ei.horizon, int) and ei.horizon >= 1):
            rep.add("ei_horizon", f"{p}.horizon", f"horizon must be an integer >= 1, got {ei.horizon!r}")
        _positive(rep, ei.v_itc, "ei_v_itc", f"{p}.v_itc", "terminal intercept speed")
        _check_initial(rep, ei.initial, ei.limits, ok, p, "ei")
        if i > 0 and (ei.step != cfg.eis[0].step or ei.horizon != cfg.eis[0].horizon):
            rep.add("ei_shared_grid", p, "all EIs must share the command-node step and horizon")

    f = cfg.fields
    for name in ("w_sd", "w_ei", "w_pac", "w_htc"):
        _positive(rep, getattr(f, name), f"{name}_positive", f"fields.{name}", name)
    for name in ("r_pac", "r_htc"):
        _positive(rep, getattr(f, name), f"{name}_positive", f"fields.{name}", name)
    if not (_finite(f.sigma_sd) and f.sigma_sd != 0):
        rep.add("sigma_sd_zero", "fields.sigma_sd", "static-defense spread must be nonzero")
    if not (_finite(f.sigma_ei) and f.sigma_ei != 0):
        rep.add("sigma_ei_zero", "fields.sigma_ei", "EI threat spread must be nonzero")
    if not (_finite(f.psi) and 0.0 <= f.psi <= 1.0):
        rep.add("psi_range", "fields.psi", f"psi must lie in [0, 1], got {f.psi!r}")

    e = cfg.engagement
    _positive(rep, e.r_dz, "r_dz_positive", "engagement.r_dz", "dive-zone radius")
    _positive(rep, e.r_iz, "r_iz_positive", "engagement.r_iz", "intercept-zone radius")
    _positive(rep, e.r_pz, "r_pz_positive", "engagement.r_pz", "proximity-zone radius")
    if e.r_iz > 0 and e.r_pz > 0 and not e.r_iz < e.r_pz:
        rep.add("iz_exceeds_pz", "engagement.r_iz", "intercept radius must be smaller than proximity radius")
    _positive(rep, e.master_step, "master_step_positive", "engagement.master_step", "master step")
    _positive(rep, e.max_time, "max_time_positive", "engagement.max_time", "max time")
    steps = [("it.step", it.step)] + ([("ei.step", cfg.eis[0].step)] if cfg.eis else [])
    for path, step in steps:
        if not _grid_ratio_ok(step, e.master_step):
            rep.add("grid_alignment", "engagement.master_step",
                    f"master step {e.master_step} does not divide {path} = {step}")
    return rep


# --------------------------------------------------------------------------
# loading and writing

_LIMIT_KEYS = tuple(f.name for f in fields(Limits))


class _Reader:
    """Typed access into a parsed document with dotted error paths."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, Mapping):
            raise ScenarioError(f"{path or 'document'}: expected a mapping, got {type(data).__name__}")
        self.data = data
        self.path = path

    def _p(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def raw(self, key: str, default: Any = ...) -> Any:
        if key not in self.data:
            if default is ...:
                raise ScenarioError(f"missing required field {self._p(key)}")
            return default
        return self.data[key]

    def num(self, key: str, default: Any = ...) -> float:
        val = self.raw(key, default)
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ScenarioError(f"{self._p(key)}: expected a number, got {val!r}")
        return float(val)

    def int_(self, key: str, default: Any = ...) -> int:
        val = self.raw(key, default)
        if isinstance(val, bool) or not isinstance(val, int):
            raise ScenarioError(f"{self._p(key)}: expected an integer, got {val!r}")
        return val

    def bool_(self, key: str, default: Any = ...) -> bool:
        val = self.raw(key, default)
        if not isinstance(val, bool):
            raise ScenarioError(f"{self._p(key)}: expected true/false, got {val!r}")
        return val

    def vec2(self, key: str) -> tuple[float, float]:
        return _vec2(self.raw(key), self._p(key))

    def sub(self, key: str) -> _Reader:
        return _Reader(self.raw(key), self._p(key))


def _vec2(val: Any, path: str) -> tuple[float, float]:
    if (not isinstance(val, (list, tuple)) or len(val) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in val)):
        raise ScenarioError(f"{path}: expected a 2-vector [x, y], got {val!r}")
    return (float(val[0]), float(val[1]))


def _limits(r: _Reader) -> Limits:
    return Limits(**{k: r.num(k) for k in _LIMIT_KEYS})


def _initial(r: _Reader, energy: float) -> AgentState:
    return AgentState(r.num("x"), r.num("y"), r.num("v"), r.num("theta"), energy)


def _merge(base: Mapping, over: Mapping) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def config_from_dict(doc: Any) -> ScenarioConfig:
    """Build a config from a parsed document without validating invariants."""
    r = _Reader(doc, "")
    itr = r.sub("it")
    w = itr.sub("weights")
    it = ITParams(
        limits=_limits(itr.sub("limits")),
        turn_penalty=itr.num("turn_penalty"),
        m1=w.num("m1"), m2=w.num("m2"), m3=w.num("m3"),
        slack_weight=itr.num("slack_weight"),
        step=itr.num("step"),
        horizon=itr.int_("horizon"),
        v_atk=itr.num("v_atk"),
        initial=_initial(itr.sub("initial"), itr.num("energy")),
    )

    eis: list[EIParams] = []
    if r.has("ei"):
        eir = r.sub("ei")
        units = eir.raw("units", [])
        if not isinstance(units, list):
            raise ScenarioError("ei.units: expected a list")
        shared = {k: v for k, v in eir.data.items() if k != "units"}
        for i, unit in enumerate(units):
            path = f"ei.units[{i}]"
            if not isinstance(unit, Mapping):
                raise ScenarioError(f"{path}: expected a mapping")
            u = _Reader(_merge(shared, unit), path)
            uw = u.sub("weights")
            eis.append(EIParams(
                limits=_limits(u.sub("limits")),
                turn_penalty=u.num("turn_penalty"),
                mu1=uw.num("mu1"), mu2=uw.num("mu2"), mu3=uw.num("mu3"),
                slack_weight=u.num("slack_weight"),
                step=u.num("step"),
                horizon=u.int_("horizon"),
                v_itc=u.num("v_itc"),
                patrol_center=u.vec2("patrol_center"),
                initial=_initial(u.sub("initial"), u.num("energy")),
            ))

    fr = r.sub("fields")
    fp = FieldParams(**{k.name: fr.num(k.name) for k in fields(FieldParams)})

    er = r.sub("engagement")
    eng = EngagementParams(
        r_dz=er.num("r_dz"), r_iz=er.num("r_iz"), r_pz=er.num("r_pz"),
        master_step=er.num("master_step"),
        max_time=er.num("max_time", DEFAULT_MAX_TIME),
        ballistic_depletion=er.bool_("ballistic_depletion", False),
    )

    defenses = r.raw("static_defenses", [])
    if not isinstance(defenses, list):
        raise ScenarioError("static_defenses: expected a list of 2-vectors")
    sd = tuple(_vec2(d, f"static_defenses[{i}]") for i, d in enumerate(defenses))

    return ScenarioConfig(
        hva=r.vec2("hva"),
        static_defenses=sd,
        it=it,
        eis=tuple(eis),
        fields=fp,
        engagement=eng,
        seed=r.int_("seed", DEFAULT_SEED),
    )


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Raises ScenarioError on YAML syntax errors (with line number), missing
    fields, type mismatches, or any invariant violation.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"scenario parse error{where}: {getattr(exc, 'problem', exc)}") from exc
    cfg = config_from_dict(doc)
    rep = validate(cfg)
    if rep:
        msg = "; ".join(str(v) for v in rep.violations)
        raise ScenarioError(f"invalid scenario: {msg}", rep.violations)
    return cfg


def load_scenario_file(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def _state_dict(st: AgentState) -> dict:
    return {"x": st.x, "y": st.y, "v": st.v, "theta": st.theta}


def _ei_body(ei: EIParams) -> dict:
    return {
        "limits": asdict(ei.limits),
        "turn_penalty": ei.turn_penalty,
        "energy": ei.initial.energy,
        "weights": {"mu1": ei.mu1, "mu2": ei.mu2, "mu3": ei.mu3},
        "slack_weight": ei.slack_weight,
        "step": ei.step,
        "horizon": ei.horizon,
        "v_itc": ei.v_itc,
    }


def config_to_dict(cfg: ScenarioConfig) -> dict:
    it = cfg.it
    doc: dict[str, Any] = {
        "seed": cfg.seed,
        "hva": list(cfg.hva),
        "static_defenses": [list(d) for d in cfg.static_defenses],
        "it": {
            "limits": asdict(it.limits),
            "turn_penalty": it.turn_penalty,
            "energy": it.initial.energy,
            "weights": {"m1": it.m1, "m2": it.m2, "m3": it.m3},
            "slack_weight": it.slack_weight,
            "step": it.step,
            "horizon": it.horizon,
            "v_atk": it.v_atk,
            "initial": _state_dict(it.initial),
        },
    }
    if cfg.eis:
        shared = _ei_body(cfg.eis[0])
        units = []
        for ei in cfg.eis:
            unit: dict[str, Any] = {
                "patrol_center": list(ei.patrol_center),
                "initial": _state_dict(ei.initial),
            }
            body = _ei_body(ei)
            unit.update({k: v for k, v in body.items() if v != shared[k]})
            units.append(unit)
        doc["ei"] = {**shared, "units": units}
    doc["fields"] = asdict(cfg.fields)
    doc["engagement"] = asdict(cfg.engagement)
    return doc


def write_scenario(cfg: ScenarioConfig) -> str:
    """Serialize a config to a scenario document that load_scenario accepts."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


def with_engagement(cfg: ScenarioConfig, **changes: Any) -> ScenarioConfig:
    return replace(cfg, engagement=replace(cfg.engagement, **changes))
