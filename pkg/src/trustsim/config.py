"""Scenario configuration and its JSON file format.

A config file is a JSON object. Trust values are decimals on the 0.01 grid,
times are seconds. Unknown keys are rejected. Example::

    {
      "model": "SixState",
      "default_trust": 0.5,
      "initial_trust": {"V0": 0.6},
      "seed": 7,
      "script": [{"slot": 1, "ground_truth": false, "reporter": "V5",
                  "delivery": {"V0": 620}}]
    }

``model`` is a builtin kind name or an inline model object (see
:func:`trustsim.trust.model_to_dict`); ``model_file`` points at a model JSON
file instead, relative to the config file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .dispute import DeliveryModel, Outcome
from .errors import ConfigSyntaxError, InvalidConfig, InvalidModel, UnknownVehicleInScript
from .trust import (MAX_TRUST, ModelKind, Severity, TrustModel, builtin_model, fmt_trust,
                    model_from_dict, model_to_dict, to_hundredths)


class _Unset:
    def __repr__(self):
        return "UNSET"

    def __bool__(self):
        return False


UNSET = _Unset()


@dataclass(frozen=True)
class ScriptedStep:
    """Overrides for one announcement slot (1-based).

    ``reporter=None`` means nobody reports; ``UNSET`` leaves the choice to the
    seeded draws. ``delivery`` maps a vehicle to its adjustment's delivery
    time, or to None when that adjustment is lost.
    """
    slot: int
    ground_truth: bool | None = None
    reporter: object = UNSET
    verdict: Outcome | None = None
    delivery: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"slot": self.slot}
        if self.ground_truth is not None:
            out["ground_truth"] = self.ground_truth
        if self.reporter is not UNSET:
            out["reporter"] = self.reporter
        if self.verdict is not None:
            out["verdict"] = self.verdict.value
        if self.delivery:
            out["delivery"] = dict(self.delivery)
        return out


def vehicle_ids(count: int) -> list[str]:
    return [f"V{i}" for i in range(count)]


@dataclass(frozen=True)
class ScenarioConfig:
    model: TrustModel = field(default_factory=lambda: builtin_model(ModelKind.SixState))
    duration: float = 5000
    warmup: float = 400
    announcement_interval: float = 500
    sender: str = "V0"
    reporters: tuple = ("V1", "V2", "V3", "V4", "V5")
    vehicle_count: int = 100
    default_trust: int = 50
    initial_trust: dict = field(default_factory=dict)
    initial_trust_range: tuple | None = None
    clarifier_pool_size: int = 5
    clarifier_honesty: float = 1.0
    rsu_count: int = 12
    collaboration_timer: float = 120
    reward: int = 10
    punishment: int = 10
    clarify_reward: int = 8
    delivery: DeliveryModel = field(default_factory=DeliveryModel)
    seed: int = 42
    severity: Severity = Severity.Severe
    reporter_mode: str = "single"
    report_delay: float = 0
    gate_reports: bool = True
    script: tuple | None = None
    description: str = ""
    # recorded for provenance only
    transmission_range: float = 300
    area: str = "Urban"
    lanes: int = 2
    car_following: bool = True

    @property
    def vehicles(self) -> list[str]:
        return vehicle_ids(self.vehicle_count)

    def script_step(self, slot: int) -> ScriptedStep | None:
        for step in self.script or ():
            if step.slot == slot:
                return step
        return None

    def validate(self) -> None:
        problems = validation_problems(self)
        if problems:
            script_only = all(p.startswith("script") for p, _ in problems)
            unknown = any("unknown vehicle" in why for _, why in problems)
            cls = UnknownVehicleInScript if script_only and unknown else InvalidConfig
            raise cls(problems)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        if self.model.kind is ModelKind.Custom:
            model = model_to_dict(self.model)
        else:
            model = self.model.kind.value
        out = {
            "model": model,
            "duration": self.duration,
            "warmup": self.warmup,
            "announcement_interval": self.announcement_interval,
            "sender": self.sender,
            "reporters": list(self.reporters),
            "vehicle_count": self.vehicle_count,
            "default_trust": _dec(self.default_trust),
            "initial_trust": {k: _dec(v) for k, v in sorted(self.initial_trust.items(),
                                                            key=lambda kv: _vkey(kv[0]))},
            "initial_trust_range": ([_dec(v) for v in self.initial_trust_range]
                                    if self.initial_trust_range else None),
            "clarifier_pool_size": self.clarifier_pool_size,
            "clarifier_honesty": self.clarifier_honesty,
            "rsu_count": self.rsu_count,
            "collaboration_timer": self.collaboration_timer,
            "reward": _dec(self.reward),
            "punishment": _dec(self.punishment),
            "clarify_reward": _dec(self.clarify_reward),
            "delivery": {
                "loss_probability": self.delivery.loss_probability,
                "delivery_lag": self.delivery.delivery_lag,
                "hop_limit": self.delivery.hop_limit,
            },
            "seed": self.seed,
            "severity": self.severity.name,
            "reporter_mode": self.reporter_mode,
            "report_delay": self.report_delay,
            "gate_reports": self.gate_reports,
            "script": [s.to_dict() for s in self.script] if self.script is not None else None,
            "description": self.description,
            "transmission_range": self.transmission_range,
            "area": self.area,
            "lanes": self.lanes,
            "car_following": self.car_following,
        }
        return out


def _dec(hundredths: int) -> float:
    return float(fmt_trust(hundredths))


def _vkey(vid: str):
    return (len(vid), vid)


def validation_problems(cfg: ScenarioConfig) -> list[tuple[str, str]]:
    p = []
    if cfg.duration <= 0:
        p.append(("duration", "must be positive"))
    if cfg.warmup < 0:
        p.append(("warmup", "must be >= 0"))
    if cfg.warmup >= cfg.duration:
        p.append(("warmup", f"must be less than duration ({cfg.duration})"))
    if cfg.announcement_interval <= 0:
        p.append(("announcement_interval", "must be positive"))
    if cfg.collaboration_timer <= 0:
        p.append(("collaboration_timer", "must be positive"))
    if cfg.report_delay < 0:
        p.append(("report_delay", "must be >= 0"))
    if cfg.vehicle_count < 2:
        p.append(("vehicle_count", "need at least a sender and one other vehicle"))
    if cfg.rsu_count < 1:
        p.append(("rsu_count", "must be >= 1"))
    if cfg.clarifier_pool_size < 0:
        p.append(("clarifier_pool_size", "must be >= 0"))
    if not 0 <= cfg.clarifier_honesty <= 1:
        p.append(("clarifier_honesty", "must be in [0, 1]"))
    if cfg.reporter_mode not in ("single", "independent"):
        p.append(("reporter_mode", "must be 'single' or 'independent'"))
    for name in ("reward", "punishment", "clarify_reward"):
        if getattr(cfg, name) < 0:
            p.append((name, "must be >= 0"))
    if not 0 <= cfg.seed < 2 ** 64:
        p.append(("seed", "must fit in 64 unsigned bits"))

    known = set(cfg.vehicles)
    if cfg.sender not in known:
        p.append(("sender", f"unknown vehicle {cfg.sender!r}"))
    for i, r in enumerate(cfg.reporters):
        if r not in known:
            p.append((f"reporters[{i}]", f"unknown vehicle {r!r}"))
        if r == cfg.sender:
            p.append((f"reporters[{i}]", "sender cannot also be a reporter"))
    if len(set(cfg.reporters)) != len(cfg.reporters):
        p.append(("reporters", "duplicate reporter ids"))

    def trust_ok(path, v):
        if not 0 <= v <= MAX_TRUST:
            p.append((path, f"trust {fmt_trust(v)} outside [0.00, 0.90]"))

    trust_ok("default_trust", cfg.default_trust)
    for vid, v in cfg.initial_trust.items():
        if vid not in known:
            p.append((f"initial_trust.{vid}", f"unknown vehicle {vid!r}"))
        trust_ok(f"initial_trust.{vid}", v)
    if cfg.initial_trust_range is not None:
        lo, hi = cfg.initial_trust_range
        trust_ok("initial_trust_range[0]", lo)
        trust_ok("initial_trust_range[1]", hi)
        if lo > hi:
            p.append(("initial_trust_range", "lower bound exceeds upper bound"))

    if cfg.script is not None:
        slots = set()
        for i, step in enumerate(cfg.script):
            where = f"script[{i}]"
            if step.slot < 1:
                p.append((f"{where}.slot", "slots are 1-based"))
            if step.slot in slots:
                p.append((f"{where}.slot", f"slot {step.slot} scripted twice"))
            slots.add(step.slot)
            if step.reporter not in (UNSET, None):
                if step.reporter not in known:
                    p.append((f"{where}.reporter", f"unknown vehicle {step.reporter!r}"))
                elif step.reporter == cfg.sender:
                    p.append((f"{where}.reporter", "sender cannot report itself"))
            for vid, at in step.delivery.items():
                if vid not in known:
                    p.append((f"{where}.delivery.{vid}", f"unknown vehicle {vid!r}"))
                if at is not None and at > cfg.duration:
                    p.append((f"{where}.delivery.{vid}", "delivery after the end of the run"))
    return p


# -- file format -------------------------------------------------------------

_TOP_KEYS = {f.name for f in fields(ScenarioConfig)} | {"model_file"}
_STEP_KEYS = {"slot", "ground_truth", "reporter", "verdict", "delivery"}
_DELIVERY_KEYS = {"loss_probability", "delivery_lag", "hop_limit"}
_TRUST_KEYS = ("default_trust", "reward", "punishment", "clarify_reward")


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigSyntaxError(f"{where or 'config'}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigSyntaxError("unknown key(s): " + ", ".join(prefix + k for k in unknown))


def config_from_dict(data: dict, base_dir: Path | None = None) -> ScenarioConfig:
    """Build and validate a config. Raises ConfigSyntaxError for unknown keys,
    InvalidConfig (with key paths) for bad values."""
    _check_keys(data, _TOP_KEYS, "")
    if "script" in data and data["script"] is not None:
        if not isinstance(data["script"], list):
            raise ConfigSyntaxError("script: expected a list")
        for i, step in enumerate(data["script"]):
            _check_keys(step, _STEP_KEYS, f"script[{i}]")
    if isinstance(data.get("delivery"), dict):
        _check_keys(data["delivery"], _DELIVERY_KEYS, "delivery")

    problems = []
    kw = {}

    def grab(key, conv):
        if key in data and data[key] is not None:
            try:
                kw[key] = conv(data[key])
            except (TypeError, ValueError, KeyError) as e:
                problems.append((key, str(e)))

    try:
        if "model_file" in data and "model" in data:
            problems.append(("model", "give either model or model_file, not both"))
        elif "model_file" in data:
            path = Path(data["model_file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            kw["model"] = model_from_dict(json.loads(path.read_text()))
        elif isinstance(data.get("model"), dict):
            kw["model"] = model_from_dict(data["model"])
        elif "model" in data:
            kind = ModelKind(data["model"])
            if kind is ModelKind.Custom:
                problems.append(("model", "Custom models must be given inline or via model_file"))
            else:
                kw["model"] = builtin_model(kind)
    except InvalidModel as e:
        problems += [("model", v) for v in e.violations]
    except (ValueError, KeyError) as e:
        problems.append(("model", str(e)))

    for key in ("duration", "warmup", "announcement_interval", "collaboration_timer",
                "report_delay", "transmission_range", "clarifier_honesty"):
        grab(key, _number)
    for key in ("vehicle_count", "clarifier_pool_size", "rsu_count", "lanes", "seed"):
        grab(key, _integer)
    for key in _TRUST_KEYS:
        grab(key, to_hundredths)
    for key in ("sender", "area", "description", "reporter_mode"):
        grab(key, str)
    for key in ("gate_reports", "car_following"):
        grab(key, _boolean)
    grab("reporters", lambda v: tuple(str(x) for x in v))
    grab("severity", lambda v: Severity[v])
    grab("initial_trust", lambda m: {str(k): to_hundredths(v) for k, v in m.items()})
    grab("initial_trust_range", _trust_range)
    if isinstance(data.get("delivery"), dict):
        try:
            d = data["delivery"]
            kw["delivery"] = DeliveryModel(
                loss_probability=_number(d.get("loss_probability", 0.0)),
                delivery_lag=_number(d.get("delivery_lag", 0.0)),
                hop_limit=_integer(d.get("hop_limit", 3)),
            )
        except (TypeError, ValueError) as e:
            problems.append(("delivery", str(e)))
    if data.get("script") is not None:
        steps = []
        for i, raw in enumerate(data["script"]):
            try:
                steps.append(_step_from_dict(raw))
            except (TypeError, ValueError, KeyError) as e:
                problems.append((f"script[{i}]", str(e)))
        kw["script"] = tuple(steps)

    if problems:
        raise InvalidConfig(problems)
    cfg = ScenarioConfig(**kw)
    cfg.validate()
    return cfg


def _number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    return v


def _integer(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"expected an integer, got {v!r}")
    return v


def _boolean(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true/false, got {v!r}")
    return v


def _trust_range(v):
    lo, hi = v
    return (to_hundredths(lo), to_hundredths(hi))


def _step_from_dict(raw: dict) -> ScriptedStep:
    gt = raw.get("ground_truth")
    if gt is not None:
        gt = _boolean(gt)
    verdict = raw.get("verdict")
    delivery = {}
    for vid, at in (raw.get("delivery") or {}).items():
        delivery[str(vid)] = None if at is None else _number(at)
    return ScriptedStep(
        slot=_integer(raw["slot"]),
        ground_truth=gt,
        reporter=raw["reporter"] if "reporter" in raw else UNSET,
        verdict=Outcome(verdict) if verdict is not None else None,
        delivery=delivery,
    )


def parse_config(path) -> ScenarioConfig:
    """Read a scenario file. OSError, ConfigSyntaxError, or InvalidConfig."""
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigSyntaxError(f"{path}: {e}") from e
    return config_from_dict(data, base_dir=path.parent)
