"""Trust models: state bins, per-state behaviour tables, and trust arithmetic.

Trust is held as an integer number of hundredths in ``[0, 90]`` so that
rewards and punishments are exact (0.08, 0.10, 0.49 ...). Use
:func:`to_hundredths` / :func:`fmt_trust` at the edges.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path

from .errors import ClarifyingRewardNotApplicable, InvalidModel, UnknownState

MAX_TRUST = 90
MIN_TRUST = 0

TrustScore = int


class Severity(enum.IntEnum):
    Minor = 1
    Moderate = 2
    Severe = 3


class ModelKind(str, enum.Enum):
    FourState = "FourState"
    SixState = "SixState"
    ElevenState = "ElevenState"
    Custom = "Custom"


class Cause(str, enum.Enum):
    RsuReward = "RsuReward"
    RsuPunishment = "RsuPunishment"
    ClarifyingReward = "ClarifyingReward"


def to_hundredths(value) -> int:
    """Convert a decimal trust value (0.49) to hundredths (49).

    Values that are not on the 0.01 grid are rejected rather than rounded.
    """
    if isinstance(value, bool):
        raise ValueError(f"trust must be a number, got {value!r}")
    d = Decimal(str(value)) * 100
    if d != d.to_integral_value():
        raise ValueError(f"trust {value!r} is not a multiple of 0.01")
    return int(d)


def fmt_trust(hundredths: int) -> str:
    sign = "-" if hundredths < 0 else ""
    h = abs(hundredths)
    return f"{sign}{h // 100}.{h % 100:02d}"


def clamp(value: int) -> int:
    return max(MIN_TRUST, min(MAX_TRUST, value))


@dataclass(frozen=True)
class TrustStateDef:
    name: str
    bin_lo: int
    bin_hi: int
    p_send_true: float
    p_send_untrue: float
    p_report_fraud: float
    p_report_honest: float
    max_severity: Severity | None
    blacklisted: bool = False
    alias: str | None = None


@dataclass(frozen=True)
class TrustAdjustment:
    target: str
    delta: int
    cause: Cause
    applied: bool = True

    def __post_init__(self):
        if self.cause is Cause.ClarifyingReward and self.applied:
            raise ClarifyingRewardNotApplicable("clarifying rewards are logged with applied=False")


@dataclass(frozen=True)
class TrustModel:
    kind: ModelKind
    states: tuple[TrustStateDef, ...]
    blacklist_threshold: int = 10
    _lookup: tuple = field(default=(), init=False, repr=False, compare=False)
    _by_name: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        last = len(self.states) - 1
        table = []
        for v in range(MIN_TRUST, MAX_TRUST + 1):
            hit = None
            for i, s in enumerate(self.states):
                if s.bin_lo <= v < s.bin_hi or (i == last and v == s.bin_hi):
                    hit = s.name
                    break
            table.append(hit)
        object.__setattr__(self, "_lookup", tuple(table))
        names = {}
        for s in self.states:
            names[s.name] = s
            if s.alias:
                names.setdefault(s.alias, s)
        object.__setattr__(self, "_by_name", names)

    @property
    def state_names(self) -> list[str]:
        return [s.name for s in self.states]

    def state(self, name: str) -> TrustStateDef:
        """Look up a state by name or alias."""
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownState(f"{name!r} is not a state of the {self.kind.value} model") from None

    def index(self, name: str) -> int:
        return self.states.index(self.state(name))

    @property
    def blacklisted_state(self) -> TrustStateDef:
        return next(s for s in self.states if s.blacklisted)


def _row(name, lo, hi, send_true, report_fraud, severity, alias=None):
    send_true = Decimal(send_true)
    report_fraud = Decimal(report_fraud)
    return TrustStateDef(
        name=name,
        bin_lo=lo,
        bin_hi=hi,
        p_send_true=float(send_true),
        p_send_untrue=float(1 - send_true),
        p_report_fraud=float(report_fraud),
        p_report_honest=float(1 - report_fraud),
        max_severity=severity,
        alias=alias,
    )


def _blacklisted(name, hi, alias=None):
    return TrustStateDef(name, 0, hi, 0.0, 0.0, 0.0, 0.0, None, blacklisted=True, alias=alias)


_MINOR, _MODERATE, _SEVERE = Severity.Minor, Severity.Moderate, Severity.Severe


def _four_state():
    return (
        _blacklisted("SB", 10, alias="Blacklisted"),
        _row("S1", 10, 50, "0.40", "0.60", _MINOR, alias="Bad"),
        _row("S2", 50, 60, "0.50", "0.5", _SEVERE, alias="Normal"),
        _row("S3", 60, 90, "0.80", "0.2", _SEVERE, alias="Good"),
    )


def _six_state():
    return (
        _blacklisted("Blacklisted", 10),
        _row("Very Bad", 10, 30, "0.1", "0.9", _MINOR),
        _row("Bad", 30, 49, "0.2", "0.7", _MINOR),
        _row("Normal", 49, 60, "0.4", "0.5", _SEVERE),
        _row("Good", 60, 75, "0.6", "0.3", _SEVERE),
        _row("Very Good", 75, 90, "0.8", "0.1", _SEVERE),
    )


def _eleven_state():
    return (
        _blacklisted("Blacklisted", 10),
        _row("Very Bad", 10, 20, "0.1", "0.9", _MINOR),
        _row("Bad", 20, 30, "0.2", "0.8", _MINOR),
        _row("Fairly Bad", 30, 40, "0.3", "0.7", _MODERATE),
        _row("Below Normal", 40, 50, "0.4", "0.6", _MODERATE),
        _row("Normal", 50, 55, "0.5", "0.55", _SEVERE),
        _row("Above Normal", 55, 65, "0.6", "0.5", _SEVERE),
        _row("Fairly Good", 65, 75, "0.7", "0.4", _SEVERE),
        _row("Good", 75, 83, "0.8", "0.3", _SEVERE),
        _row("Very Good", 83, 88, "0.85", "0.2", _SEVERE),
        _row("Outstanding", 88, 90, "0.95", "0.1", _SEVERE),
    )


_BUILTINS = {
    ModelKind.FourState: _four_state,
    ModelKind.SixState: _six_state,
    ModelKind.ElevenState: _eleven_state,
}

_EXPECTED_COUNTS = {ModelKind.FourState: 4, ModelKind.SixState: 6, ModelKind.ElevenState: 11}


def builtin_model(kind) -> TrustModel:
    kind = ModelKind(kind)
    if kind not in _BUILTINS:
        raise ValueError(f"no builtin model for {kind.value}")
    model = TrustModel(kind=kind, states=_BUILTINS[kind](), blacklist_threshold=10)
    problems = validate_model(model)
    if problems:  # pragma: no cover - guarded by tests
        raise InvalidModel(problems)
    return model


def _dsum(a, b) -> Decimal:
    return Decimal(str(a)) + Decimal(str(b))


def validate_model(model: TrustModel) -> list[str]:
    """Return every invariant the model violates; an empty list means valid."""
    out = []
    states = model.states
    if not states:
        return ["model has no states"]

    expected = _EXPECTED_COUNTS.get(model.kind)
    if expected is not None and len(states) != expected:
        out.append(f"{model.kind.value} model must have {expected} states, has {len(states)}")

    seen = set()
    for s in states:
        if s.name in seen:
            out.append(f"duplicate state name {s.name!r}")
        seen.add(s.name)

    for s in states:
        if s.bin_lo >= s.bin_hi:
            out.append(f"state {s.name!r}: empty bin [{s.bin_lo},{s.bin_hi})")
    if states[0].bin_lo != MIN_TRUST:
        out.append(f"bins leave [0,{states[0].bin_lo}) uncovered")
    for a, b in zip(states, states[1:]):
        if a.bin_hi < b.bin_lo:
            out.append(f"gap between {a.name!r} and {b.name!r} at [{a.bin_hi},{b.bin_lo})")
        elif a.bin_hi > b.bin_lo:
            out.append(f"overlap between {a.name!r} and {b.name!r} at [{b.bin_lo},{a.bin_hi})")
    if states[-1].bin_hi != MAX_TRUST:
        out.append(f"top bin ends at {states[-1].bin_hi}, must end at {MAX_TRUST}")

    black = [s for s in states if s.blacklisted]
    if len(black) != 1:
        out.append(f"exactly one blacklisted state required, found {len(black)}")
    elif black[0] is not states[0]:
        out.append(f"blacklisted state {black[0].name!r} must own the lowest bin")
    elif black[0].bin_hi != model.blacklist_threshold:
        out.append(
            f"blacklisted bin ends at {black[0].bin_hi} but blacklist_threshold is "
            f"{model.blacklist_threshold}"
        )

    for s in states:
        probs = (s.p_send_true, s.p_send_untrue, s.p_report_fraud, s.p_report_honest)
        if any(not 0 <= p <= 1 for p in probs):
            out.append(f"state {s.name!r}: probability outside [0, 1]")
        if s.blacklisted:
            if any(p != 0 for p in probs):
                out.append(f"blacklisted state {s.name!r} must have all probabilities 0")
            if s.max_severity is not None:
                out.append(f"blacklisted state {s.name!r} must not permit announcements")
            continue
        if _dsum(s.p_send_true, s.p_send_untrue) != 1:
            out.append(f"state {s.name!r}: sender probabilities sum to "
                       f"{_dsum(s.p_send_true, s.p_send_untrue)}, not 1")
        if _dsum(s.p_report_fraud, s.p_report_honest) != 1:
            out.append(f"state {s.name!r}: reporter probabilities sum to "
                       f"{_dsum(s.p_report_fraud, s.p_report_honest)}, not 1")
    return out


def state_of(model: TrustModel, trust: int) -> str:
    if not MIN_TRUST <= trust <= MAX_TRUST:
        raise ValueError(f"trust {trust} outside [0, 90] hundredths")
    name = model._lookup[trust]
    if name is None:
        raise UnknownState(f"trust {fmt_trust(trust)} falls in no bin")
    return name


def apply_adjustment(trust: int, adj: TrustAdjustment, model: TrustModel):
    """Apply an RSU reward or punishment.

    Returns ``(new_trust, old_state, new_state)``; the caller records a
    transition when the two states differ.
    """
    if adj.cause is Cause.ClarifyingReward:
        raise ClarifyingRewardNotApplicable("clarifying rewards are logged, never added")
    new = clamp(trust + adj.delta)
    return new, state_of(model, trust), state_of(model, new)


def can_announce(model: TrustModel, state: str, severity: Severity) -> bool:
    s = model.state(state)
    return s.max_severity is not None and Severity(severity) <= s.max_severity


def with_bins(model: TrustModel, bins) -> TrustModel:
    """Copy of ``model`` with new ``(bin_lo, bin_hi)`` pairs, one per state."""
    bins = list(bins)
    if len(bins) != len(model.states):
        raise ValueError("need one bin per state")
    states = [replace(s, bin_lo=lo, bin_hi=hi) for s, (lo, hi) in zip(model.states, bins)]
    return TrustModel(kind=model.kind, states=states, blacklist_threshold=states[0].bin_hi)


# -- JSON -------------------------------------------------------------------

def model_to_dict(model: TrustModel) -> dict:
    return {
        "kind": model.kind.value,
        "blacklist_threshold": model.blacklist_threshold,
        "states": [
            {
                "name": s.name,
                "alias": s.alias,
                "bin_lo": s.bin_lo,
                "bin_hi": s.bin_hi,
                "blacklisted": s.blacklisted,
                "p_send_true": s.p_send_true,
                "p_send_untrue": s.p_send_untrue,
                "p_report_fraud": s.p_report_fraud,
                "p_report_honest": s.p_report_honest,
                "max_severity": s.max_severity.name if s.max_severity else None,
            }
            for s in model.states
        ],
    }


_STATE_KEYS = {
    "name", "alias", "bin_lo", "bin_hi", "blacklisted", "p_send_true", "p_send_untrue",
    "p_report_fraud", "p_report_honest", "max_severity",
}
_REQUIRED_STATE_KEYS = _STATE_KEYS - {"alias", "blacklisted", "max_severity"}


def model_from_dict(data: dict, validate: bool = True) -> TrustModel:
    unknown = set(data) - {"kind", "blacklist_threshold", "states"}
    if unknown:
        raise KeyError(f"unknown model key(s): {', '.join(sorted(unknown))}")
    states = []
    for i, row in enumerate(data["states"]):
        extra = set(row) - _STATE_KEYS
        if extra:
            raise KeyError(f"states[{i}]: unknown key(s): {', '.join(sorted(extra))}")
        missing = _REQUIRED_STATE_KEYS - set(row)
        if missing:
            raise KeyError(f"states[{i}]: missing key(s): {', '.join(sorted(missing))}")
        sev = row.get("max_severity")
        states.append(TrustStateDef(
            name=row["name"],
            alias=row.get("alias"),
            bin_lo=int(row["bin_lo"]),
            bin_hi=int(row["bin_hi"]),
            blacklisted=bool(row.get("blacklisted", False)),
            p_send_true=float(row["p_send_true"]),
            p_send_untrue=float(row["p_send_untrue"]),
            p_report_fraud=float(row["p_report_fraud"]),
            p_report_honest=float(row["p_report_honest"]),
            max_severity=Severity[sev] if sev is not None else None,
        ))
    model = TrustModel(
        kind=ModelKind(data.get("kind", "Custom")),
        states=states,
        blacklist_threshold=int(data.get("blacklist_threshold", states[0].bin_hi if states else 10)),
    )
    if validate:
        problems = validate_model(model)
        if problems:
            raise InvalidModel(problems)
    return model


def load_model(path) -> TrustModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def dump_model(model: TrustModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")
