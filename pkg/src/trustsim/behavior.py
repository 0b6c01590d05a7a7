"""Stochastic driver behaviour: senders, reporters, clarifiers."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import EmptyPool
from .rng import RngStream
from .trust import MAX_TRUST, MIN_TRUST, Severity, TrustModel, can_announce, state_of


class Role(str, enum.Enum):
    Sender = "Sender"
    Reporter = "Reporter"
    Clarifier = "Clarifier"


class SenderAction(str, enum.Enum):
    AnnounceTrue = "AnnounceTrue"
    AnnounceUntrue = "AnnounceUntrue"
    Silent = "Silent"


@dataclass
class DriverAgent:
    id: str
    trust: int
    model: TrustModel
    roles: frozenset = field(default_factory=lambda: frozenset({Role.Clarifier}))

    def __post_init__(self):
        if not MIN_TRUST <= self.trust <= MAX_TRUST:
            raise ValueError(f"{self.id}: trust {self.trust} outside [0, 90]")
        self.roles = frozenset(Role(r) for r in self.roles)

    @property
    def state(self) -> str:
        return state_of(self.model, self.trust)

    @property
    def state_def(self):
        return self.model.state(self.state)

    @property
    def blacklisted(self) -> bool:
        return self.state_def.blacklisted


@dataclass(frozen=True)
class Announcement:
    id: int
    sender: str
    time: float
    severity: Severity
    ground_truth: bool


@dataclass(frozen=True)
class Report:
    id: int
    reporter: str
    announcement: int
    time: float
    fraudulent: bool


def decide_sender_action(agent: DriverAgent, severity: Severity, rng: RngStream) -> SenderAction:
    """Silent when the agent's state may not announce ``severity``; otherwise
    one draw against the state's truthful-announcement probability."""
    if not can_announce(agent.model, agent.state, severity):
        return SenderAction.Silent
    if rng.random() < agent.state_def.p_send_true:
        return SenderAction.AnnounceTrue
    return SenderAction.AnnounceUntrue


def decide_reporter_action(agent: DriverAgent, ann: Announcement, rng: RngStream,
                           report_id: int = 0, delay: float = 0.0) -> Report | None:
    """A report against a true announcement is fraudulent; against a false one
    it is honest. Each uses its own per-state probability."""
    if agent.id == ann.sender:
        raise ValueError("a sender cannot report its own announcement")
    sdef = agent.state_def
    if sdef.blacklisted:
        return None
    p = sdef.p_report_fraud if ann.ground_truth else sdef.p_report_honest
    if rng.random() < p:
        return Report(id=report_id, reporter=agent.id, announcement=ann.id,
                      time=ann.time + delay, fraudulent=ann.ground_truth)
    return None


def decide_clarifier_vote(agent: DriverAgent, ann: Announcement, honesty: float,
                          rng: RngStream) -> int:
    if not 0 <= honesty <= 1:
        raise ValueError(f"honesty {honesty} outside [0, 1]")
    truthful = 1 if ann.ground_truth else -1
    return truthful if rng.random() < honesty else -truthful


def select_candidate_reporter(reporters, ann: Announcement, rng: RngStream) -> str:
    reporters = list(reporters)
    if not reporters:
        raise EmptyPool(f"no eligible reporter for announcement {ann.id}")
    return reporters[rng.randbelow(len(reporters))]


def sample_pool(candidates, k: int, rng: RngStream) -> list:
    """Uniform sample of ``min(k, len(candidates))`` items without replacement,
    in draw order (partial Fisher-Yates)."""
    pool = list(candidates)
    k = min(k, len(pool))
    for i in range(k):
        j = i + rng.randbelow(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
