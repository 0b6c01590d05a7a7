"""RSU dispute resolution: feedback collection, weighted vote, reward/punishment."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .behavior import Report
from .errors import (AlreadyResolved, ConflictOfInterest, DisputeError, DuplicateClarifier,
                     DuplicateDispute, WindowClosed)
from .rng import RngStream
from .trust import Cause, TrustAdjustment, fmt_trust


class Outcome(str, enum.Enum):
    SenderTruthful = "SenderTruthful"
    SenderUntruthful = "SenderUntruthful"
    Unresolved = "Unresolved"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    weighted_sum: int  # hundredths
    overridden: bool = False

    @classmethod
    def from_sum(cls, weighted_sum: int) -> "Verdict":
        if weighted_sum > 0:
            return cls(Outcome.SenderTruthful, weighted_sum)
        if weighted_sum < 0:
            return cls(Outcome.SenderUntruthful, weighted_sum)
        return cls(Outcome.Unresolved, 0)

    @property
    def weighted_sum_str(self) -> str:
        return fmt_trust(self.weighted_sum)


@dataclass(frozen=True)
class Feedback:
    clarifier: str
    trust: int
    vote: int


@dataclass
class Dispute:
    id: int
    announcement: int
    report: int
    sender: str
    reporter: str
    rsu: int
    opened_at: float
    deadline: float
    feedback: list = field(default_factory=list)
    verdict: Verdict | None = None
    resolved_at: float | None = None


@dataclass(frozen=True)
class DeliveryModel:
    loss_probability: float = 0.0
    delivery_lag: float = 0.0
    hop_limit: int = 3

    def __post_init__(self):
        if not 0 <= self.loss_probability <= 1:
            raise ValueError("loss_probability must be in [0, 1]")
        if self.delivery_lag < 0:
            raise ValueError("delivery_lag must be >= 0")


class RsuNode:
    """A roadside unit holding the disputes it adjudicates."""

    def __init__(self, id: int):
        self.id = id
        self.open: dict[int, Dispute] = {}
        self._seen_reports: set[int] = set()
        self._next_id = 1

    def open_dispute(self, report: Report, sender: str, now: float, timer: float,
                     dispute_id: int | None = None) -> Dispute:
        if timer <= 0:
            raise DisputeError(f"collaboration timer must be positive, got {timer}")
        if report.id in self._seen_reports:
            raise DuplicateDispute(f"report {report.id} already has a dispute at RSU {self.id}")
        if dispute_id is None:
            dispute_id = self._next_id
            self._next_id += 1
        d = Dispute(id=dispute_id, announcement=report.announcement, report=report.id,
                    sender=sender, reporter=report.reporter, rsu=self.id,
                    opened_at=now, deadline=now + timer)
        self._seen_reports.add(report.id)
        self.open[d.id] = d
        return d

    def close(self, dispute: Dispute) -> None:
        self.open.pop(dispute.id, None)


def open_dispute(rsu: RsuNode, report: Report, sender: str, now: float, timer: float,
                 dispute_id: int | None = None) -> Dispute:
    return rsu.open_dispute(report, sender, now, timer, dispute_id)


def add_feedback(dispute: Dispute, clarifier: str, trust: int, vote: int, now: float) -> Dispute:
    """Record a clarifier vote; the clarifier's trust is frozen at vote time."""
    if vote not in (1, -1):
        raise ValueError(f"vote must be +1 or -1, got {vote}")
    if now >= dispute.deadline:
        raise WindowClosed(f"dispute {dispute.id} closed at {dispute.deadline}, vote at {now}")
    if clarifier in (dispute.sender, dispute.reporter):
        raise ConflictOfInterest(f"{clarifier} is a party to dispute {dispute.id}")
    if any(f.clarifier == clarifier for f in dispute.feedback):
        raise DuplicateClarifier(f"{clarifier} already voted in dispute {dispute.id}")
    dispute.feedback.append(Feedback(clarifier, trust, vote))
    return dispute


def weighted_sum(feedback) -> int:
    return sum(f.trust * f.vote for f in feedback)


def resolve_dispute(dispute: Dispute, now: float | None = None) -> Verdict:
    """Sign of sum(trust * vote) decides; zero (including no feedback) is
    Unresolved."""
    if dispute.verdict is not None:
        raise AlreadyResolved(f"dispute {dispute.id} already resolved")
    if now is not None and now < dispute.deadline:
        raise DisputeError(f"dispute {dispute.id} window open until {dispute.deadline}")
    dispute.verdict = Verdict.from_sum(weighted_sum(dispute.feedback))
    dispute.resolved_at = dispute.deadline if now is None else now
    return dispute.verdict


def force_verdict(dispute: Dispute, outcome: Outcome, now: float | None = None) -> Verdict:
    """Scripted override: keep the computed sum for the record, flag it."""
    if dispute.verdict is not None:
        raise AlreadyResolved(f"dispute {dispute.id} already resolved")
    dispute.verdict = Verdict(Outcome(outcome), weighted_sum(dispute.feedback), overridden=True)
    dispute.resolved_at = dispute.deadline if now is None else now
    return dispute.verdict


def allocate_adjustments(verdict: Verdict, dispute: Dispute, reward: int, punishment: int,
                         clarify_reward: int) -> list[TrustAdjustment]:
    if verdict is None:
        raise DisputeError("dispute has no verdict")
    if verdict.outcome is Outcome.Unresolved:
        return []
    if verdict.outcome is Outcome.SenderTruthful:
        out = [TrustAdjustment(dispute.sender, reward, Cause.RsuReward),
               TrustAdjustment(dispute.reporter, -punishment, Cause.RsuPunishment)]
    else:
        out = [TrustAdjustment(dispute.sender, -punishment, Cause.RsuPunishment),
               TrustAdjustment(dispute.reporter, reward, Cause.RsuReward)]
    out += [TrustAdjustment(f.clarifier, clarify_reward, Cause.ClarifyingReward, applied=False)
            for f in dispute.feedback]
    return out


def schedule_delivery(adj: TrustAdjustment, model: DeliveryModel, resolved_at: float,
                      rng: RngStream) -> float | None:
    """Delivery time, or None when the message is lost. One draw per call."""
    lost = rng.random() < model.loss_probability
    return None if lost else resolved_at + model.delivery_lag
