"""Discrete-event scenario runner.

One sender announces at fixed slots. For each announcement a candidate
reporter may complain to an RSU, which polls clarifiers for the length of the
collaboration timer, resolves by weighted vote, and broadcasts reward and
punishment messages that may be lost. Everything random is drawn from
counter-based streams keyed by slot and vehicle, so a scripted override at one
slot never shifts the draws of another.
"""
from __future__ import annotations

import heapq
import json
from collections import Counter
from dataclasses import dataclass, field

from .behavior import (Announcement, DriverAgent, Report, Role, SenderAction,
                       decide_clarifier_vote, decide_reporter_action, decide_sender_action,
                       sample_pool, select_candidate_reporter)
from .config import UNSET, ScenarioConfig, config_from_dict
from .dispute import (Dispute, Outcome, RsuNode, Verdict, add_feedback, allocate_adjustments,
                      force_verdict, resolve_dispute, schedule_delivery)
from .errors import InvalidConfig, UnknownVehicleInScript
from .rng import RngStream
from .trust import Cause, apply_adjustment, can_announce

ANNOUNCE, REPORT, CLARIFY, RESOLVE, DELIVER = range(5)
EVENT_NAMES = ("Announce", "Report", "ClarifyRequest", "Resolve", "DeliverAdjustment")


def _ctr(slot: int, vidx: int = 0, j: int = 0) -> int:
    return (slot << 32) | (vidx << 12) | j


@dataclass(frozen=True)
class SimEvent:
    time: float
    kind: int
    payload_id: int
    seq: int
    payload: object = field(compare=False, default=None)

    def key(self):
        return (self.time, self.kind, self.payload_id, self.seq)

    def __lt__(self, other):
        return self.key() < other.key()


@dataclass
class TrustTrajectory:
    vehicle: str
    samples: list = field(default_factory=list)      # (time, trust, state)
    transitions: list = field(default_factory=list)  # (time, from, to)

    @property
    def initial(self) -> int:
        return self.samples[0][1]

    @property
    def final(self) -> int:
        return self.samples[-1][1]

    @property
    def final_state(self) -> str:
        return self.samples[-1][2]


@dataclass
class AdjustmentRecord:
    id: int
    dispute: int
    slot: int
    target: str
    delta: int
    cause: Cause
    applied: bool
    resolved_at: float
    delivered_at: float | None = None
    lost: bool = False
    trust_before: int | None = None
    trust_after: int | None = None

    @property
    def clamped(self) -> bool:
        return (self.trust_before is not None
                and self.trust_after != self.trust_before + self.delta)

    @property
    def landed(self) -> bool:
        return self.trust_after is not None


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    time: float
    sender_state: str
    action: SenderAction
    scripted: bool


@dataclass(frozen=True)
class SlotDecisions:
    ground_truth: bool
    reporters: tuple
    verdict: Outcome | None
    delivery: dict
    scripted: bool


@dataclass
class SimResult:
    config: ScenarioConfig
    trajectories: dict
    slots: list
    announcements: list
    reports: list
    disputes: list
    adjustments: list

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def model(self):
        return self.config.model

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.seed,
            "slots": [{"slot": s.slot, "time": s.time, "sender_state": s.sender_state,
                       "action": s.action.value, "scripted": s.scripted} for s in self.slots],
            "announcements": [{"id": a.id, "sender": a.sender, "time": a.time,
                               "severity": a.severity.name, "ground_truth": a.ground_truth}
                              for a in self.announcements],
            "reports": [{"id": r.id, "reporter": r.reporter, "announcement": r.announcement,
                         "time": r.time, "fraudulent": r.fraudulent} for r in self.reports],
            "disputes": [_dispute_dict(d) for d in self.disputes],
            "adjustments": [_adjustment_dict(a) for a in self.adjustments],
            "trajectories": {
                v: {"samples": [list(s) for s in t.samples],
                    "transitions": [list(x) for x in t.transitions]}
                for v, t in self.trajectories.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "SimResult":
        from .behavior import Severity
        from .dispute import Feedback
        cfg = config_from_dict(data["config"])
        slots = [SlotRecord(s["slot"], s["time"], s["sender_state"], SenderAction(s["action"]),
                            s["scripted"]) for s in data["slots"]]
        anns = [Announcement(a["id"], a["sender"], a["time"], Severity[a["severity"]],
                             a["ground_truth"]) for a in data["announcements"]]
        reps = [Report(**r) for r in data["reports"]]
        disputes = []
        for d in data["disputes"]:
            v = d["verdict"]
            disputes.append(Dispute(
                id=d["id"], announcement=d["announcement"], report=d["report"],
                sender=d["sender"], reporter=d["reporter"], rsu=d["rsu"],
                opened_at=d["opened_at"], deadline=d["deadline"],
                feedback=[Feedback(*f) for f in d["feedback"]],
                verdict=(Verdict(Outcome(v["outcome"]), v["weighted_sum"], v["overridden"])
                         if v else None),
                resolved_at=d["resolved_at"],
            ))
        adjs = [AdjustmentRecord(**{**a, "cause": Cause(a["cause"])}) for a in data["adjustments"]]
        trajs = {v: TrustTrajectory(v, [tuple(s) for s in t["samples"]],
                                    [tuple(x) for x in t["transitions"]])
                 for v, t in data["trajectories"].items()}
        return cls(cfg, trajs, slots, anns, reps, disputes, adjs)

    @classmethod
    def from_json(cls, text: str) -> "SimResult":
        return cls.from_dict(json.loads(text))


def _dispute_dict(d: Dispute) -> dict:
    v = d.verdict
    return {
        "id": d.id, "announcement": d.announcement, "report": d.report, "sender": d.sender,
        "reporter": d.reporter, "rsu": d.rsu, "opened_at": d.opened_at, "deadline": d.deadline,
        "feedback": [[f.clarifier, f.trust, f.vote] for f in d.feedback],
        "verdict": ({"outcome": v.outcome.value, "weighted_sum": v.weighted_sum,
                     "overridden": v.overridden} if v else None),
        "resolved_at": d.resolved_at,
    }


def _adjustment_dict(a: AdjustmentRecord) -> dict:
    return {
        "id": a.id, "dispute": a.dispute, "slot": a.slot, "target": a.target,
        "delta": a.delta, "cause": a.cause.value, "applied": a.applied,
        "resolved_at": a.resolved_at, "delivered_at": a.delivered_at, "lost": a.lost,
        "trust_before": a.trust_before, "trust_after": a.trust_after,
    }


def build_schedule(cfg: ScenarioConfig) -> list:
    """Announcement times: multiples of the interval strictly after warm-up,
    keeping only slots whose dispute window closes within the run."""
    times = []
    k = 1
    while True:
        t = k * cfg.announcement_interval
        if t + cfg.report_delay + cfg.collaboration_timer > cfg.duration:
            break
        if t > cfg.warmup:
            times.append(t)
        k += 1
    return times


def apply_script(cfg: ScenarioConfig, slot: int, ground_truth: bool,
                 reporters: tuple) -> SlotDecisions:
    """Merge the script entry for ``slot`` (if any) over the seeded draws."""
    step = cfg.script_step(slot)
    if step is None:
        return SlotDecisions(ground_truth, tuple(reporters), None, {}, False)
    known = set(cfg.vehicles)
    bad = [v for v in [step.reporter, *step.delivery] if v not in (UNSET, None) and v not in known]
    if bad:
        raise UnknownVehicleInScript([(f"script.slot{slot}", f"unknown vehicle {v!r}")
                                      for v in bad])
    if step.ground_truth is not None:
        ground_truth = step.ground_truth
    if step.reporter is not UNSET:
        reporters = () if step.reporter is None else (step.reporter,)
    return SlotDecisions(ground_truth, tuple(reporters), step.verdict, dict(step.delivery), True)


class _Run:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.model = cfg.model
        self.vehicles = cfg.vehicles
        self.vidx = {v: i for i, v in enumerate(self.vehicles)}
        self.agents = {}
        for v in self.vehicles:
            roles = {Role.Clarifier}
            if v == cfg.sender:
                roles.add(Role.Sender)
            if v in cfg.reporters:
                roles.add(Role.Reporter)
            self.agents[v] = DriverAgent(v, self._initial_trust(v), self.model, frozenset(roles))
        self.traj = {v: TrustTrajectory(v, [(0, a.trust, a.state)]) for v, a in self.agents.items()}
        self.rsus = [RsuNode(i + 1) for i in range(cfg.rsu_count)]
        self.queue = []
        self.seq = 0
        self.slots, self.anns, self.reports, self.disputes, self.adjs = [], [], [], [], []
        self.decisions = {}
        self.report_slot = {}

    def _initial_trust(self, v):
        cfg = self.cfg
        if v in cfg.initial_trust:
            return cfg.initial_trust[v]
        if cfg.initial_trust_range is not None:
            lo, hi = cfg.initial_trust_range
            return lo + RngStream(cfg.seed, v, "init").randbelow(hi - lo + 1)
        return cfg.default_trust

    def push(self, time, kind, payload_id, payload):
        self.seq += 1
        heapq.heappush(self.queue, SimEvent(time, kind, payload_id, self.seq, payload))

    def run(self) -> SimResult:
        for slot, t in enumerate(build_schedule(self.cfg), start=1):
            self.push(t, ANNOUNCE, slot, slot)
        handlers = (self.on_announce, self.on_report, self.on_clarify, self.on_resolve,
                    self.on_deliver)
        while self.queue and self.queue[0].time <= self.cfg.duration:
            ev = heapq.heappop(self.queue)
            handlers[ev.kind](ev.time, ev.payload)
        return SimResult(self.cfg, self.traj, self.slots, self.anns, self.reports,
                         self.disputes, self.adjs)

    # -- handlers -------------------------------------------------------------

    def _eligible_reporter(self, agent):
        if agent.blacklisted:
            return False
        if self.cfg.gate_reports:
            return can_announce(self.model, agent.state, self.cfg.severity)
        return True

    def on_announce(self, now, slot):
        cfg = self.cfg
        sender = self.agents[cfg.sender]
        action = decide_sender_action(sender, cfg.severity,
                                      RngStream(cfg.seed, sender.id, "send", _ctr(slot)))
        step = cfg.script_step(slot)
        self.slots.append(SlotRecord(slot, now, sender.state, action, step is not None))
        if action is SenderAction.Silent:
            return
        provisional = Announcement(slot, sender.id, now, cfg.severity,
                                   action is SenderAction.AnnounceTrue)
        # draws are consumed whether or not the script overrides them
        drawn_truth = provisional.ground_truth
        eligible = [r for r in cfg.reporters if self._eligible_reporter(self.agents[r])]
        if cfg.reporter_mode == "single":
            candidates = []
            if eligible:
                sel = RngStream(cfg.seed, "rsu", "select", _ctr(slot))
                candidates = [select_candidate_reporter(eligible, provisional, sel)]
        else:
            candidates = eligible
        drawn = []
        for r in candidates:
            rng = RngStream(cfg.seed, r, "report", _ctr(slot))
            if decide_reporter_action(self.agents[r], provisional, rng) is not None:
                drawn.append(r)

        dec = apply_script(cfg, slot, drawn_truth, tuple(drawn))
        ann = Announcement(slot, sender.id, now, cfg.severity, dec.ground_truth)
        self.anns.append(ann)
        self.decisions[slot] = dec
        for r in dec.reporters:
            if self.agents[r].blacklisted:
                continue
            rep = Report(len(self.reports) + 1, r, ann.id, now + cfg.report_delay,
                         fraudulent=ann.ground_truth)
            self.reports.append(rep)
            self.report_slot[rep.id] = slot
            self.push(rep.time, REPORT, rep.id, (rep, ann))

    def on_report(self, now, payload):
        rep, ann = payload
        rsu = self.rsus[len(self.disputes) % len(self.rsus)]
        d = rsu.open_dispute(rep, ann.sender, now, self.cfg.collaboration_timer,
                             dispute_id=len(self.disputes) + 1)
        self.disputes.append(d)
        self.push(now, CLARIFY, d.id, (d, ann, rsu))

    def on_clarify(self, now, payload):
        d, ann, rsu = payload
        cfg = self.cfg
        slot = ann.id
        ridx = self.vidx[d.reporter]
        pool = [v for v in self.vehicles
                if v not in (d.sender, d.reporter) and not self.agents[v].blacklisted]
        chosen = sample_pool(pool, cfg.clarifier_pool_size,
                             RngStream(cfg.seed, "rsu", "pool", _ctr(slot, ridx)))
        for c in chosen:
            agent = self.agents[c]
            vote = decide_clarifier_vote(agent, ann, cfg.clarifier_honesty,
                                         RngStream(cfg.seed, c, "clarify", _ctr(slot, ridx)))
            add_feedback(d, c, agent.trust, vote, now)
        self.push(d.deadline, RESOLVE, d.id, (d, rsu, slot))

    def on_resolve(self, now, payload):
        d, rsu, slot = payload
        cfg = self.cfg
        dec = self.decisions[slot]
        if dec.verdict is not None:
            verdict = force_verdict(d, dec.verdict, now)
        else:
            verdict = resolve_dispute(d, now)
        rsu.close(d)
        ridx = self.vidx[d.reporter]
        for adj in allocate_adjustments(verdict, d, cfg.reward, cfg.punishment, cfg.clarify_reward):
            rec = AdjustmentRecord(len(self.adjs) + 1, d.id, slot, adj.target, adj.delta,
                                   adj.cause, adj.applied, now)
            self.adjs.append(rec)
            if not adj.applied:
                continue
            rng = RngStream(cfg.seed, adj.target, "delivery", _ctr(slot, ridx))
            at = schedule_delivery(adj, cfg.delivery, now, rng)
            if adj.target in dec.delivery:
                at = dec.delivery[adj.target]
                if at is not None and at < now:
                    raise InvalidConfig([(f"script.slot{slot}.delivery.{adj.target}",
                                          f"delivery at {at} precedes resolution at {now}")])
            if at is None:
                rec.lost = True
            else:
                self.push(at, DELIVER, rec.id, (rec, adj))

    def on_deliver(self, now, payload):
        rec, adj = payload
        agent = self.agents[rec.target]
        new, old_state, new_state = apply_adjustment(agent.trust, adj, self.model)
        rec.delivered_at = now
        rec.trust_before = agent.trust
        rec.trust_after = new
        agent.trust = new
        tr = self.traj[rec.target]
        tr.samples.append((now, new, new_state))
        if old_state != new_state:
            tr.transitions.append((now, old_state, new_state))


def run_scenario(cfg: ScenarioConfig) -> SimResult:
    cfg.validate()
    return _Run(cfg).run()


def summarize(result: SimResult) -> dict:
    """Final trust/state and transition count per vehicle, dispute tallies,
    lost-message count."""
    vehicles = {}
    for v, t in result.trajectories.items():
        vehicles[v] = {
            "initial_trust": t.initial,
            "final_trust": t.final,
            "final_state": t.final_state,
            "transitions": len(t.transitions),
        }
    outcomes = Counter(d.verdict.outcome.value for d in result.disputes if d.verdict)
    return {
        "seed": result.seed,
        "model": result.model.kind.value,
        "announcements": len(result.announcements),
        "silent_slots": sum(s.action is SenderAction.Silent for s in result.slots),
        "reports": len(result.reports),
        "disputes": len(result.disputes),
        "outcomes": {o.value: outcomes.get(o.value, 0) for o in Outcome},
        "lost_adjustments": sum(a.lost for a in result.adjustments),
        "total_transitions": sum(len(t.transitions) for t in result.trajectories.values()),
        "vehicles": vehicles,
    }


def ledger_check(result: SimResult) -> dict:
    """Per vehicle: (initial + sum of landed deltas, final, clamped?)."""
    sums = {v: t.initial for v, t in result.trajectories.items()}
    clamped = {v: False for v in result.trajectories}
    for a in result.adjustments:
        if a.landed:
            sums[a.target] += a.delta
            clamped[a.target] |= a.clamped
    return {v: (sums[v], result.trajectories[v].final, clamped[v]) for v in sums}

