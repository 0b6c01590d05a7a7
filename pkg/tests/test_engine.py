from dataclasses import replace

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from trustsim.behavior import SenderAction
from trustsim.config import ScenarioConfig, ScriptedStep, config_from_dict
from trustsim.dispute import DeliveryModel, Outcome
from trustsim.engine import (SimResult, apply_script, build_schedule, ledger_check, run_scenario,
                             summarize)
from trustsim.errors import InvalidConfig, UnknownVehicleInScript
from trustsim.trust import Cause, MAX_TRUST, builtin_model, can_announce

from conftest import load


def small(**kw):
    base = dict(vehicle_count=12, model=builtin_model("ElevenState"), default_trust=70)
    base.update(kw)
    return ScenarioConfig(**base)


# -- schedule ---------------------------------------------------------------------

def test_default_schedule():
    assert build_schedule(ScenarioConfig()) == [500 * k for k in range(1, 10)]


def test_schedule_edge_cases():
    assert build_schedule(ScenarioConfig(duration=400, warmup=300)) == []
    assert build_schedule(ScenarioConfig(announcement_interval=5000)) == []
    # slots at or before warm-up are skipped
    assert build_schedule(ScenarioConfig(announcement_interval=200))[0] == 600


@given(st.integers(1, 50).map(lambda k: k * 100), st.integers(0, 3000), st.integers(1, 300))
def test_schedule_rule(interval, warmup, timer):
    cfg = ScenarioConfig(announcement_interval=interval, warmup=warmup, collaboration_timer=timer,
                         duration=5000)
    times = build_schedule(cfg)
    assert all(t > warmup and t % interval == 0 and t + timer <= 5000 for t in times)
    assert times == sorted(set(times))


# -- script merge ------------------------------------------------------------------

def test_apply_script_overrides():
    cfg = ScenarioConfig(script=(ScriptedStep(1, ground_truth=False),
                                 ScriptedStep(2, reporter=None),
                                 ScriptedStep(3, verdict=Outcome.SenderTruthful)))
    assert apply_script(cfg, 1, True, ("V3",)).ground_truth is False
    assert apply_script(cfg, 1, True, ("V3",)).reporters == ("V3",)
    assert apply_script(cfg, 2, True, ("V3",)).reporters == ()
    assert apply_script(cfg, 3, True, ()).verdict is Outcome.SenderTruthful
    assert not apply_script(cfg, 4, True, ()).scripted


def test_apply_script_unknown_vehicle():
    cfg = replace(ScenarioConfig(vehicle_count=6), script=(ScriptedStep(1, reporter="V77"),))
    with pytest.raises(UnknownVehicleInScript):
        apply_script(cfg, 1, True, ())


def test_forced_verdict_with_empty_pool():
    cfg = small(clarifier_pool_size=0,
                script=(ScriptedStep(1, ground_truth=False, reporter="V1",
                                     verdict=Outcome.SenderTruthful),))
    r = run_scenario(cfg)
    d = r.disputes[0]
    assert d.feedback == [] and d.verdict.overridden and d.verdict.weighted_sum == 0
    assert d.verdict.outcome is Outcome.SenderTruthful


def test_unforced_empty_pool_is_unresolved():
    cfg = small(clarifier_pool_size=0, script=(ScriptedStep(1, reporter="V1"),))
    r = run_scenario(cfg)
    assert r.disputes[0].verdict.outcome is Outcome.Unresolved
    assert not [a for a in r.adjustments if a.slot == 1]


def test_scripted_ground_truth_false_is_untrue():
    cfg = small(script=(ScriptedStep(1, ground_truth=False, reporter=None),))
    assert run_scenario(cfg).announcements[0].ground_truth is False


def test_late_scripted_delivery_rejected():
    cfg = small(script=(ScriptedStep(1, reporter="V1", delivery={"V0": 600}),))
    with pytest.raises(InvalidConfig, match="precedes resolution"):
        run_scenario(cfg)


def test_lost_delivery():
    cfg = small(script=(ScriptedStep(1, ground_truth=True, reporter="V1", delivery={"V0": None}),))
    r = run_scenario(cfg)
    first = [a for a in r.adjustments if a.slot == 1 and a.applied]
    assert [(a.target, a.lost, a.delivered_at) for a in first] == [("V0", True, None),
                                                                   ("V1", False, 620)]
    assert all(t != 620 for t, _, _ in r.trajectories["V0"].samples)


# -- replays -------------------------------------------------------------------------

def test_fig09_replay():
    r = run_scenario(load("fig09.json"))
    assert r.trajectories["V0"].transitions == [(620, "Normal", "Bad")]
    assert r.trajectories["V5"].transitions == [(620, "Normal", "Good")]
    s = summarize(r)
    assert s["announcements"] == 1 and s["silent_slots"] == 8 and s["total_transitions"] == 2


def test_empty_schedule_run():
    r = run_scenario(ScenarioConfig(duration=400, warmup=300, vehicle_count=10))
    s = summarize(r)
    assert s["total_transitions"] == 0 and s["disputes"] == 0 and r.announcements == []


# -- properties of unscripted runs -------------------------------------------------------

configs = st.builds(
    lambda kind, seed, n, lo, span, loss, mode, honesty: small(
        model=builtin_model(kind), seed=seed, vehicle_count=n,
        initial_trust_range=(lo, min(MAX_TRUST, lo + span)),
        delivery=DeliveryModel(loss_probability=loss), reporter_mode=mode,
        clarifier_honesty=honesty),
    st.sampled_from(["FourState", "SixState", "ElevenState"]),
    st.integers(0, 10_000), st.integers(7, 30), st.integers(0, 90), st.integers(0, 90),
    st.sampled_from([0.0, 0.2]), st.sampled_from(["single", "independent"]),
    st.sampled_from([1.0, 0.7]),
)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(configs)
def test_run_invariants(cfg):
    r = run_scenario(cfg)
    model = cfg.model
    for v, t in r.trajectories.items():
        assert all(0 <= trust <= MAX_TRUST for _, trust, _ in t.samples)
        times = [s[0] for s in t.samples]
        assert times == sorted(times) and times[-1] <= cfg.duration
    for s in r.slots:
        if s.action is not SenderAction.Silent:
            assert can_announce(model, s.sender_state, cfg.severity)
    reports = {rep.id: rep for rep in r.reports}
    anns = {a.id: a for a in r.announcements}
    for rep in r.reports:
        assert rep.reporter != cfg.sender
        assert rep.fraudulent == anns[rep.announcement].ground_truth
    for d in r.disputes:
        assert all(f.trust >= model.blacklist_threshold for f in d.feedback)
        applied = [a for a in r.adjustments if a.dispute == d.id and a.applied]
        if d.verdict.outcome is Outcome.Unresolved:
            assert applied == []
        else:
            assert sorted(a.target for a in applied) == sorted([d.sender, d.reporter])
        rep = reports[d.report]
        assert anns[rep.announcement].time <= rep.time <= d.opened_at < d.resolved_at
        assert d.resolved_at == d.opened_at + cfg.collaboration_timer
        assert all(f.clarifier not in (d.sender, d.reporter) for f in d.feedback)
    for a in r.adjustments:
        assert a.applied == (a.cause is not Cause.ClarifyingReward)
        if a.delivered_at is not None:
            assert a.delivered_at >= a.resolved_at
    for v, (expected, final, clamped) in ledger_check(r).items():
        if not clamped:
            assert expected == final


@settings(max_examples=15, deadline=None)
@given(configs)
def test_result_json_roundtrip(cfg):
    r = run_scenario(cfg)
    assert SimResult.from_json(r.to_json()).to_json() == r.to_json()


def test_deterministic():
    cfg = ScenarioConfig(seed=42)
    assert run_scenario(cfg).to_json() == run_scenario(cfg).to_json()


def test_seed_changes_outcome():
    a = run_scenario(small(seed=1, default_trust=60)).to_json()
    b = run_scenario(small(seed=2, default_trust=60)).to_json()
    assert a != b


def test_initial_trust_range():
    cfg = config_from_dict({"vehicle_count": 40, "initial_trust_range": [0.5, 0.9]})
    r = run_scenario(cfg)
    init = [t.initial for t in r.trajectories.values()]
    assert min(init) >= 50 and max(init) <= 90 and len(set(init)) > 5


def test_blacklisted_reporter_never_files():
    cfg = small(initial_trust={"V1": 5}, script=(ScriptedStep(1, reporter="V1"),))
    r = run_scenario(cfg)
    assert all(rep.reporter != "V1" for rep in r.reports)
