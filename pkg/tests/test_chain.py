import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from trustsim.chain import (compare_models, empirical_transition_matrix, granularity_metrics,
                            has_periodic_class, result_transitions, stationary_distribution,
                            stationary_distributions)
from trustsim.config import ScenarioConfig
from trustsim.engine import TrustTrajectory, run_scenario
from trustsim.errors import MismatchedConfigs, NoConvergence, UnknownState
from trustsim.trust import builtin_model

from conftest import load
from oracles import direct_stationary, grid_matrices

SIX = builtin_model("SixState")


def test_empty_log():
    tm = empirical_transition_matrix([], SIX)
    assert tm.total == 0
    assert np.array_equal(tm.probabilities, np.eye(6))


def test_hand_count():
    tm = empirical_transition_matrix([("Normal", "Good"), ("Good", "Normal"), ("Normal", "Good")], SIX)
    n, g = SIX.index("Normal"), SIX.index("Good")
    assert tm.counts[n, g] == 2 and tm.counts[g, n] == 1 and tm.total == 3
    assert tm.probabilities[n, g] == 1.0


def test_unknown_state():
    with pytest.raises(UnknownState):
        empirical_transition_matrix([("Normal", "Heroic")], SIX)


def test_fig09_log():
    r = run_scenario(load("fig09.json"))
    tm = empirical_transition_matrix(result_transitions([r]), r.model)
    assert tm.total == 2
    assert tm.counts[SIX.index("Normal"), SIX.index("Bad")] == 1
    assert tm.counts[SIX.index("Normal"), SIX.index("Good")] == 1


@given(st.lists(st.tuples(st.sampled_from(SIX.state_names), st.sampled_from(SIX.state_names)),
                max_size=60))
def test_counts_and_rows(log):
    tm = empirical_transition_matrix(log, SIX)
    assert tm.total == len(log)
    assert np.allclose(tm.probabilities.sum(axis=1), 1.0, atol=1e-12, rtol=0)


def test_stationary_examples():
    assert np.allclose(stationary_distribution([[0.5, 0.5], [0.5, 0.5]]), [0.5, 0.5])
    pi = stationary_distribution([[0.9, 0.1], [0.5, 0.5]])
    assert np.abs(pi - [5 / 6, 1 / 6]).sum() < 1e-9
    with pytest.raises(NoConvergence):
        stationary_distribution([[0, 1], [1, 0]])


def test_rejects_non_stochastic():
    with pytest.raises(ValueError):
        stationary_distribution([[0.5, 0.4], [0.5, 0.5]])


def test_periodic_detection():
    cyc3 = np.roll(np.eye(3), 1, axis=1)
    assert has_periodic_class(cyc3)
    assert not has_periodic_class([[0.5, 0.5], [1, 0]])
    # transient states feeding an aperiodic closed class
    assert not has_periodic_class([[0, 1, 0], [0, 0.5, 0.5], [0, 0.5, 0.5]])
    # a periodic closed class alongside an aperiodic one
    assert has_periodic_class([[1, 0, 0], [0, 0, 1], [0, 1, 0]])


def test_two_by_two_grid_against_solve():
    P = grid_matrices(2)
    pi_ref, unique = direct_stationary(P)
    pi, ok = stationary_distributions(P[unique], tol=1e-12)
    assert np.abs(pi[ok] - pi_ref[unique][ok]).max() < 1e-9
    # only the swap matrix is periodic
    assert [p.tolist() for p in P[unique][~ok]] == [[[0.0, 1.0], [1.0, 0.0]]]


@settings(max_examples=200, deadline=None)
@given(arrays(float, (4, 4), elements=st.floats(0.01, 1)))
def test_random_positive_chains(w):
    P = w / w.sum(axis=1, keepdims=True)
    pi = stationary_distribution(P, tol=1e-12)
    assert np.abs(pi @ P - pi).sum() <= 1e-12
    ref, unique = direct_stationary(P[None])
    assert unique[0] and np.abs(pi - ref[0]).max() < 1e-9


def test_constant_vehicle_metrics():
    r = run_scenario(ScenarioConfig(duration=400, warmup=300, vehicle_count=6))
    m = granularity_metrics(r)["V0"]
    assert (m.distinct_states, m.transitions) == (1, 0)
    assert m.dwell == {"Normal": 400}


def test_synthetic_transitions_counted():
    r = run_scenario(ScenarioConfig(duration=400, warmup=300, vehicle_count=6))
    path = ["Normal", "Good", "Very Good", "Good", "Normal", "Bad"]
    r.trajectories["V1"] = TrustTrajectory("V1", [(0, 50, "Normal")],
                                           [(100 * (i + 1), a, b) for i, (a, b)
                                            in enumerate(zip(path, path[1:]))])
    m = granularity_metrics(r)["V1"]
    assert m.transitions == 5 and m.distinct_states == 4
    assert sum(m.dwell.values()) == 400
    assert m.sojourns == {"Normal": 2, "Good": 2, "Very Good": 1, "Bad": 1}


def test_fig23_distinct_states():
    r = run_scenario(load("fig23.json"))
    m = granularity_metrics(r)
    assert m["V0"].distinct_states == 5
    assert all(vm.distinct_states <= 11 for vm in m.values())


def batch(kind, seeds, **kw):
    cfg = replace(load(f"batch_{kind}state.json"), **kw)
    return [run_scenario(cfg.with_seed(s)) for s in seeds]


def test_compare_single_runs():
    groups = [(k, batch(k, [1])) for k in ("4", "6", "11")]
    rep = compare_models(groups)
    assert [k.runs for k in rep.kinds] == [1, 1, 1]
    assert [k.per_run[0]["seed"] for k in rep.kinds] == [1, 1, 1]
    d = json.loads(rep.to_json())
    assert set(d) == {"metrics", "kinds", "comparisons", "ordering_holds"}
    assert "ordering" in rep.table()


def test_compare_rejects_mismatch():
    groups = [("4", batch("4", [1])), ("6", batch("6", [1], duration=4000)),
              ("11", batch("11", [1]))]
    with pytest.raises(MismatchedConfigs, match="duration"):
        compare_models(groups)


def test_compare_sd():
    groups = [(k, batch(k, range(8))) for k in ("4", "6", "11")]
    rep = compare_models(groups)
    for k in rep.kinds:
        xs = [p["transitions"] for p in k.per_run]
        assert k.mean_transitions == pytest.approx(np.mean(xs))
        assert k.sd_transitions == pytest.approx(np.std(xs, ddof=1))


def test_lazy_iteration_handles_periodic_chains():
    assert np.allclose(stationary_distribution([[0, 1], [1, 0]], lazy=True), [0.5, 0.5])
    cyc = [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]]
    pi = stationary_distribution(cyc, tol=1e-12, lazy=True)
    assert np.abs(pi - [0.25, 0.5, 0.25]).max() < 1e-9


def test_plain_iteration_fails_only_on_periodic_chains():
    P = grid_matrices(3)
    _, unique = direct_stationary(P)
    P = P[unique]
    _, ok = stationary_distributions(P, tol=1e-12)
    assert np.array_equal(~ok, has_periodic_class(P))
