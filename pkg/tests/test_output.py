import re

from hypothesis import given, settings, strategies as st

from trustsim.config import ScenarioConfig
from trustsim.dispute import Outcome
from trustsim.engine import SimResult, run_scenario
from trustsim.output import (TRAJECTORY_HEADER, read_trajectories_csv, render_trajectory_svg,
                             write_dispute_csv, write_result_dir, write_trajectories_csv)
from trustsim.trust import builtin_model

from conftest import load


def fig09():
    return run_scenario(load("fig09.json"))


def test_fig09_trajectory_row(tmp_path):
    write_trajectories_csv(fig09(), tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_HEADER)
    assert "620,V0,0.40,Bad" in lines
    assert "620,V5,0.60,Good" in lines


def test_rows_sorted_by_time_then_vehicle(tmp_path):
    write_trajectories_csv(run_scenario(load("fig23.json")), tmp_path / "t.csv")
    rows = [line.split(",") for line in (tmp_path / "t.csv").read_text().splitlines()[1:]]
    keys = [(float(t), int(v[1:])) for t, v, _, _ in rows]
    assert keys == sorted(keys)


def test_empty_result_is_header_only(tmp_path):
    r = run_scenario(ScenarioConfig(duration=400, warmup=300, vehicle_count=6))
    empty = SimResult(r.config, {}, [], [], [], [], [])
    write_trajectories_csv(empty, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == "time_s,vehicle,trust,state\n"


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 500), st.sampled_from(["FourState", "SixState", "ElevenState"]))
def test_trajectory_roundtrip(tmp_path_factory, seed, kind):
    cfg = ScenarioConfig(vehicle_count=15, seed=seed, model=builtin_model(kind),
                         initial_trust_range=(40, 90))
    r = run_scenario(cfg)
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    write_trajectories_csv(r, path)
    back = read_trajectories_csv(path)
    assert back == {v: [(float(t), trust, s) for t, trust, s in tr.samples]
                    for v, tr in r.trajectories.items()}


def test_dispute_csv(tmp_path):
    write_dispute_csv(fig09(), tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "dispute_id,announcement_id,reporter,opened_at,deadline,weighted_sum,outcome"
    assert len(lines) == 2 and lines[1].endswith(",SenderUntruthful")
    assert lines[1].startswith("1,1,V5,500,620,")


def test_dispute_csv_no_reports(tmp_path):
    r = run_scenario(ScenarioConfig(vehicle_count=6, duration=400, warmup=300))
    write_dispute_csv(r, tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().count("\n") == 1


def test_dispute_outcomes_closed(tmp_path):
    r = run_scenario(ScenarioConfig(vehicle_count=30, seed=5, reporter_mode="independent",
                                    default_trust=70))
    write_dispute_csv(r, tmp_path / "d.csv")
    outcomes = {line.rsplit(",", 1)[1] for line in (tmp_path / "d.csv").read_text().splitlines()[1:]}
    assert outcomes and outcomes <= {o.value for o in Outcome}


def path_d(svg, v):
    return re.search(rf'id="line-{v}" d="([^"]+)"', svg).group(1)


def test_constant_run_svg_is_flat():
    svg = render_trajectory_svg(run_scenario(ScenarioConfig(duration=400, warmup=300,
                                                            vehicle_count=6)))
    for v in ("V0", "V1", "V5"):
        assert "V" not in path_d(svg, v)


def test_fig09_svg_steps_once():
    svg = render_trajectory_svg(fig09())
    d = path_d(svg, "V0")
    assert d.count("V") == 1
    # x of the step is the delivery time on the 0..duration axis (60 + 630 * 620/5000)
    assert "H138.12V" in d


def test_svg_vehicle_selection():
    r = fig09()
    assert set(re.findall(r'id="line-(V\d+)"', render_trajectory_svg(r))) == {f"V{i}" for i in range(6)}
    assert len(re.findall(r'id="line-', render_trajectory_svg(r, vehicles="all"))) == 100


def test_svg_deterministic(tmp_path):
    a = render_trajectory_svg(fig09(), tmp_path / "a.svg")
    b = render_trajectory_svg(fig09(), tmp_path / "b.svg")
    assert a == b and (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert a.startswith("<svg") and a.rstrip().endswith("</svg>")


def test_result_dir(tmp_path):
    out = write_result_dir(fig09(), tmp_path / "r")
    assert sorted(p.name for p in out.iterdir()) == [
        "adjustments.csv", "disputes.csv", "result.json", "summary.json", "trajectories.csv",
        "trajectories.svg"]
