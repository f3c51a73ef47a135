import csv
import io
import json
import xml.etree.ElementTree as ET

import pytest

from conftest import cached_run
from ltlnav import sim
from ltlnav.cli import main
from ltlnav.locomotion import TROT, Terrain
from ltlnav.scenario import BUNDLED, ParseError, ValidationError, load_scenario, parse_scenario
from ltlnav.workspace import segment_free

MINI = """
name: mini
workspace: {bounds: [0, 0, 4, 4]}
task: "G !hazard"
start: {position: [1, 1]}
sim: {dt: 0.05, horizon: 0.05}
"""


# -- loading ---------------------------------------------------------------------


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_load(name):
    sc = load_scenario(name)
    assert sc.name == name
    assert sc.sim.dt > 0 and sc.sim.horizon >= sc.sim.dt


def test_hospital_fixture_contents():
    sc = load_scenario("hospital_1")
    assert set(sc.workspace.regions) == {"Room_A", "Room_B", "Room_C", "Corridor_D"}
    doctor = next(o for o in sc.objects if o.class_name == "doctor")
    start, end = doctor.position_at(0), doctor.position_at(1e6)
    assert sc.workspace.region_of(start) == "Room_B" and sc.workspace.region_of(end) == "Room_C"
    assert sum(o.class_name == "can" for o in sc.objects) == 2


def test_stairs_zone_in_gait_fixture():
    sc = load_scenario("hospital_2_gaits")
    assert any(kind is Terrain.STAIRS for _, kind in sc.terrain)


def test_empty_world_has_no_objects():
    assert load_scenario("micro_empty").objects == ()


def test_unknown_region_is_a_validation_error():
    with pytest.raises(ValidationError) as e:
        parse_scenario(MINI.replace('"G !hazard"', '"F cup^{Attic}"'))
    assert e.value.field == "task"


def test_minimal_scenario_fills_defaults():
    sc = parse_scenario(MINI)
    assert sc.name == "mini" and sc.objects == () and sc.sim.n_ticks == 1


@pytest.mark.parametrize("patch,field", [
    (("horizon: 0.05", "horizon: 0.01"), "sim.horizon"),
    (("position: [1, 1]", "position: [9, 9]"), "start.position"),
    (("bounds: [0, 0, 4, 4]", "bounds: [0, 0, 4]"), "workspace.bounds"),
    (("name: mini", "name: mini\ncolour: red"), "colour"),
])
def test_validation_errors_name_the_field(patch, field):
    with pytest.raises(ValidationError) as e:
        parse_scenario(MINI.replace(*patch))
    assert e.value.field == field


def test_yaml_syntax_error_reports_line():
    with pytest.raises(ParseError) as e:
        parse_scenario("name: x\nworkspace: [1, 2\n")
    assert e.value.line is not None


def test_missing_file():
    with pytest.raises(ParseError):
        load_scenario("/nonexistent/scenario.yaml")


# -- running ---------------------------------------------------------------------


def test_degenerate_horizon_gives_one_tick(tmp_path):
    tr = sim.run(parse_scenario(MINI))
    assert tr.status == sim.COMPLETED and len(tr.ticks) == 1
    files = sim.export(tr, tmp_path)
    rows = list(csv.reader(io.StringIO((tmp_path / "trajectory.csv").read_text())))
    assert rows[0] == ["t", "x", "y", "heading", "gait", "q"] and len(rows) == 2
    for f in files:
        if f.suffix == ".svg":
            ET.fromstring(f.read_text())


def test_empty_task_idles_for_the_horizon():
    tr = cached_run("micro_empty")
    assert tr.status == sim.COMPLETED
    assert len(tr.ticks) == 20 and tr.events == []


@pytest.mark.parametrize("name", ["hospital_1", "handover_1", "micro_loop", "micro_moved"])
def test_trace_invariants(name):
    tr = cached_run(name)
    sc = tr.scenario
    assert len(tr.ticks) == round(sc.sim.horizon / sc.sim.dt)
    times = [k.t for k in tr.ticks]
    assert all(b > a for a, b in zip(times, times[1:]))
    ev_times = [e.time for e in tr.events]
    assert ev_times == sorted(ev_times)
    ws = sc.workspace
    for k in tr.ticks:
        assert ws.in_bounds((k.x, k.y)) and ws.point_free((k.x, k.y))
    for a, b in zip(tr.ticks, tr.ticks[1:]):
        assert segment_free(ws, (a.x, a.y), (b.x, b.y))


def test_static_clone_needs_no_repair():
    tr = cached_run("hospital_1_static")
    kinds = {e.kind for e in tr.events}
    assert tr.status == sim.COMPLETED
    assert "GateDecline" not in kinds and "GreedyRetarget" not in kinds


def test_lasso_task_runs_required_suffix_loops():
    tr = cached_run("micro_loop")
    done = next(e for e in tr.events if e.kind == "TaskComplete")
    n_pre = sum(1 for s in tr.subtasks if not s.repeating)
    n_suf = len(tr.subtasks) - n_pre
    assert done.payload["confirmations"] == n_pre + tr.scenario.sim.suffix_loops * n_suf
    assert done.payload["suffix_loops"] >= 2


def test_stairs_and_patient_force_walking():
    tr = cached_run("hospital_2_gaits")
    sc = tr.scenario
    assert tr.status == sim.COMPLETED
    gaits = {k.gait for k in tr.ticks}
    assert gaits == {"Trot", "Walk"}
    # a walk request takes effect at the next trot cycle boundary at the latest
    since = None
    for k in tr.ticks:
        if sc.terrain_at((k.x, k.y)) is Terrain.STAIRS:
            since = k.t if since is None else since
            if k.t - since > TROT.t_gait + sc.sim.dt:
                assert k.gait == "Walk", k
        else:
            since = None


def test_no_plan_status():
    text = MINI.replace('"G !hazard"', '"F cup"')
    tr = sim.run(parse_scenario(text))
    assert tr.status == sim.NO_PLAN and tr.ticks == []


# -- export ----------------------------------------------------------------------


def test_export_all_and_reexport_identical(tmp_path):
    tr = cached_run("micro_reach")
    a = sim.export(tr, tmp_path / "a")
    b = sim.export(tr, tmp_path / "b")
    assert [p.name for p in a] == ["trajectory.csv", "events.jsonl", "overhead.svg", "gait.svg"]
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()
    for line in (tmp_path / "a" / "events.jsonl").read_text().splitlines():
        rec = json.loads(line)
        assert set(rec) == {"time", "kind", "payload"}


def test_export_subset(tmp_path):
    written = sim.export(cached_run("micro_reach"), tmp_path, ["events"])
    assert [p.name for p in written] == ["events.jsonl"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["events.jsonl"]


def test_export_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        sim.export(cached_run("micro_reach"), tmp_path, ["pdf"])


# -- command line ----------------------------------------------------------------


def test_cli_validate(capsys):
    assert main(["validate", "hospital_1"]) == 0
    assert "hospital_1: ok" in capsys.readouterr().out


def test_cli_check(capsys):
    assert main(["check", "G F a", "{}", "{a} {}"]) == 0
    out = capsys.readouterr().out
    assert "semantics: true" in out and "automaton: true" in out
    assert main(["check", "G F a", "{a}", "{}"]) == 0
    assert "semantics: false" in capsys.readouterr().out


def test_cli_run_writes_requested_files(tmp_path, capsys):
    assert main(["run", "micro_reach", "--out", str(tmp_path), "--formats", "csv,events"]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["events.jsonl", "trajectory.csv"]
    assert "Completed" in capsys.readouterr().out


def test_cli_plan(capsys):
    assert main(["plan", "micro_reach"]) == 0
    assert "[subtasks]" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(MINI.replace('"G !hazard"', '"F cup^{Attic}"'))
    assert main(["validate", str(bad)]) == 65
    assert main(["check", "a U U b", "{}", "{a}"]) == 65
    assert main(["check", "a", "oops", "{a}"]) == 64
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 64
    noplan = tmp_path / "noplan.yaml"
    noplan.write_text(MINI.replace('"G !hazard"', '"F cup"'))
    assert main(["run", str(noplan)]) == 2
    assert main(["plan", str(noplan)]) == 2
    stuck = tmp_path / "stuck.yaml"
    stuck.write_text(MINI.replace('"G !hazard"', '"F cup"').replace("horizon: 0.05", "horizon: 10")
                     + "objects:\n  - {id: c, class: cup, position: [3, 3], present: false}\n")
    assert main(["run", str(stuck)]) == 3
