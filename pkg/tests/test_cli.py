import json

import pytest

from btv import bundled_model_path, load_model
from btv.checker import replay, load_trace_file
from btv.cli import main

ROBOT_WALL = str(bundled_model_path("robot_wall.bt"))
BUGGY = str(bundled_model_path("robot_wall_buggy.bt"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", ROBOT_WALL)
    assert code == 0
    assert out.startswith("OK: 4 nodes")
    assert "BFS-consistent" in out


def test_validate_two_roots(capsys, tmp_path):
    path = tmp_path / "tworoots.bt"
    path.write_text("""
    tree { root { root inner { condition c; } } }
    env { var x: int in 0..1 = 0; }
    condition c { success_when: x == 0; }
    """)
    code, out, _ = run(capsys, "validate", str(path))
    assert code == 1
    assert "REQ1" in out


def test_validate_missing_file(capsys):
    code, _, err = run(capsys, "validate", "/no/such/file.bt")
    assert code == 2
    assert "error:" in err


def test_validate_parse_error(capsys, tmp_path):
    path = tmp_path / "broken.bt"
    path.write_text("tree { root {")
    code, _, err = run(capsys, "validate", str(path))
    assert code == 2
    assert "expected" in err


def test_validate_json(capsys):
    code, out, _ = run(capsys, "validate", ROBOT_WALL, "--output", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["ok"] is True
    assert payload["nodes"] == 4


def test_check_holds(capsys):
    code, out, _ = run(capsys, "check", ROBOT_WALL)
    assert code == 0
    assert out.startswith("HOLDS")
    assert "761" in out


def test_check_violated_text_lists_steps(capsys):
    code, out, _ = run(capsys, "check", BUGGY)
    assert code == 1
    assert "VIOLATED" in out
    assert "counterexample:" in out
    assert "ACT_OUTCOME action_1" in out
    assert "distance_to_object=2" in out


def test_check_json_verdict(capsys):
    code, out, _ = run(capsys, "check", BUGGY, "--output", "json")
    assert code == 1
    payload = json.loads(out)
    assert payload["status"] == "VIOLATED"
    assert payload["violated_invariant"] == "safe"
    assert payload["counterexample"][-1]["event"] == "ACT_OUTCOME"
    assert payload["model_sha256"]


def test_check_bound_exceeded(capsys):
    code, out, _ = run(capsys, "check", ROBOT_WALL, "--max-states", "10")
    assert code == 3
    assert "BOUND_EXCEEDED" in out


def test_check_trace_out_replays(capsys, tmp_path):
    trace_path = tmp_path / "cx.json"
    code, _, _ = run(capsys, "check", BUGGY, "--trace-out", str(trace_path))
    assert code == 1
    events, sha = load_trace_file(trace_path)
    model = load_model(BUGGY)
    final = replay(model, events, trace_sha256=sha)
    assert final.env.get("distance_to_object") == 2


def test_check_workers_flag(capsys):
    code1, out1, _ = run(capsys, "check", ROBOT_WALL, "--workers", "1")
    code4, out4, _ = run(capsys, "check", ROBOT_WALL, "--workers", "4")
    assert code1 == code4 == 0
    assert out1 == out4


def test_simulate_robot_wall(capsys):
    code, out, _ = run(capsys, "simulate", ROBOT_WALL, "--ticks", "8")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 8
    assert all("SUCCESS" in line for line in lines[:6])
    assert all("FAILURE" in line for line in lines[6:])
    assert "distance_to_object=4" in lines[5]
    assert "distance_to_object=4" in lines[7]


def test_simulate_single_condition(capsys, tmp_path):
    path = tmp_path / "mini.bt"
    path.write_text("""
    tree { root { condition c; } }
    env { var x: int in 0..1 = 0; }
    condition c { success_when: x == 0; }
    """)
    code, out, _ = run(capsys, "simulate", str(path), "--ticks", "1")
    assert code == 0
    assert out.strip().splitlines() == ["cycle 1: SUCCESS  x=0"]


def test_simulate_random_policy_reproducible(capsys):
    _, out1, _ = run(capsys, "simulate", ROBOT_WALL, "--policy", "random",
                     "--seed", "42", "--ticks", "5")
    _, out2, _ = run(capsys, "simulate", ROBOT_WALL, "--policy", "random",
                     "--seed", "42", "--ticks", "5")
    assert out1 == out2


def test_simulate_trace_out_replays(capsys, tmp_path):
    trace_path = tmp_path / "sim.json"
    code, _, _ = run(capsys, "simulate", ROBOT_WALL, "--ticks", "3",
                     "--trace-out", str(trace_path))
    assert code == 0
    events, sha = load_trace_file(trace_path)
    model = load_model(ROBOT_WALL)
    final = replay(model, events, trace_sha256=sha)
    assert final.env.get("time") == 3


def test_simulate_json_output(capsys):
    code, out, _ = run(capsys, "simulate", ROBOT_WALL, "--ticks", "2",
                       "--output", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["results"] == ["SUCCESS", "SUCCESS"]
    assert payload["env_per_cycle"][1]["distance_to_object"] == 8


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "x.bt"])
    assert exc.value.code == 2


def test_nonpositive_ticks_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", ROBOT_WALL, "--ticks", "0"])
    assert exc.value.code == 2


def test_nonpositive_max_states_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check", ROBOT_WALL, "--max-states", "0"])
    assert exc.value.code == 2


def test_exhaustiveness_failure_stops_before_explore(capsys, tmp_path):
    path = tmp_path / "gap.bt"
    path.write_text("""
    tree { root { action a; } }
    env { var x: int in 0..5 = 0; }
    action a { outcome SUCCESS when false; }
    """)
    code, _, err = run(capsys, "check", str(path))
    assert code == 2
    assert "no outcome guard" in err
