import json
import math

import pytest

from secgame.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_nash_smoke(capsys):
    code, out, _ = run_cli(capsys, "nash", "--scenario", "fig4a",
                           "--alpha", "1", "--budget", "10")
    assert code == 0
    payload = json.loads(out)
    assert payload["converged"] is True
    assert payload["total_true_loss"] > 0
    assert payload["total_true_loss"] == pytest.approx(math.exp(-10.0), rel=1e-6)


def test_validate_ok_and_bad(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "validate", "--scenario", "der1")
    assert code == 0 and json.loads(out)["ok"] is True
    bad = {
        "nodes": [{"id": "a"}, {"id": "b"}],
        "edges": [{"from": "a", "to": "b", "p0": 0.5},
                  {"from": "b", "to": "a", "p0": 0.5}],
        "sources": ["a"],
        "critical_assets": [{"node": "b", "loss": 1.0, "owners": ["d"]}],
        "defenders": [{"id": "d", "budget": 1.0, "edges": [["a", "b"]],
                       "critical": ["b"]}],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    code, out, _ = run_cli(capsys, "validate", "--scenario", str(path))
    assert code == 3
    assert any("cycle" in v for v in json.loads(out)["violations"])


def test_solve_outputs_investments(capsys):
    code, out, _ = run_cli(capsys, "solve", "--scenario", "fig4a",
                           "--alpha", "0.5", "--budget", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["investments"]["vs->v1"] == pytest.approx(1 / 3, abs=1e-4)


def test_transform_khop(capsys):
    code, out, _ = run_cli(capsys, "transform", "--scenario", "fig4a",
                           "--khop", "v5=2")
    assert code == 0
    payload = json.loads(out)
    node_ids = {n["id"] for n in payload["nodes"]}
    assert {"v4#a", "v4#b"} <= node_ids
    assert sorted(payload["mirror_map"]["v4->v5"]) == ["v4#a->v5", "v4#b->v5"]


def test_transform_bad_khop(capsys):
    code, _, err = run_cli(capsys, "transform", "--scenario", "fig4a",
                           "--khop", "v5")
    assert code == 3
    assert "malformed" in err


def test_fit_command(capsys, tmp_path):
    rounds = {
        "network": "A",
        "unit_budget": 24,
        "rounds": [{"allocation": {"v4->v5": 24, "v1->v2": 0, "v1->v3": 0,
                                   "v2->v4": 0, "v3->v4": 0}} for _ in range(3)],
    }
    path = tmp_path / "rounds.json"
    path.write_text(json.dumps(rounds))
    code, out, _ = run_cli(capsys, "fit", "--rounds", str(path))
    assert code == 0
    payload = json.loads(out)
    assert payload["alpha_hat"] == 1.0
    assert payload["eta_hat"] == 0.0


def test_compare_baseline(capsys):
    code, out, _ = run_cli(capsys, "compare-baseline", "--scenario", "fig4a",
                           "--alphas", "0.5,1.0", "--budget", "10")
    assert code == 0
    payload = json.loads(out)
    rows = {r["alpha"]: r["ratio"] for r in payload["rows"]}
    assert rows[1.0] == pytest.approx(1.0, abs=1e-6)
    assert rows[0.5] > rows[1.0]


def test_experiment_command(capsys, tmp_path):
    spec = {
        "scenario": "der1",
        "sweep_var": "alpha",
        "sweep_values": [1.0],
        "fixed": {"budget": 5.0},
        "modes": ["individual"],
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    out_path = tmp_path / "rows.csv"
    code, out, _ = run_cli(capsys, "experiment", "--spec", str(spec_path),
                           "--out", str(out_path))
    assert code == 0
    header = out_path.read_text().splitlines()[0]
    assert header == "sweep_var,sweep_value,mode,alpha,eta,defender_id,true_loss,perceived_loss,converged,seed"


def test_missing_scenario_is_data_error(capsys):
    code, _, err = run_cli(capsys, "nash", "--scenario", "/does/not/exist.json")
    assert code == 3
    assert "error" in err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 2


def test_seed_determinism(capsys):
    _, out1, _ = run_cli(capsys, "solve", "--scenario", "fig4a", "--alpha", "0.6",
                         "--budget", "5", "--seed", "4")
    _, out2, _ = run_cli(capsys, "solve", "--scenario", "fig4a", "--alpha", "0.6",
                         "--budget", "5", "--seed", "4")
    assert out1 == out2


def test_out_file_roundtrip(capsys, tmp_path):
    out_path = tmp_path / "nash.json"
    code, _, _ = run_cli(capsys, "nash", "--scenario", "fig4a", "--alpha", "0.8",
                         "--budget", "2", "--out", str(out_path))
    assert code == 0
    payload = json.loads(out_path.read_text())
    assert payload["converged"] is True


def test_nash_der1_smoke(capsys):
    code, out, _ = run_cli(capsys, "nash", "--scenario", "der1",
                           "--alpha", "1", "--budget", "20")
    assert code == 0
    payload = json.loads(out)
    assert payload["converged"] is True
    assert payload["total_true_loss"] > 0


def test_compare_baseline_der1_ordering(capsys):
    code, out, _ = run_cli(capsys, "compare-baseline", "--scenario", "der1",
                           "--alphas", "0.6,0.8,1.0", "--budget", "10",
                           "--restarts", "0")
    assert code == 0
    rows = json.loads(out)["rows"]
    ratios = [r["ratio"] for r in sorted(rows, key=lambda r: -r["alpha"])]
    assert all(ratios[i + 1] >= ratios[i] - 1e-9 for i in range(len(ratios) - 1))
    assert all(r >= 1 - 1e-9 for r in ratios)
