import json
from pathlib import Path

import pytest

from setcore import read_family
from tmatch_cli import (
    EXIT_BUDGET,
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATION,
    expand_grid,
    main,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in (
        "TMATCH_MAX_NODES",
        "TMATCH_MAX_SECONDS",
        "TMATCH_THREADS",
        "TMATCH_ENUMERATION_LIMIT",
    ):
        monkeypatch.delenv(name, raising=False)


# ---------------------
# construct / measure / shift
# ---------------------


def test_construct_to_file_prints_summary(tmp_path, capsys):
    out = tmp_path / "h2.json"
    code = main(["construct", "h2", "--n", "7", "--k", "3", "--t", "2", "--out", str(out)])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["size"] == summary["closed_form"] == 4
    assert summary["agrees"] is True
    assert len(read_family(out)) == 4


def test_construct_star_to_stdout(capsys):
    code = main(["construct", "star", "--n", "6", "--k", "3", "--center", "1 2"])
    assert code == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out == "n=6 k=3\n1 2 3\n1 2 4\n1 2 5\n1 2 6\n"
    assert "Size: 4" in captured.err


def test_construct_missing_parameter(capsys):
    code = main(["construct", "h1", "--n", "7", "--k", "3"])
    assert code == EXIT_USAGE
    assert "missing --t" in capsys.readouterr().err


def test_construct_hm1_reports_displayed_formula(tmp_path, capsys):
    out = tmp_path / "hm1.lines"
    code = main(["construct", "hm1", "--n", "12", "--k", "3", "--s", "2", "--out", str(out)])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert (summary["size"], summary["literal_formula"]) == (80, 35)


def test_measure_nu(capsys):
    code = main(["measure", str(FIXTURES / "shift_example.lines"), "--t", "2"])
    assert code == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result["value"] == 2
    assert result["certified"] is True
    assert len(result["witness"]) == 2


def test_measure_out_of_budget(tmp_path, capsys):
    path = tmp_path / "matching.lines"
    path.write_text("n=8 k=2\n1 2\n3 4\n5 6\n7 8\n")
    code = main(["measure", str(path), "--t", "1", "--max-nodes", "1"])
    assert code == EXIT_BUDGET
    assert json.loads(capsys.readouterr().out)["certified"] is False


def test_measure_center_of_star(capsys):
    code = main(["measure", str(FIXTURES / "star_12.json"), "--t", "2", "--what", "center"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["value"] == [1, 2]


def test_measure_parse_error_names_line(capsys):
    code = main(["measure", str(FIXTURES / "bad_member.lines"), "--t", "1"])
    assert code == EXIT_USAGE
    assert "line 4" in capsys.readouterr().err


def test_shift_full_compression(tmp_path):
    out = tmp_path / "compressed.lines"
    code = main(["shift", str(FIXTURES / "shift_example.lines"), "--full", "--out", str(out)])
    assert code == EXIT_OK
    assert read_family(out).sets()[-2:] == [[1, 3, 6], [2, 3, 4]]


def test_shift_needs_positions(capsys):
    code = main(["shift", str(FIXTURES / "shift_example.lines"), "--i", "1"])
    assert code == EXIT_USAGE
    assert "--j" in capsys.readouterr().err


# ---------------------
# verify
# ---------------------


def test_verify_writes_reports_without_timing(tmp_path):
    code = main(["verify", "est2", "--n", "8", "--k", "3", "--t", "2", "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    reports = json.loads((tmp_path / "est2.json").read_text())
    assert len(reports) == 1
    assert "seconds" not in reports[0]
    assert reports[0]["details"]["max_count"] == 2
    csv_lines = (tmp_path / "est2.csv").read_text().splitlines()
    assert csv_lines[1] == "est2,k=3 n=8 t=2,1400,0,true,"


def test_verify_timing_keeps_seconds(tmp_path):
    args = ["verify", "est2", "--n", "8", "--k", "3", "--t", "2", "--out-dir", str(tmp_path)]
    assert main([*args, "--timing"]) == EXIT_OK
    assert "seconds" in json.loads((tmp_path / "est2.json").read_text())[0]


def test_verify_violation_exit_code(tmp_path):
    args = ["--n", "10", "--k", "3", "--t", "1", "--s", "2", "--out-dir", str(tmp_path)]
    assert main(["verify", "g1-vs-g2", *args]) == EXIT_VIOLATION
    reports = json.loads((tmp_path / "g1-vs-g2.json").read_text())
    assert reports[0]["violations"][0]["kind"] == "g1-vs-g2-sign"


def test_verify_infeasible_grid(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TMATCH_ENUMERATION_LIMIT", "100")
    args = ["--n", "7", "--k", "3", "--t", "2", "--m", "2", "--out-dir", str(tmp_path)]
    assert main(["verify", "lemma-star", *args]) == EXIT_INFEASIBLE
    assert "estimated 210" in capsys.readouterr().err


def test_verify_partial_axes_is_usage_error(tmp_path):
    assert main(["verify", "est1", "--n", "8", "--out-dir", str(tmp_path)]) == EXIT_USAGE


def test_expand_grid():
    grid = expand_grid("est1", {"n": [7, 8], "k": [3], "t": [1, 2]}, seed=0)
    assert grid[0] == {"n": 7, "k": 3, "t": 1}
    assert len(grid) == 4
    sampled = expand_grid(
        "lemma-star", {"n": [9], "k": [3], "t": [1], "m": [2], "mode": "sample"}, seed=5
    )
    assert sampled == [
        {"n": 9, "k": 3, "t": 1, "m": 2, "mode": "sample", "samples": 1000, "seed": 5}
    ]
    assert len(expand_grid("g1-vs-g2", {}, seed=0)) == 6


# ---------------------
# kneser
# ---------------------


def test_kneser_bound(capsys):
    code = main(["kneser", "bound", "K3", "--n", "8", "--k", "3", "--t", "1"])
    assert code == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert (result["chi"], result["eta"], result["bound"]) == (3, 1, 36)


def test_kneser_analyze(capsys):
    assert main(["kneser", "analyze", "K2,2"]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result["special_subgraphs"] == [[1, 2], [3, 4]]


def test_kneser_gfree_check(capsys):
    path = str(FIXTURES / "star_12.json")
    assert main(["kneser", "gfree-check", "K3", path, "--t", "1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["contains"] is False


def test_unknown_pattern_is_usage_error(capsys):
    assert main(["kneser", "analyze", "Q5"]) == EXIT_USAGE
    assert "unknown pattern" in capsys.readouterr().err


def test_argparse_rejects_unknown_family():
    with pytest.raises(SystemExit) as exc:
        main(["construct", "nope"])
    assert exc.value.code == 2
