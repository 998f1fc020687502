from __future__ import annotations

import json

import pytest

from modp_center import cli


def _run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = cli.main([*argv, "-o", str(out)])
    return code, out.read_text(encoding="utf-8")


def _json(tmp_path, *argv):
    code, text = _run(tmp_path, *argv)
    return code, json.loads(text)


@pytest.mark.parametrize("argv", [
    ["orbits", "--group", "s3"],
    ["orbits", "--action", "random", "--p", "5", "--seed", "3"],
    ["orbits", "--group", "heisenberg3", "--action", "left"],
    ["center", "--group", "heisenberg3"],
    ["tower-density", "--p", "2", "--depth", "4"],
    ["nonclosed-delta", "--p", "3", "--depth", "3"],
    ["twisted-stab", "--depth", "2"],
    ["twisted-stab", "--depth", "2", "--w", "diag:1,2,4", "--skip-centralizer"],
    ["mackey-dim", "--g", "d4", "--u", "center", "--p", "2"],
    ["zhat", "--spec", "finite", "--p", "2", "--samples", "10"],
    ["zhat", "--samples", "10"],
])
def test_subcommands_pass(tmp_path, argv):
    code, d = _json(tmp_path, *argv)
    assert code == 0, d
    assert d["passed"] and d["schema"] == cli.SCHEMA and d["command"] == argv[0]
    assert all(a["passed"] for a in d["assertions"])
    assert "timings" not in d


def test_center_heisenberg_examples(tmp_path):
    _, d = _json(tmp_path, "center", "--group", "heisenberg3", "--p", "3")
    assert d["results"]["center_dim"] == d["results"]["commutant_dim"] == 11
    _, d = _json(tmp_path, "center", "--group", "heisenberg3", "--p", "2")
    assert d["results"]["center_dim"] == 5


def test_mackey_dim_example(tmp_path):
    _, d = _json(tmp_path, "mackey-dim", "--g", "s3", "--u", "a3", "--p", "3")
    assert d["results"]["commutant_dim"] == 4
    assert d["results"]["per_w_dims"] == [3, 1]


def test_nonclosed_delta_sizes(tmp_path):
    _, d = _json(tmp_path, "nonclosed-delta", "--p", "2", "--depth", "4")
    assert d["results"]["orbit_sizes"] == [1, 2, 4, 8, 16]


@pytest.mark.parametrize("argv", [
    ["center", "--group", "no-such-group"],
    ["center", "--p", "4"],
    ["orbits", "--group", "heisenberg3", "--cap", "5"],
    ["mackey-dim", "--g", "heisenberg3", "--u", "center", "--cap", "5"],
    ["tower-density", "--depth", "0"],
    ["twisted-stab", "--w", "rot:1", "--depth", "1"],
    ["mackey-dim", "--g", "s3", "--u", "nope"],
])
def test_config_errors_exit_2(tmp_path, argv, capsys):
    code, d = _json(tmp_path, *argv)
    assert code == 2
    assert d["passed"] is False and d["error"]
    assert "error:" in capsys.readouterr().err


def test_bad_flag_is_argparse_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["center", "--format", "yaml"])
    assert exc.value.code == 2


def test_failed_assertion_exit_1(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "bimodule_end_dim", lambda G, p: -1)
    code, d = _json(tmp_path, "center", "--group", "s3")
    assert code == 1 and not d["passed"]
    bad = [a for a in d["assertions"] if not a["passed"]]
    assert bad and bad[0]["counterexample"] == {"class_sums": 3, "commutant": -1}


def test_verify_all_deterministic(tmp_path):
    c1, t1 = _run(tmp_path, "verify-all", "--seed", "42", name="a.json")
    c2, t2 = _run(tmp_path, "verify-all", "--seed", "42", name="b.json")
    assert c1 == c2 == 0
    assert t1 == t2
    assert json.loads(t1)["passed"]


def test_formats_and_timings(tmp_path):
    code, text = _run(tmp_path, "tower-density", "--p", "2", "--format", "csv", name="t.csv")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0].split(",") == ["level", "points", "orbits"]
    assert len(lines) == 1 + 5
    code, text = _run(tmp_path, "center", "--group", "s3", "--format", "text", name="t.txt")
    assert code == 0 and "PASS" in text and "FAIL" not in text
    _, d = _json(tmp_path, "center", "--group", "s3", "--timings")
    assert "class_sums" in d["timings"]


def test_stdout_when_no_output(capsys):
    assert cli.main(["mackey-dim", "--g", "s3", "--u", "c2", "--p", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"]


def test_center_cap_skips_commutant(tmp_path):
    code, d = _json(tmp_path, "center", "--group", "s4", "--p", "2", "--cap", "3")
    assert code == 0 and d["results"]["center_dim"] == 5
    assert d["results"]["commutant"].startswith("skipped")
