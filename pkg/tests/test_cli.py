import argparse
import csv
import json
import math
import os
from pathlib import Path

import pytest

from dyckmatch import cli

GOLDEN = Path(__file__).parent / "golden"
SUBCOMMANDS = ["solve", "count", "enumerate", "oracle", "moments", "gfcheck", "sample", "asymptotics"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _help_texts():
    parser = cli.build_parser()
    texts = {"main": parser.format_help()}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for name, sub in action.choices.items():
                texts[name] = sub.format_help()
    return texts


def test_help_golden(monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")
    texts = _help_texts()
    assert set(SUBCOMMANDS) <= set(texts)
    for name, text in texts.items():
        golden = GOLDEN / f"help_{name}.txt"
        if os.environ.get("DYCK_UPDATE_GOLDEN"):
            golden.write_text(text)
        assert golden.read_text() == text, name


def test_help_lists_every_flag(monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")
    parser = cli.build_parser()
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                text = sub.format_help()
                for a in sub._actions:
                    for flag in a.option_strings:
                        assert flag in text


def test_count(capsys):
    code, out, _ = run(capsys, "count", "--path", "UUDD")
    assert code == 0
    data = json.loads(out)
    assert data["Z"] == 2 and data["S"] == pytest.approx(math.log(2))


def test_count_json_path(capsys):
    code, out, _ = run(capsys, "count", "--path", "[1,1,1,-1,-1,-1]")
    assert code == 0 and json.loads(out)["Z"] == 6


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", "--path", "UDUD", "--index", "1")
    assert code == 0
    assert json.loads(out) == [[1, 1], [2, 2]]
    code, out, _ = run(capsys, "enumerate", "--path", "UUDD")
    assert json.loads(out) == [[[1, 1], [2, 2]], [[1, 2], [2, 1]]]
    code, out, _ = run(capsys, "enumerate", "--path", "UUUDDD", "--limit", "4")
    assert len(json.loads(out)) == 4


def test_solve_instance_file(tmp_path, capsys):
    f = tmp_path / "inst.csv"
    f.write_text("colour,x\nw,0.1\nw,0.2\nb,0.3\nb,0.4\n")
    code, out, _ = run(capsys, "solve", "--instance", str(f))
    assert code == 0
    data = json.loads(out)
    assert data["Z"] == 2 and data["path"] == "UUDD"


def test_errors_are_json(capsys):
    code, _, err = run(capsys, "count", "--path", "UUD")
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "NotABridge"
    code, _, err = run(capsys, "enumerate", "--path", "UUDD", "--index", "3")
    assert code == 1 and "IndexOutOfRange" in err
    code, _, err = run(capsys, "count", "--path", "UXD")
    assert code == 1


def test_usage_error_prints_help(capsys):
    code, _, err = run(capsys, "moments", "--ensemble", "bridge")
    assert code == 1
    assert "usage:" in err and "UsageError" in err


def test_oracle_verify(capsys):
    code, out, _ = run(capsys, "oracle", "verify", "--n", "4", "--instances", "20", "--seed", "1")
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_moments_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code, _, _ = run(capsys, "moments", "--ensemble", "excursion", "--k", "1", "--n", "1:6",
                     "--method", "closed", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [int(r["N"]) for r in rows] == list(range(1, 7))
    assert set(rows[0]) == {"N", "ensemble", "k", "raw_moment", "rescaled_moment", "method"}
    assert float(rows[1]["raw_moment"]) == pytest.approx(math.log(2) / 2)
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_moments_methods_agree(capsys):
    values = {}
    for method in ("dp", "closed", "gf", "brute"):
        code, out, _ = run(capsys, "--format", "csv", "moments", "--ensemble", "bridge", "--k", "2",
                           "--n", "5", "--method", method)
        assert code == 0
        values[method] = float(list(csv.DictReader(out.splitlines()))[0]["raw_moment"])
    ref = values["brute"]
    assert all(v == pytest.approx(ref, rel=1e-10) for v in values.values())


def test_gfcheck(capsys):
    code, out, _ = run(capsys, "gfcheck", "--ensemble", "bridge", "--k", "2", "--order", "30")
    assert code == 0 and json.loads(out)["pass"] is True


def test_sample(tmp_path, capsys):
    stats, raw = tmp_path / "s.json", tmp_path / "raw.csv"
    code, _, _ = run(capsys, "sample", "--ensemble", "excursion", "--n", "50", "--samples", "600",
                     "--seed", "4", "--bins", "10", "--out", str(stats), "--dump-raw", str(raw))
    assert code == 0
    data = json.loads(stats.read_text())
    assert data["num_samples"] == 600 and len(data["histogram_counts"]) == 10
    assert len(raw.read_text().splitlines()) == 601
    code, _, _ = run(capsys, "sample", "--ensemble", "excursion", "--n", "50", "--samples", "600",
                     "--seed", "4", "--bins", "10", "--threads", "2", "--out", str(tmp_path / "t.json"))
    assert json.loads((tmp_path / "t.json").read_text()) == data


def test_asymptotics(capsys):
    code, out, _ = run(capsys, "asymptotics", "--check")
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(capsys, "asymptotics", "--report", "--ensemble", "bridge", "--k", "1",
                       "--n-list", "10,100")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert [int(r["N"]) for r in rows] == [10, 100]


def test_threads_env(monkeypatch):
    monkeypatch.setenv("DYCK_THREADS", "3")
    assert cli.resolve_threads(None) == 3
    assert cli.resolve_threads(0) == 1


def test_parse_n_list():
    assert cli.parse_n_list("1:3,7,10:30:10") == [1, 2, 3, 7, 10, 20, 30]
    with pytest.raises(cli.UsageError):
        cli.parse_n_list(",")
