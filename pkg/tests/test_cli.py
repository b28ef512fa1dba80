"""Command-line contract: outputs, exit codes and determinism."""
import csv
import json
import subprocess
import sys

import pytest

from l1lab import cli
from l1lab.serialize import canonical_dumps


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def star_file(tmp_path, capsys):
    path = tmp_path / "e.json"
    code, _, _ = run(["embed", "star", "--n", "64", "--d", "63", "--seed", "1", "--out", str(path)], capsys)
    assert code == 0
    return path


def test_embed_star(tmp_path, capsys):
    path = tmp_path / "e.json"
    code, out, _ = run(["embed", "star", "--n", "64", "--d", "48", "--eps", "0.25",
                        "--seed", "7", "--out", str(path)], capsys)
    assert code == 0 and path.exists()
    report = json.loads(out)
    assert report["n"] == 64 and report["dim"] == 48 and report["distortion"] >= 1
    assert json.loads(path.read_text())["n"] == 64


def test_embed_tree(capsys):
    code, out, _ = run(["embed", "tree", "--k", "2", "--h", "3", "--d", "16", "--seed", "1"], capsys)
    assert code == 0 and json.loads(out)["n"] == 15


def test_embed_missing_n(capsys):
    code, _, err = run(["embed", "star"], capsys)
    assert code == 2 and "usage" in err


def test_embed_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        run(["embed", "star", "--n", "30", "--d", "20", "--seed", "4", "--out", str(p)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("L1LAB_SEED", "9")
    run(["embed", "star", "--n", "30", "--d", "20", "--out", str(a)], capsys)
    run(["embed", "star", "--n", "30", "--d", "20", "--seed", "9", "--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_pipeline_run_and_verify(star_file, tmp_path, capsys):
    cert = tmp_path / "cert.json"
    code, out, _ = run(["pipeline", "run", "--embedding", str(star_file), "--eps", "0.05",
                        "--out", str(cert)], capsys)
    assert code == 0 and json.loads(out)["pass"]
    code, out, _ = run(["pipeline", "verify", str(cert)], capsys)
    assert code == 0 and "verified" in out


def test_pipeline_corrupted_certificate(star_file, tmp_path, capsys):
    cert = tmp_path / "cert.json"
    run(["pipeline", "run", "--embedding", str(star_file), "--eps", "0.05", "--out", str(cert)], capsys)
    data = json.loads(cert.read_text())
    data["stage_families"][3]["measures"][0][0] += 0.5
    cert.write_text(canonical_dumps(data))
    code, out, _ = run(["pipeline", "verify", str(cert)], capsys)
    assert code == 4 and "IV.probability" in out


def test_pipeline_eps_gate(star_file, capsys):
    code, _, _ = run(["pipeline", "run", "--embedding", str(star_file), "--eps", "0.1"], capsys)
    assert code == 2


def test_pipeline_entry_violation(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 3, "dim": 1, "norm": "l1", "points": [[0], [3], [-1]]}))
    code, _, err = run(["pipeline", "run", "--embedding", str(path), "--eps", "0.05"], capsys)
    assert code == 4 and "distortion" in err


def test_pipeline_parse_errors(tmp_path, capsys):
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert run(["pipeline", "verify", str(junk)], capsys)[0] == 3
    assert run(["pipeline", "verify", str(tmp_path / "missing.json")], capsys)[0] == 3
    junk.write_text(json.dumps({"n": 2}))
    assert run(["pipeline", "run", "--embedding", str(junk), "--eps", "0.05"], capsys)[0] == 3


def test_bounds(capsys):
    code, out, _ = run(["bounds", "--n", "1048576", "--eps", "0.05"], capsys)
    from l1lab.bounds import evaluate_lower_bound

    assert code == 0
    assert json.loads(out)["d_lower"] == evaluate_lower_bound(2**20, 0.05).d_lower
    code, out, _ = run(["bounds", "--n", "17", "--volume", "--D", "2"], capsys)
    assert code == 0 and json.loads(out)["d_lower"] == 2


def test_bounds_range(capsys):
    assert run(["bounds", "--n", "100", "--eps", "0.05"], capsys)[0] == 2
    assert run(["bounds", "--n", "100"], capsys)[0] == 2


def test_sweep_rows_and_determinism(tmp_path, capsys):
    args = ["sweep", "--n-list", "400", "512", "--eps-list", "0.0625", "0.05", "--trials", "1",
            "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b)], capsys)[0] == 0
    rows_a = list(csv.DictReader(a.open()))
    rows_b = list(csv.DictReader(b.open()))
    assert len(rows_a) == 4
    assert [(r["n"], r["eps"], r["trial"]) for r in rows_a] == [
        ("400", "0.0625", "0"), ("400", "0.05", "0"), ("512", "0.0625", "0"), ("512", "0.05", "0")]
    strip = lambda rows: [{k: v for k, v in r.items() if k != "timestamp"} for r in rows]
    assert strip(rows_a) == strip(rows_b)
    for r in rows_a:
        assert r["cert_pass"] == "true" and int(r["d_achieved"]) >= int(r["d_lower"])


def test_sweep_rejects_small_n(tmp_path, capsys):
    code, _, _ = run(["sweep", "--n-list", "100", "--eps-list", "0.05", "--trials", "1",
                      "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 2


def test_sweep_interrupt_keeps_rows(tmp_path, capsys, monkeypatch):
    real = cli.sweep_row
    calls = []

    def flaky(*a):
        if calls:
            raise KeyboardInterrupt
        calls.append(a)
        return real(*a)

    monkeypatch.setattr(cli, "sweep_row", flaky)
    out = tmp_path / "partial.csv"
    code, _, err = run(["sweep", "--n-list", "256", "--eps-list", "0.0625", "--trials", "3",
                        "--out", str(out)], capsys)
    assert code == 130 and "partial" in err
    assert len(list(csv.DictReader(out.open()))) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "l1lab", "bounds", "--n", "17", "--volume", "--D", "2"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["d_lower"] == 2
