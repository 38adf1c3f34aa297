"""Command-line front end: exit codes, caches and fingerprint stamps."""

import json
import os
import subprocess

import pytest

EXE = os.environ.get("PHASETUNNEL_EXE", "phasetunnel")


def run(*args, cache_dir):
    return subprocess.run(
        [EXE, "--cache-dir", str(cache_dir), *map(str, args)],
        capture_output=True,
        text=True,
        timeout=600,
    )


@pytest.fixture
def n1_config(tmp_path):
    path = tmp_path / "n1.cfg"
    path.write_text("n = 1\nmu = 0.1\ntau = 0.1\nc = 1\nh = 1e-3\n")
    return path


def test_usage_errors(tmp_path):
    assert run("no-such-command", cache_dir=tmp_path).returncode == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("mu = abc\n")
    assert run("--config", bad, "action", cache_dir=tmp_path).returncode == 2
    assert run("weber", "--epsilon", "-1", cache_dir=tmp_path).returncode == 2


def test_action_writes_cache_and_agrees(tmp_path):
    r = run("action", "--both", cache_dir=tmp_path)
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    assert out["S"] == pytest.approx(1.1210765249687e-3, rel=1e-8)
    assert out["relative_gap"] < 1e-4
    assert len(out["fingerprint"]) == 16
    cached = json.loads((tmp_path / "action_n2.json").read_text())
    assert cached["S"] == out["S"]


def test_weber_csv(tmp_path):
    r = run("weber", "--epsilon", "1", "--kmax", "1", "--range", "0", "2", cache_dir=tmp_path)
    assert r.returncode == 0, r.stderr
    lines = r.stdout.splitlines()
    assert lines[0].startswith("# fingerprint=")
    body = [ln for ln in lines if not ln.startswith("#")]
    header, first = body[0].split(","), body[1].split(",")
    # Y_0(0) = sqrt(2 pi) at epsilon = 1
    assert float(first[header.index("Y0")]) == pytest.approx(2.5066282746310002, rel=1e-9)


def test_synthetic_fit_recovers_parameters(tmp_path):
    cache = tmp_path / "synthetic.csv"
    assert run("fit", "--write-synthetic", cache, cache_dir=tmp_path).returncode == 0
    r = run("fit", "--cache", cache, cache_dir=tmp_path)
    assert r.returncode == 0, r.stderr
    fit = json.loads(r.stdout)["fit"]
    assert fit["S_fit"] == pytest.approx(0.05, rel=1e-9)
    assert fit["q"] == pytest.approx(1.5, rel=1e-7)


def test_report_rejects_empty_and_corrupt_caches(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run("report", "--cache", empty, cache_dir=tmp_path).returncode == 2
    assert run("report", "--cache", tmp_path / "missing.csv", cache_dir=tmp_path).returncode == 2

    cache = tmp_path / "synthetic.csv"
    run("fit", "--write-synthetic", cache, cache_dir=tmp_path)
    text = cache.read_text().splitlines()
    text[-1] = text[-1].replace("0.0", "0.9", 1)
    cache.write_text("\n".join(text) + "\n")
    r = run("report", "--cache", cache, cache_dir=tmp_path)
    assert r.returncode == 2
    assert "checksum" in r.stderr


def test_scan_then_report(tmp_path, n1_config):
    r = run("--config", n1_config, "scan", cache_dir=tmp_path)
    assert r.returncode == 0, r.stderr
    cache = tmp_path / "scan_n1.csv"
    lines = cache.read_text().splitlines()
    assert lines[0].startswith("# fingerprint=")
    assert lines[1].startswith("# checksum=")

    assert run("--config", n1_config, "action", cache_dir=tmp_path).returncode == 0
    plot = tmp_path / "plot.csv"
    r = run("--config", n1_config, "report", "--plot-csv", plot, cache_dir=tmp_path)
    assert r.returncode == 0, r.stderr
    ratio = next(ln for ln in r.stdout.splitlines() if "S_fit / S" in ln)
    assert abs(float(ratio.split()[-1]) - 1.0) < 0.05
    assert plot.read_text().startswith("# fingerprint=")


def test_resonance_json(tmp_path, n1_config):
    r = run("--config", n1_config, "resonance", "--h", "2e-3", cache_dir=tmp_path)
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    assert out["accepted"]
    assert out["rho"][1] < 0.0
    assert out["eigvec_residual"] < 1e-9
