import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from tricompress.cli import main
from tricompress.matrix import CsvLayout, load_csv, write_csv


def run(*argv):
    out = io.StringIO()
    try:
        code = main([str(a) for a in argv], out=out)
    except SystemExit as exc:
        code = exc.code
    return code, out.getvalue()


def save(path, x, **layout):
    path.write_text(write_csv(np.asarray(x, dtype=float), CsvLayout(**layout)))
    return path


@pytest.fixture
def lowrank_csv(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.random((12, 3)) @ rng.random((3, 40)) * 100
    return save(tmp_path / "x.csv", x), x


def test_compress_decompress_round_trip(tmp_path, lowrank_csv):
    src, x = lowrank_csv
    arc, back = tmp_path / "x.tcz", tmp_path / "back.csv"
    code, text = run("compress", src, arc)
    assert code == 0 and "archive bytes" in text
    assert run("decompress", arc, back)[0] == 0
    xhat = load_csv(back.read_bytes())
    assert xhat.shape == x.shape
    assert np.abs(xhat.values - x).max() <= 1e-4


def test_compress_json_is_stable(tmp_path, lowrank_csv):
    src, _ = lowrank_csv
    _, a = run("compress", src, tmp_path / "a.tcz", "-k", "2", "--json")
    _, b = run("compress", src, tmp_path / "b.tcz", "-k", "2", "--json")
    assert a == b
    rep = json.loads(a)
    assert rep["k"] == 2 and rep["rank"] == 3
    assert set(rep["stage_bytes"]) == {"svd", "normalization", "sparsity"}
    assert (tmp_path / "a.tcz").read_bytes() == (tmp_path / "b.tcz").read_bytes()


def test_svd_only_flags_store_exact_entry_count(tmp_path):
    x = np.random.default_rng(1).random((10, 25))
    src = save(tmp_path / "x.csv", x)
    code, text = run("compress", src, tmp_path / "x.tcz", "-k", "5", "--no-sparsity",
                     "--no-normalization", "--raw-float-bytes", "8", "--json")
    rep = json.loads(text)
    assert code == 0
    assert rep["stored_entries"] == (10 + 1 + 25) * 5
    assert rep["archive_bytes"] == 86 + 8 * (10 + 1 + 25) * 5


def test_target_ratio_met_or_flagged(tmp_path, lowrank_csv):
    src, _ = lowrank_csv
    for target in ("2", "15"):
        rep = json.loads(run("compress", src, tmp_path / "x.tcz", "--target-ratio", target, "--json")[1])
        assert rep["entry_ratio"] >= float(target) or rep["best_effort"]
    rep = json.loads(run("compress", src, tmp_path / "x.tcz", "--target-ratio", "15", "--json")[1])
    assert rep["best_effort"] and rep["k"] == 1
    code, text = run("compress", src, tmp_path / "x.tcz", "--target-ratio", "15")
    assert code == 0 and "best effort" in text


def test_timestamps_orientation_transposes(tmp_path):
    x = np.arange(12.0).reshape(3, 4)
    src = save(tmp_path / "x.csv", x.T)  # one row per sample
    arc, back = tmp_path / "x.tcz", tmp_path / "back.csv"
    rep = json.loads(run("compress", src, arc, "--orientation", "timestamps", "--json")[1])
    assert (rep["m"], rep["t"]) == (3, 4)
    run("decompress", arc, back, "--orientation", "timestamps")
    got = np.loadtxt(back, delimiter=",")
    assert got.shape == (4, 3)
    np.testing.assert_allclose(got, x.T, atol=1e-5)


def test_header_and_delimiter(tmp_path):
    src = tmp_path / "x.csv"
    src.write_text("a;b;c\n1;2;3\n4;5;6\n")
    rep = json.loads(run("compress", src, tmp_path / "x.tcz", "--header", "--delimiter", ";",
                         "--json")[1])
    assert (rep["m"], rep["t"]) == (2, 3)


def test_analyze_identity(tmp_path):
    src = save(tmp_path / "eye.csv", np.eye(10))
    code, text = run("analyze", src, "--json")
    assert code == 0
    info = json.loads(text)
    assert info["rank"] == 10 and info["sparsity"] == pytest.approx(0.9)
    assert (info["m"], info["t"]) == (10, 10)
    assert info["uncompressed_kb"] == pytest.approx(0.8)
    rows = list(csv.DictReader(open(info["spectrum_csv"])))
    assert len(rows) == 10
    assert float(rows[0]["normalized_eigenvalue"]) == 1.0
    assert float(rows[-1]["k_over_rank"]) == 1.0


def test_analyze_custom_spectrum_path(tmp_path, lowrank_csv):
    src, _ = lowrank_csv
    spectrum_csv = tmp_path / "s.csv"
    code, text = run("analyze", src, "--spectrum", spectrum_csv)
    assert code == 0 and "rank" in text
    lines = spectrum_csv.read_text().splitlines()
    assert lines[0] == "k,k_over_rank,eigenvalue,normalized_eigenvalue"
    assert len(lines) == 13


def test_sweep_defaults(tmp_path, lowrank_csv, monkeypatch):
    src, _ = lowrank_csv
    monkeypatch.chdir(tmp_path)
    code, text = run("sweep", src)
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert len(rows) == 8
    assert [float(r["target_ratio"]) for r in rows] == [78, 39, 25, 19, 15, 9, 5, 4]
    ks = [int(r["k"]) for r in rows]
    assert ks == sorted(ks)
    assert (tmp_path / "sweep.mae_curve.csv").exists()


def test_sweep_custom_ratios(tmp_path, lowrank_csv):
    src, _ = lowrank_csv
    out = tmp_path / "s.csv"
    assert run("sweep", src, "-o", out, "--ratios", "2")[0] == 0
    assert len(list(csv.DictReader(open(out)))) == 1
    assert run("sweep", src, "-o", out, "--ratios", "9,4 2")[0] == 0
    assert len(list(csv.DictReader(open(out)))) == 3
    assert run("sweep", src, "-o", out, "--ratios", "0.5")[0] == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["compress", "in.csv"],
        ["compress", "in.csv", "o.tcz", "-k", "2", "--target-ratio", "5"],
        ["compress", "in.csv", "o.tcz", "--mantissa-bits", "x"],
        ["sweep", "in.csv", "--ratios", "a,b"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "in.csv").write_text("1,2\n3,4\n")
    assert run(*argv)[0] == 1


def test_semantic_usage_errors_exit_1(tmp_path, lowrank_csv):
    src, _ = lowrank_csv
    assert run("compress", src, tmp_path / "o.tcz", "--mantissa-bits", "40")[0] == 1
    assert run("compress", src, tmp_path / "o.tcz", "-k", "99")[0] == 1
    assert run("compress", src, tmp_path / "o.tcz", "--target-ratio", "1")[0] == 1


def test_input_errors_exit_2(tmp_path):
    assert run("compress", tmp_path / "missing.csv", tmp_path / "o.tcz")[0] == 2
    bad = tmp_path / "bad.csv"
    for text in ("1,2\n3\n", "1,x\n", "", "1,nan\n"):
        bad.write_text(text)
        assert run("compress", bad, tmp_path / "o.tcz")[0] == 2
        assert run("analyze", bad)[0] == 2
    assert run("decompress", tmp_path / "missing.tcz", tmp_path / "o.csv")[0] == 2


def test_archive_errors_exit_3(tmp_path, lowrank_csv):
    src, _ = lowrank_csv
    arc = tmp_path / "x.tcz"
    run("compress", src, arc)
    data = bytearray(arc.read_bytes())
    data[-3] ^= 0x10
    arc.write_bytes(bytes(data))
    code, _ = run("decompress", arc, tmp_path / "o.csv")
    assert code == 3
    assert not (tmp_path / "o.csv").exists()
    src.write_bytes(b"not an archive")
    assert run("decompress", src, tmp_path / "o.csv")[0] == 3


def test_module_entry_point_exit_codes(tmp_path, lowrank_csv):
    src, _ = lowrank_csv
    cmd = [sys.executable, "-m", "tricompress"]
    ok = subprocess.run(cmd + ["analyze", str(src)], capture_output=True, text=True)
    assert ok.returncode == 0 and "rank" in ok.stdout
    bad = subprocess.run(cmd + ["compress"], capture_output=True, text=True)
    assert bad.returncode == 1
    missing = subprocess.run(cmd + ["analyze", str(tmp_path / "nope.csv")], capture_output=True, text=True)
    assert missing.returncode == 2 and "input error" in missing.stderr
