import csv
import subprocess
import sys

import numpy as np
import pytest

from dynchamfer.cli import EXIT_DATA, EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, main


@pytest.fixture
def data(tmp_path):
    rng = np.random.default_rng(0)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    np.savetxt(a, rng.random((40, 3)), delimiter=",")
    np.savetxt(b, rng.random((30, 3)), delimiter=",")
    return str(a), str(b)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_csv(data, tmp_path):
    out = tmp_path / "out.csv"
    rc = main(["run", "--a", data[0], "--b", data[1], "--window", "10", "--samples", "20",
               "--seeds", "0", "--out", str(out)])
    assert rc == EXIT_OK
    rows = read_rows(out)
    assert rows and set(rows[0]) == {"run_id", "update_index", "algorithm", "estimate", "exact",
                                     "relative_error", "update_time_ns", "query_time_ns"}


def test_seed_list_multiplies_rows(data, tmp_path, monkeypatch):
    monkeypatch.delenv("CHAMFER_SEED", raising=False)
    one, five = tmp_path / "1.csv", tmp_path / "5.csv"
    base = ["run", "--a", data[0], "--b", data[1], "--window", "10", "--samples", "10"]
    assert main(base + ["--seeds", "1", "--out", str(one)]) == EXIT_OK
    assert main(base + ["--seeds", "1,2,3,4,5", "--out", str(five)]) == EXIT_OK
    assert len(read_rows(five)) == 5 * len(read_rows(one))


def test_seed_env_override(data, tmp_path, monkeypatch):
    out = tmp_path / "o.csv"
    monkeypatch.setenv("CHAMFER_SEED", "7")
    assert main(["run", "--a", data[0], "--b", data[1], "--window", "10", "--seeds", "1,2,3",
                 "--algos", "benchmark", "--out", str(out)]) == EXIT_OK
    assert {r["run_id"] for r in read_rows(out)} == {"7"}
    monkeypatch.setenv("CHAMFER_SEED", "abc")
    assert main(["run", "--a", data[0], "--b", data[1], "--out", str(out)]) == EXIT_USAGE


def test_benchmark_only_has_zero_error(data, tmp_path):
    out = tmp_path / "b.csv"
    assert main(["run", "--a", data[0], "--b", data[1], "--window", "10", "--algos", "benchmark",
                 "--seeds", "0", "--out", str(out)]) == EXIT_OK
    assert all(float(r["relative_error"]) == 0 for r in read_rows(out))


def test_fvecs_and_ab_mode(tmp_path):
    from dynchamfer.harness import write_fvecs
    rng = np.random.default_rng(1)
    a, b = tmp_path / "a.fvecs", tmp_path / "b.fvecs"
    write_fvecs(a, rng.random((30, 4)))
    write_fvecs(b, rng.random((30, 4)))
    out = tmp_path / "o.csv"
    assert main(["run", "--a", str(a), "--b", str(b), "--format", "fvecs", "--mode", "ab",
                 "--window", "20", "--seeds", "0", "--outlier", "--out", str(out)]) == EXIT_OK
    assert read_rows(out)


def test_usage_errors(data, capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "--a", data[0]])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main(["run", "--a", data[0], "--b", data[1], "--bogus"])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main(["run", "--a", data[0], "--b", data[1], "--algos", "ours,magic"])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == EXIT_USAGE
    assert main(["run", "--a", data[0], "--b", data[1], "--boost", "2"]) == EXIT_USAGE
    assert main(["run", "--a", data[0], "--b", data[1], "--eps", "1.5"]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_help_for_every_subcommand(capsys):
    for cmd in ("run", "verify", "bench"):
        with pytest.raises(SystemExit) as e:
            main([cmd, "--help"])
        assert e.value.code == 0
        assert "usage" in capsys.readouterr().out


def test_data_errors(data, tmp_path, capsys):
    assert main(["run", "--a", str(tmp_path / "missing.csv"), "--b", data[1]]) == EXIT_DATA
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert main(["run", "--a", str(bad), "--b", data[1]]) == EXIT_DATA
    # window longer than the stream
    assert main(["run", "--a", data[0], "--b", data[1], "--window", "1000"]) == EXIT_DATA
    assert "data error" in capsys.readouterr().err


def test_verify_quick_passes_and_fault_is_named(capsys):
    assert main(["verify", "--quick"]) == EXIT_OK
    assert main(["verify", "--quick", "--inject-fault", "gamma"]) == EXIT_PROPERTY
    err = capsys.readouterr().err
    assert "FAIL gamma_oracle" in err and "failed properties: gamma_oracle" in err


def test_bench_prints_table_and_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    rc = main(["bench", "--n-a", "300", "--n-b", "200", "--window", "50", "--max-steps", "40",
               "--csv", str(out)])
    assert rc == EXIT_OK
    text = capsys.readouterr().out
    assert "update/window step" in text and "algorithm,update_ns,query_ns,reports" in text
    assert {r["algorithm"] for r in read_rows(out)} == {"ours", "uniform", "benchmark"}


def test_bench_single_point_sets(capsys):
    assert main(["bench", "--synthetic", "cube", "--n-a", "1", "--n-b", "1", "--window", "1"]) == EXIT_OK
    assert "n/a" in capsys.readouterr().out


def test_bench_files_must_come_in_pairs(data):
    assert main(["bench", "--a", data[0]]) == EXIT_USAGE


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "dynchamfer.cli", "run", "--nope"], capture_output=True, text=True)
    assert r.returncode == EXIT_USAGE and "usage" in r.stderr
