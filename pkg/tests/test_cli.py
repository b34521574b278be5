import json

import numpy as np
import pytest

from kinkflow import __version__
from kinkflow.cli import run
from kinkflow.output import ConfigError, read_config, read_csv, write_csv, write_json


def _result(root, cmd):
    return json.loads((root / cmd / "result.json").read_text())


def test_constants_output(tmp_path, capsys):
    assert run(["constants", "--k", "4", "--out", str(tmp_path)]) == 0
    res = _result(tmp_path, "constants")
    s = res["summary"]
    assert s["beta"] == pytest.approx(16.9705627, abs=1e-7)
    assert s["normalizations"]["residual"]["residual"] < 1e-12
    assert s["normalizations"]["paper"]["residual"] > 1e-6
    assert len(s["normalizations"]["residual"]["gamma"]) == 4
    manifest = json.loads((tmp_path / "constants" / "manifest.json").read_text())
    assert manifest["version"] == __version__
    assert manifest["parameters"]["k"] == 4
    assert "PASS" in capsys.readouterr().out


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for root in (a, b):
        assert run(["spectral", "--h", "0.05", "--seed", "5", "--out", str(root)]) == 0
    for name in ("result.json", "modes.csv"):
        assert (a / "spectral" / name).read_bytes() == (b / "spectral" / name).read_bytes()
    assert json.loads((a / "spectral" / "manifest.json").read_text())["parameters"]["seed"] == 5


@pytest.mark.parametrize(
    "argv",
    [
        ["toda", "--k", "3"],
        ["toda", "--k", "4", "--t-start", "-10", "--t-end", "-100"],
        ["simulate", "--dt", "0"],
        ["linear", "--sigma", "2.0"],
        ["frobnicate"],
        [],
        ["toda", "--bogus"],
    ],
)
def test_usage_errors_exit_2(argv, tmp_path):
    assert run(argv + ["--out", str(tmp_path)] if argv else argv) == 2


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "validate" in capsys.readouterr().out


def test_toda_small_run_and_csv(tmp_path):
    assert run(["toda", "--k", "2", "--t-start", "-2000", "--t-end", "-1000", "--dt", "1", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "toda" / "toda.csv")
    assert header == ["t", "xi_1", "xi_2", "gap_1", "log_scale"]
    assert data[0, 0] == -2000.0 and data[-1, 0] == -1000.0
    assert np.allclose(data[:, 3], data[:, 4], atol=1e-6)


def test_paper_normalization_fails_toda(tmp_path):
    code = run(["toda", "--k", "2", "--t-start", "-2000", "--t-end", "-1000", "--dt", "1",
                "--paper-normalization", "--out", str(tmp_path)])
    assert code == 1
    res = _result(tmp_path, "toda")
    assert res["summary"]["normalization"] == "paper"
    assert not res["checks"]["matches_explicit"]


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# toda recipe\nk = 6\nt-start = -3000\nt_end = -2000\ndt = 2\n")
    assert run(["toda", "--config", str(cfg), "--dt", "1", "--out", str(tmp_path)]) == 0
    params = json.loads((tmp_path / "toda" / "manifest.json").read_text())["parameters"]
    assert params["k"] == 6 and params["t_start"] == -3000.0 and params["dt"] == 1.0


@pytest.mark.parametrize("text", ["k = 4\nk = 6\n", "nonsense\n", "colour = red\n", "k = four\n"])
def test_bad_config_exit_2(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert run(["toda", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_missing_config_exit_2(tmp_path):
    assert run(["toda", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == 2


def test_env_var_sets_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("KINKFLOW_OUT", str(tmp_path / "env"))
    assert run(["constants", "--k", "2"]) == 0
    assert (tmp_path / "env" / "constants" / "result.json").exists()


def test_linear_and_simulate_short(tmp_path):
    assert run(["linear", "--t-start", "-1000", "--t-end", "-995", "--out", str(tmp_path)]) == 0
    lin = _result(tmp_path, "linear")["summary"]
    assert lin["max_defect_after_projection"] <= 1e-8 and lin["ratio"] > 0
    assert run(["simulate", "--t-start", "-200", "--t-end", "-190", "--stride", "200", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "simulate" / "interfaces.csv")
    assert header == ["t", "xi_1", "xi_2", "energy"] and data.shape[0] == 6


def test_report_aggregates_and_draws(tmp_path):
    pytest.importorskip("matplotlib")
    assert run(["report", "--out", str(tmp_path)]) == 2  # nothing to report yet
    run(["constants", "--k", "2", "--out", str(tmp_path)])
    run(["toda", "--k", "2", "--t-start", "-2000", "--t-end", "-1000", "--dt", "1", "--out", str(tmp_path)])
    assert run(["report", "--out", str(tmp_path)]) == 0
    rep = _result(tmp_path, "report")
    assert set(rep["summary"]["results"]) == {"constants", "toda"}
    assert (tmp_path / "toda" / "toda.png").stat().st_size > 1000
    header = (tmp_path / "report" / "report.csv").read_text().splitlines()[0].split(",")
    assert header == ["command", "check", "passed"]
    run(["toda", "--k", "2", "--t-start", "-2000", "--t-end", "-1000", "--dt", "1", "--paper-normalization",
         "--out", str(tmp_path)])
    assert run(["report", "--out", str(tmp_path)]) == 1


def test_writers_round_trip(tmp_path):
    p = write_csv(tmp_path / "x.csv", ["a", "b"], [[0.1, 1], [1 / 3, 2]])
    assert p.read_text() == "a,b\n0.1,1\n0.3333333333333333,2\n"
    h, d = read_csv(p)
    assert h == ["a", "b"] and d[1, 0] == 1 / 3
    j = write_json(tmp_path / "x.json", {"z": np.float64(1.5), "a": np.arange(2), "n": float("nan"), "b": np.bool_(True)})
    assert list(json.loads(j.read_text())) == ["z", "a", "n", "b"]
    assert json.loads(j.read_text())["n"] == "nan"


def test_read_config_strips_comments(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("\n# header\nhalf-width = 30  # wide\n")
    assert read_config(p) == {"half_width": "30"}
    p.write_text("= 3\n")
    with pytest.raises(ConfigError):
        read_config(p)
