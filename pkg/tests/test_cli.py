import json
import os

import numpy as np
import pytest
import yaml

from cavity_eit.cli import RunConfig, apply_overrides, dump_config, load_config, main
from cavity_eit.exceptions import ConfigError

SMALL_GRID = {"omega_min": -3.0, "omega_max": 3.0, "omega_points": 25,
              "omega_cf_min": 0.5, "omega_cf_max": 3.0, "omega_cf_points": 6}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump({"grid": SMALL_GRID}))
    return path


def _table(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return np.array([[float(v) for v in l.split(",")] for l in lines[1:]])


def _run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_config_round_trip():
    cfg = apply_overrides(RunConfig(), ["c6=1.5e5", "grid.omega_points=101", "workers=3",
                                        "oracle.alphas=[0.001, 0.002, 0.004, 0.01]"])
    again = RunConfig.from_dict(yaml.safe_load(dump_config(cfg)))
    assert again == cfg
    assert again.params.c6 == 1.5e5 and again.grid.omega_points == 101


@pytest.mark.parametrize("data", [
    {"bogus": 1}, {"params": {"c7": 1}}, {"grid": {"omega_points": 2.5}},
    {"output": {"units": "Hz"}}, {"params": {"gamma_e": "fast"}}, {"params": [1, 2]},
    {"mode": "fit"}, {"workers": 0},
])
def test_invalid_configs_rejected(data):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


def test_exponent_literals_without_dot(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("params:\n  c6: 5e4\n  alpha: 1e-3\n")
    cfg = load_config(path)
    assert cfg.params.c6 == 5e4 and cfg.params.alpha == 1e-3


def test_tmatrix_report_without_interactions(config_file, tmp_path, capsys):
    out = tmp_path / "o"
    code, stdout, _ = _run(["tmatrix", "--config", config_file, "--out", out, "--params", "c6=0"], capsys)
    assert code == 0 and json.loads(stdout)["status"] == "ok"
    report = json.loads((out / "tmatrix.json").read_text())
    assert report["report"]["tmatrix"]["t0"] == {"re": 0.0, "im": 0.0}
    assert report["config"]["params"]["c6"] == 0.0


def test_map_outputs_and_header(config_file, tmp_path, capsys):
    out = tmp_path / "m"
    code, _, _ = _run(["map", "--config", config_file, "--out", out, "--workers", "2"], capsys)
    assert code == 0
    text = (out / "map.csv").read_text()
    header = [l for l in text.splitlines() if l.startswith("#")]
    body = [l for l in text.splitlines() if not l.startswith("#")]
    assert body[0] == "omega_cf,omega,s_inelastic,log10_s_inelastic"
    assert len(body) == 1 + 6 * 25
    assert any("c6: 50000.0" in l for l in header)
    assert "\r" not in text
    data = _table(out / "map.csv")
    assert data.shape == (150, 4)
    np.testing.assert_allclose(data[:, 3], np.log10(np.maximum(data[:, 2], 1e-300)), rtol=1e-15)
    overlays = _table(out / "map_overlays.csv")
    assert overlays.shape == (6, 7)
    assert np.all(np.diff(overlays[:, 1:], axis=1) >= 0)


def test_seventeen_significant_digits(config_file, tmp_path, capsys):
    out = tmp_path / "s"
    _run(["spectrum", "--config", config_file, "--out", out], capsys)
    rows = [l for l in (out / "spectrum.csv").read_text().splitlines() if not l.startswith("#")][1:]
    value = rows[3].split(",")[1]
    assert float(value) == float(format(float(value), ".17g"))
    assert len(value.split("e")[0].replace(".", "").replace("-", "").lstrip("0")) >= 15


def test_units_mhz(config_file, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    _run(["spectrum", "--config", config_file, "--out", a], capsys)
    _run(["spectrum", "--config", config_file, "--out", b, "--units", "MHz"], capsys)
    da = _table(a / "spectrum.csv")
    db = _table(b / "spectrum.csv")
    np.testing.assert_allclose(db[:, 0], 3.0 * da[:, 0], rtol=1e-15)
    # density per MHz keeps the integrated power fixed
    np.testing.assert_allclose(db[:, 1], da[:, 1] / 3.0, rtol=1e-15)


def test_output_env_override(config_file, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CAVITY_EIT_OUTPUT_DIR", str(tmp_path / "env"))
    code, _, _ = _run(["greens", "--config", config_file], capsys)
    assert code == 0
    cols = (tmp_path / "env" / "greens.csv").read_text().splitlines()
    header = [l for l in cols if not l.startswith("#")][0].split(",")
    assert header[:3] == ["omega", "G_a_a_re", "G_a_a_im"] and len(header) == 1 + 2 * (9 + 4)


@pytest.mark.parametrize("content", ["params: [1,\n", "params:\n  bogus: 1\n", "grid:\n  omega_points: -3\n"])
def test_bad_config_leaves_no_files(tmp_path, capsys, content):
    path = tmp_path / "bad.yaml"
    path.write_text(content)
    out = tmp_path / "never"
    code, _, err = _run(["map", "--config", path, "--out", out], capsys)
    assert code != 0
    record = json.loads(err.strip().splitlines()[-1])
    assert record["status"] == "error" and record["error_type"] == "ConfigError"
    assert not out.exists()


def test_usage_errors_are_machine_readable(capsys):
    code, _, err = _run(["frobnicate"], capsys)
    assert code == 2 and json.loads(err)["error_type"] == "UsageError"
    code, _, err = _run(["map"], capsys)
    assert code == 2


def test_mode_mismatch(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("mode: greens\n")
    code, _, err = _run(["map", "--config", path, "--out", tmp_path / "x"], capsys)
    assert code == 2 and "mode" in json.loads(err)["message"]


def test_oracle_compare(config_file, tmp_path, capsys):
    out = tmp_path / "oc"
    code, _, err = _run(["oracle-compare", "--config", config_file, "--out", out, "--params",
                         "alpha=1e-3", "oracle.observables=[elastic_weight, connected]"], capsys)
    assert code == 0, err
    report = json.loads((out / "oracle_compare.json").read_text())["report"]
    assert report["photon_number_ratio"] == pytest.approx(1.0, abs=1e-3)
    assert report["alpha_exponents"]["elastic_weight"]["exponent"] == pytest.approx(2.0, abs=0.02)
    assert report["alpha_exponents"]["connected"]["exponent"] == pytest.approx(4.0, abs=0.05)
    assert sorted(os.listdir(out)) == ["oracle_compare.json", "oracle_spectrum.csv"]


def test_init_config(capsys):
    code, out, _ = _run(["init-config"], capsys)
    assert code == 0 and RunConfig.from_dict(yaml.safe_load(out)) == RunConfig()
