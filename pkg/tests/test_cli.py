import csv
import io
import json

import numpy as np
import pytest

from crosskerr.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, main
from crosskerr.params import EXAMPLE_CONFIG


def _read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    return rows[0], np.array(rows[1:], dtype=float)


SMALL_GRID = ["--grid-range", "-4", "4", "--grid-points", "2048"]


def test_verify_passes(tmp_path):
    out = tmp_path / "verify.json"
    assert main(["verify", "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["report"]["passed"]
    assert rep["report"]["decoupling_residual"] < 1e-10
    assert rep["report"]["closed_form_V_difference"] < 1e-10
    assert rep["header"][0].startswith("crosskerr ")


def test_sweep_default_ratio(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--sweep-points", "25", "--out", str(out)]) == EXIT_OK
    cols, data = _read_csv(out)
    assert cols == ["P_op", "xi", "n_bar", "m_bar", "measure"]
    n_bar, m_bar = data[:, 2], data[:, 3]
    assert np.all(np.diff(n_bar) >= 0)
    assert np.all(m_bar < 1)
    assert np.all(np.diff(data[:, 0]) > 0)


def test_spectra_schemes_share_grid(tmp_path):
    a, b = tmp_path / "ho.csv", tmp_path / "lin.csv"
    assert main(["spectra", "--n-bar", "100", *SMALL_GRID, "--out", str(a)]) == EXIT_OK
    assert main(["spectra", "--n-bar", "100", "--scheme", "linearized", *SMALL_GRID,
                 "--out", str(b)]) == EXIT_OK
    ca, da = _read_csv(a)
    cb, db = _read_csv(b)
    assert ca == cb == ["w", "S_DD", "S_BB", "Sbar_BB"]
    np.testing.assert_array_equal(da[:, 0], db[:, 0])
    assert np.all(np.isnan(db[:, 1])) and np.all(np.isfinite(da[:, 1]))
    np.testing.assert_allclose(da[:, 3], da[::-1, 3])


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["reflectivity", "--n-bar", "100", *SMALL_GRID, "--out", str(path)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("# crosskerr ")
    assert "# units:" in text and "# config:" in text


def test_json_format(tmp_path):
    out = tmp_path / "ss.json"
    assert main(["steady-state", "--format", "json", "--out", str(out)]) == EXIT_OK
    rec = json.loads(out.read_text())
    assert "header" in rec
    assert abs(rec["result"]["n_bar"] - 252.48) < 0.05
    assert abs(rec["result"]["xi"] - 0.0155) < 1e-3


def test_linearized_reflectivity_rejected(tmp_path, capsys):
    code = main(["reflectivity", "--scheme", "linearized", *SMALL_GRID, "--out", str(tmp_path / "r.csv")])
    assert code == EXIT_INVALID
    assert "error" in capsys.readouterr().err


def test_invalid_inputs(tmp_path):
    assert main(["steady-state", "--power", "-1", "--out", str(tmp_path / "x")]) == EXIT_INVALID
    assert main(["spectra", "--grid-points", "1", "--out", str(tmp_path / "x")]) == EXIT_INVALID
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_numerical_failure_exit(tmp_path):
    # beyond the pump-balance turning point there is no steady state
    assert main(["steady-state", "--power", "1e-9", "--out", str(tmp_path / "x")]) == EXIT_NUMERICAL


def test_time_sim_small(tmp_path):
    out = tmp_path / "psd.csv"
    code = main(["time-sim", "--n-bar", "100", "--dt", "1e-2", "--steps", "4096", "--seeds", "3",
                 "--trace-stride", "64", "--out", str(out)])
    assert code == EXIT_OK
    cols, data = _read_csv(out)
    assert cols == ["w", "psd", "stderr", "analytic"]
    assert np.all(np.abs(data[:, 0]) <= 4) and np.all(data[:, 1] >= 0)
    traces = sorted(tmp_path.glob("psd_trace*.csv"))
    assert [t.name for t in traces] == ["psd_trace0.csv", "psd_trace1.csv", "psd_trace2.csv"]
    tcols, tdata = _read_csv(traces[0])
    assert tcols == ["tau", "re", "im", "out_re", "out_im"] and tdata.shape == (64, 5)


def test_time_sim_step_too_large(tmp_path):
    code = main(["time-sim", "--n-bar", "100", "--dt", "0.5", "--steps", "10", "--out",
                 str(tmp_path / "x.csv")])
    assert code == EXIT_INVALID


def test_noise_theory_json(tmp_path):
    out = tmp_path / "nt.json"
    assert main(["noise-theory", "--samples", "100000", "--format", "json", "--out", str(out)]) == EXIT_OK
    rec = json.loads(out.read_text())
    assert rec["bounds"][1]["bound"] == pytest.approx(2 ** 0.5 / 4)
    assert rec["dc_report"]["concentrated"]


def test_config_file_honored(tmp_path):
    cfg = tmp_path / "run.toml"
    params = {**EXAMPLE_CONFIG, "power_w": 2e-15}
    cfg.write_text("[params]\n" + "".join(f"{k} = {v!r}\n" for k, v in params.items())
                   + "[grid]\nrange = [-2.0, 2.0]\npoints = 1024\n[run]\nformat = \"json\"\n")
    out = tmp_path / "ss.json"
    assert main(["steady-state", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rec = json.loads(out.read_text())
    assert rec["result"]["xi"] == pytest.approx(0.015498228198828604 * 2 ** 0.5, rel=1e-12)
    config_line = json.loads(rec["header"][2].split("config: ", 1)[1])
    assert config_line["grid_points"] == 1024
    # command-line flags take precedence over the file
    assert main(["steady-state", "--config", str(cfg), "--power", "1e-15", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["result"]["xi"] == pytest.approx(0.015498228198828604, rel=1e-12)
