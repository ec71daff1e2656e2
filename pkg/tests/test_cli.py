import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ponderomotive.cli import main
from ponderomotive.config import load_preset
from ponderomotive.params import QE


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    return list(reader)


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_spectrum_header_and_columns(capsys):
    code, out, _ = run(["spectrum", "--config", "preset:direct_detection"], capsys)
    assert code == 0
    assert "# schema_version: 1" in out and "# config_sha256: " in out
    table = rows(out)
    assert list(table[0]) == ["frequency_hz", "value_shot_units", "value_db"]
    assert len(table) == 1301
    # frequencies are written in Hz, never rad/s
    assert float(table[0]["frequency_hz"]) == pytest.approx(1.46e6)


def test_zero_coupling_is_flat(tmp_path, capsys):
    d = load_preset("direct_detection")
    d["coupling"]["g0_hz"] = 0.0
    code, out, _ = run(["spectrum", "--config", write_config(tmp_path, d)], capsys)
    assert code == 0
    assert all(float(r["value_shot_units"]) == pytest.approx(1.0, abs=1e-12) for r in rows(out))


def test_finite_lo_spectrum_squeezes(capsys):
    _, out, _ = run(["spectrum", "--config", "preset:finite_lo_homodyne"], capsys)
    assert min(float(r["value_shot_units"]) for r in rows(out)) < 1


def test_spectrum_json(capsys):
    code, out, _ = run(["spectrum", "--config", "preset:direct_detection", "--format", "json"], capsys)
    body = json.loads(out)
    assert code == 0 and body["schema_version"] == 1
    assert body["columns"] == ["frequency_hz", "value_shot_units", "value_db"]
    assert len(body["rows"]) == 1301


def test_outputs_are_byte_identical(tmp_path, capsys):
    for cmd in (["spectrum"], ["sweep", "--points", "2"]):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert run([*cmd, "--config", "preset:direct_detection", "--out", path], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()


def test_sweep_grid_is_complete_and_sorted(capsys):
    code, out, _ = run(["sweep", "--config", "preset:direct_detection"], capsys)
    table = rows(out)
    assert code == 0 and len(table) == 3 * 1301
    keys = [(float(r["axis_value"]), float(r["frequency_hz"])) for r in table]
    assert keys == sorted(keys)
    assert {r["status"] for r in table} == {"ok"}


def test_single_point_sweep_matches_spectrum(capsys):
    _, spec, _ = run(["spectrum", "--config", "preset:direct_detection"], capsys)
    _, sweep, _ = run(
        ["sweep", "--config", "preset:direct_detection", "--axis", "detuning", "--from", "-85000", "--to", "-85000", "--points", "1"],
        capsys,
    )
    a = [(r["frequency_hz"], r["value_shot_units"], r["value_db"]) for r in rows(spec)]
    b = [(r["frequency_hz"], r["value_shot_units"], r["value_db"]) for r in rows(sweep)]
    assert a == b


def test_sweep_flags_unstable_points(capsys):
    code, out, _ = run(
        ["sweep", "--config", "preset:direct_detection", "--axis", "detuning", "--from", "-50000", "--to", "250000", "--points", "4"],
        capsys,
    )
    table = rows(out)
    assert code == 0 and len(table) == 4 * 1301
    status = {float(r["axis_value"]): r["status"] for r in table}
    assert status[-50000.0] == "ok" and status[250000.0] == "unstable"
    assert all(r["value_shot_units"] == "nan" for r in table if r["status"] == "unstable")


def test_phi_map_has_squeezing_and_large_antisqueezing(capsys):
    _, out, _ = run(["sweep", "--config", "preset:finite_lo_homodyne", "--points", "61"], capsys)
    vals = np.array([float(r["value_shot_units"]) for r in rows(out)])
    assert vals.min() < 1
    assert 330 / 2 <= vals.max() <= 330 * 2


def test_power_sweep(capsys):
    code, out, _ = run(
        ["sweep", "--config", "preset:direct_detection", "--axis", "power", "--from", "0", "--to", "1.1e8", "--points", "2"], capsys
    )
    table = rows(out)
    assert code == 0
    assert all(float(r["value_shot_units"]) == pytest.approx(1.0) for r in table if float(r["axis_value"]) == 0)


def test_sweep_needs_range(tmp_path, capsys):
    d = load_preset("direct_detection")
    del d["sweep"]
    code, _, err = run(["sweep", "--config", write_config(tmp_path, d), "--axis", "phi"], capsys)
    assert code == 2 and "--from" in err


def test_analyze_config_report(capsys):
    code, out, _ = run(["analyze", "--config", "preset:direct_detection"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["schema_version"] == 1
    assert -2.3 <= rep["s_min_db"] <= -1.3
    assert rep["s_min_db"] == pytest.approx(10 * np.log10(rep["s_min"]), abs=1e-12)
    assert 4.8 <= rep["R"] <= 5.1 + 1e-9
    assert rep["C"] > 0
    assert 1.45e6 < rep["omega_opt_hz"] < 1.6e6
    assert set(rep["floors"]) == {"thermal", "efficiency", "combined"}
    assert rep["uncertainty_product"]["min"] >= 1 - 1e-9
    assert rep["contour"]


def test_analyze_flat_csv(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    path.write_text("frequency_hz,value_shot_units,value_db\n" + "".join(f"{1e6 + i},1.0,0.0\n" for i in range(10)))
    code, out, _ = run(["analyze", "--data", path], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["s_min_db"] == 0 and rep["contour"] == []


def test_analyze_round_trips_sweep_csv(tmp_path, capsys):
    path = tmp_path / "map.csv"
    run(["sweep", "--config", "preset:finite_lo_homodyne", "--points", "19", "--out", path], capsys)
    _, out, _ = run(["analyze", "--data", path], capsys)
    rep = json.loads(out)
    assert rep["s_min"] < 1 and -90 <= rep["phi_opt_deg"] <= 90


@pytest.mark.parametrize(
    "text, line",
    [
        ("frequency_hz,value_shot_units\n1e6,1.0\n2e6,oops\n", 3),
        ("# kind: spectrum\nfrequency_hz,value_shot_units\n1e6,1.0\n2e6\n", 4),
    ],
)
def test_analyze_malformed_csv_reports_line(tmp_path, capsys, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    code, _, err = run(["analyze", "--data", path], capsys)
    assert code == 2 and f":{line}:" in err


def test_analyze_needs_one_source(capsys):
    assert run(["analyze"], capsys)[0] == 2


def test_config_errors_exit_2(tmp_path, capsys):
    d = load_preset("direct_detection")
    d["cavity"]["kappa_hz"] = -1
    d["signal"]["nbar"] = -1
    code, _, err = run(["spectrum", "--config", write_config(tmp_path, d)], capsys)
    assert code == 2
    assert "cavity.kappa_hz" in err and "signal.nbar" in err


def test_unstable_config_exits_3(tmp_path, capsys):
    d = load_preset("direct_detection")
    d["signal"]["detuning_hz"] = 250e3
    code, _, err = run(["spectrum", "--config", write_config(tmp_path, d)], capsys)
    assert code == 3 and "unstable" in err


def test_oracle_check(tmp_path, capsys):
    d = load_preset("direct_detection")
    d["coupling"]["g0_hz"] = 0.0
    code, out, _ = run(["oracle-check", "--config", write_config(tmp_path, d), "--samples", "32"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and rep["max_relative_deviation"] < 1e-12
    code, out, _ = run(["oracle-check", "--config", "preset:finite_lo_homodyne"], capsys)
    assert code == 0 and json.loads(out)["max_relative_deviation"] < 1e-9


def test_fit_end_to_end(tmp_path, capsys):
    d = load_preset("direct_detection")
    d["signal"]["detuning_hz"] = -42e3
    measured = tmp_path / "measured.csv"
    run(["spectrum", "--config", write_config(tmp_path, d, "truth.json"), "--out", measured], capsys)
    d["signal"]["detuning_hz"] = 0.0
    code, out, _ = run(["fit", "--config", write_config(tmp_path, d), "--data", measured], capsys)
    rep = json.loads(out)
    assert code == 0
    assert abs(rep["detuning_hz"] + 42e3) < 1e-3 * 1.7e6


def test_calibrate(tmp_path, capsys):
    path = tmp_path / "cal.csv"
    current = np.linspace(1e-4, 2e-3, 8)
    path.write_text("photocurrent_a,psd_a2_per_hz\n" + "".join(f"{float(i)!r},{2 * QE * float(i)!r}\n" for i in current))
    code, out, _ = run(["calibrate", "--data", path], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["ratio_to_2qe"] == pytest.approx(1.0, abs=1e-10)


def test_calibrate_missing_column(tmp_path, capsys):
    path = tmp_path / "cal.csv"
    path.write_text("current,psd\n1,2\n2,4\n3,6\n")
    assert run(["calibrate", "--data", path], capsys)[0] == 2


def test_presets_listing(capsys):
    code, out, _ = run(["presets"], capsys)
    assert code == 0 and out.split() == ["direct_detection", "finite_lo_homodyne", "ideal_homodyne", "ideal_uncertainty"]


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ponderomotive.cli", "presets"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and "direct_detection" in proc.stdout
