import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from dsc_cavity.cli import main, parse_sweep
from dsc_cavity.model import ParameterError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    return json.loads(lines[0][2:]), list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_uncoupled_spectrum_rows(capsys):
    code, out, _ = run(capsys, "spectrum", "--ratio", "0")
    assert code == 0
    config, rows = table(out)
    assert config["omega_0"] == 1.7 and config["command"] == "spectrum"
    np.testing.assert_allclose([float(r["omega_over_omega_c"]) for r in rows], [1, 1.7, 2, 3, 4, 5])
    assert set(rows[0]) == {"omega_r_over_omega_0", "mode", "omega_over_omega_c", "flag", "asymptotic_over_omega_c"}


def test_output_is_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(capsys, "spectrum", "--sweep", "0:2:5", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_json_format(capsys):
    code, out, _ = run(capsys, "fractions", "--sweep", "0:3:4", "--n-modes", "50", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["columns"] == ["omega_r_over_omega_0", "chi_0", "chi_1", "chi_2", "chi_3"]
    assert len(doc["rows"]) == 4
    first = doc["rows"][0]
    assert (first["chi_0"], first["chi_1"]) == (0.0, 1.0)  # omega_c sorts below omega_0 = 1.7


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("omega_0: 1.0\nl: 0.5\nomega_r: 0.0\nn_modes: 20\n")
    code, out, _ = run(capsys, "spectrum", "--config", str(cfg), "--count", "4")
    assert code == 0
    config, rows = table(out)
    assert config["n_modes"] == 20
    np.testing.assert_allclose([float(r["omega_over_omega_c"]) for r in rows], [1, 1, 2, 3])


@pytest.mark.parametrize("argv", [
    ["spectrum", "--l", "1.5"],
    ["spectrum", "--omega-0", "-1"],
    ["spectrum", "--sweep", "2:1:5"],
    ["spectrum", "--sweep", "nonsense"],
    ["spectrum", "--n-modes", "0"],
    ["spectrum", "--bogus"],
    ["emission", "--gamma-el", "0"],
    ["field", "--modes", "a,b"],
    ["spectrum", "--out", "/nonexistent-dir/x.csv"],
])
def test_invalid_input_exits_with_one(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == 1


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"omega_0": 1.0, "wall": 0.5}))
    assert run(capsys, "spectrum", "--config", str(cfg))[0] == 1


def test_sweep_parser():
    np.testing.assert_allclose(parse_sweep("0:1:3").values(), [0, 0.5, 1])
    np.testing.assert_allclose(parse_sweep("0.01:1:3", log=True).values(), [0.01, 0.1, 1])
    with pytest.raises(ParameterError):
        parse_sweep("0:1:3", log=True)


def test_xcheck_passes_on_small_sweep(capsys):
    code, out, err = run(capsys, "xcheck", "--sweep", "0:2:3")
    assert code == 0
    assert "xcheck PASS" in err
    _, rows = table(out)
    assert len(rows) == 6
    assert max(float(r["dev_root_vs_classical"]) for r in rows) < 1e-10


def test_xcheck_fails_when_truncated(capsys):
    code, _, err = run(capsys, "xcheck", "--sweep", "0:2:3", "--n-modes", "5")
    assert code == 1
    assert "xcheck FAIL" in err


def test_field_profiles_match(capsys):
    code, out, _ = run(capsys, "field", "--ratio", "1", "--modes", "0,1,2", "--z-points", "51")
    assert code == 0
    _, rows = table(out)
    assert len(rows) == 3 * 51
    corr = {r["mode"]: float(r["correlation"]) for r in rows}
    assert min(corr.values()) > 0.99
    assert all(float(r["quantum_abs_E_normalized"]) <= 1 for r in rows)
    for r in rows:
        assert float(r["intensity_normalized"]) == pytest.approx(float(r["quantum_abs_E_normalized"]) ** 2, abs=1e-12)


def test_spectrum_convergence_report(capsys):
    code, _, err = run(capsys, "spectrum", "--ratio", "1", "--n-modes", "100", "--convergence")
    assert code == 0
    assert "N=100 -> 200" in err


def test_emission_rows(capsys):
    code, out, _ = run(capsys, "emission", "--sweep", "0:0.1:2", "--n-modes", "30")
    assert code == 0
    _, rows = table(out)
    assert [float(r["gamma_over_omega_0"]) for r in rows][0] == 0
    assert float(rows[1]["gamma_weak_coupling"]) == pytest.approx(0.2)
    assert float(rows[1]["gamma_plateau"]) == pytest.approx(0.05)
    assert float(rows[1]["gamma_over_omega_0"]) > 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dsc_cavity", "spectrum", "--ratio", "0", "--count", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1].startswith("0,1,1.7")
