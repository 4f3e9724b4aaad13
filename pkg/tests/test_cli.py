import csv
import io
import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from qprob import __version__, cli
from qprob.report import report_schema

DATA = Path(__file__).parent / "data"

GOLDEN = [
    ("discrete", "discrete.json", "discrete.golden.json"),
    ("discrete", "oscillator.json", "oscillator.golden.json"),
    ("fock", "fock.json", "fock.golden.json"),
    ("noncomm", "noncomm.json", "noncomm.golden.json"),
    ("evolve", "rabi.json", "rabi.golden.csv"),
]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


@pytest.mark.parametrize("sub,config,golden", GOLDEN)
def test_matches_golden_file(sub, config, golden, capsys):
    code, out, _ = run([sub, "--config", str(DATA / config)], capsys)
    assert code == 0
    assert out == (DATA / golden).read_text()


@pytest.mark.parametrize("sub,config,golden", [g for g in GOLDEN if g[2].endswith(".json")])
def test_reports_validate_against_schema(sub, config, golden, capsys):
    _, out, _ = run([sub, "--config", str(DATA / config)], capsys)
    doc = json.loads(out)
    jsonschema.Draft202012Validator(report_schema()).validate(doc)
    assert doc["version"] == __version__


@pytest.mark.parametrize("sub,config,golden", GOLDEN)
def test_byte_identical_reruns(sub, config, golden, capsys):
    first = run([sub, "--config", str(DATA / config), "--seed", "3"], capsys)[1]
    second = run([sub, "--config", str(DATA / config), "--seed", "3"], capsys)[1]
    assert first == second


def test_every_quantity_validates(tmp_path, capsys):
    configs = {
        "grid": {"system": {"preset": "gaussian", "center": 0, "sigma": 1,
                            "grid": {"lo": -8, "hi": 8, "n": 512}},
                 "requests": [{"quantity": q, "event": {"intervals": [[0, 8]]},
                               "given": {"intervals": [[-1, 8]]}}
                              for q in ("CE", "AP", "CP", "EXPECTATION")]},
        "grid2d": {"system": {"preset": "bivariate-normal", "correlation": 0.5, "n": 65},
                   "requests": [{"quantity": "INDEPENDENCE"}, {"quantity": "CE_POINT", "y": 1},
                                {"quantity": "CP_POINT", "x": 0.5, "y": 1}, {"quantity": "MARGINALS"},
                                {"quantity": "CE", "observable": "xy", "event": {"x": [[0, 8]]}},
                                {"quantity": "AP", "event": {"y": [[0, 8]]}},
                                {"quantity": "CP", "event": {"x": [[0, 8]]}, "given": {"y": [[0, 8]]}}]},
        "fock": {"system": {"mode_energies": [1, 2], "beta": 1, "statistics": "boson", "n_max": 3},
                 "requests": [{"quantity": "OCCUPATION", "mode": 1}, {"quantity": "MEAN"}]},
        "noncomm": {"system": {"preset": "gaussian", "k0": 1.0},
                    "requests": [{"quantity": "QUASI_CP", "x": 0.5, "n": 64},
                                 {"quantity": "COMMUTATOR", "n": 256}]},
        "evolve": {"system": {"preset": "rabi", "times": [0, 1]}, "format": "json"},
    }
    validator = jsonschema.Draft202012Validator(report_schema())
    for sub, doc in configs.items():
        code, out, err = run([sub, "--config", write_config(tmp_path, doc)], capsys)
        assert code == 0, err
        validator.validate(json.loads(out))


def test_evolve_csv_columns_and_values(capsys):
    _, out, _ = run(["evolve", "--config", str(DATA / "rabi.json")], capsys)
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
    assert list(rows[0]) == ["t", "CE", "AP", "CP"]
    for r in rows:
        assert float(r["AP"]) == pytest.approx(math.sin(float(r["t"])) ** 2, abs=1e-10)


def test_csv_report_header(capsys):
    _, out, _ = run(["discrete", "--config", str(DATA / "discrete.json"), "--format", "csv"], capsys)
    lines = out.splitlines()
    assert lines[0].startswith(f"# qprob {__version__} kind=discrete config_hash=")
    assert lines[1].split(",") == cli.REPORT_COLUMNS


def test_out_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run(["fock", "--config", str(DATA / "fock.json"), "--out", str(target)], capsys)
    assert code == 0
    assert target.read_text() == (DATA / "fock.golden.json").read_text()


def test_timing_is_opt_in(capsys):
    _, out, _ = run(["fock", "--config", str(DATA / "fock.json"), "--timing"], capsys)
    assert json.loads(out)["timing_seconds"] >= 0


def test_sample_file_input(tmp_path, capsys):
    (tmp_path / "psi.txt").write_text("x0 -1.0\ndx 1.0\nn 3\n0 1 0\n1 1 0\n2 1 0\n")
    doc = {"system": {"file": "psi.txt"}, "requests": [{"quantity": "EXPECTATION"}]}
    code, out, _ = run(["grid", "--config", write_config(tmp_path, doc)], capsys)
    assert code == 0
    assert json.loads(out)["results"][0]["value"] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("doc,field", [
    ({"system": {"eigenvalues": [1, 2], "amplitudes": [1, 0]}, "requests": [{"quantity": "XX"}]},
     "requests[0].quantity"),
    ({"system": {"eigenvalues": [1, 2], "amplitudes": [1, 0], "bogus": 1}}, "system"),
    ({"system": {"eigenvalues": [1, 2], "amplitudes": [1]}}, "system.amplitudes"),
    ({"kind": "fock", "system": {"eigenvalues": [1], "amplitudes": [1]}}, "kind"),
    ({"system": {"eigenvalues": [1, 2], "amplitudes": [1, 0]},
      "requests": [{"quantity": "CE", "event": {"indices": [-1]}}]}, "requests[0].event.indices[0]"),
])
def test_config_errors_name_the_field(tmp_path, capsys, doc, field):
    code, _, err = run(["discrete", "--config", write_config(tmp_path, doc)], capsys)
    assert code == 2
    assert field in err


def test_malformed_json(tmp_path, capsys):
    code, _, err = run(["discrete", "--config", write_config(tmp_path, '{"system": [1,')], capsys)
    assert code == 2 and "line 1" in err


def test_missing_config_file(tmp_path, capsys):
    code, _, err = run(["discrete", "--config", str(tmp_path / "nope.json")], capsys)
    assert code == 2


def test_zero_probability_condition_exits_2(tmp_path, capsys):
    doc = {"system": {"eigenvalues": [1, 2], "amplitudes": [1, 0]},
           "requests": [{"quantity": "CE", "event": {"indices": [1]}}]}
    code, _, err = run(["discrete", "--config", write_config(tmp_path, doc)], capsys)
    assert code == 2 and "DiscreteSet(indices=(1,))" in err


def test_verify_passes_on_default_seed(capsys):
    code, out, _ = run(["verify"], capsys)
    assert code == 0
    assert "FAIL" not in out


def test_verify_detects_perturbation(capsys):
    code, out, err = run(["verify", "--inject-perturbation", "1e-3"], capsys)
    assert code == 1
    assert "normalization" in err and "--inject-perturbation" in err


@pytest.mark.skipif(shutil.which("qprob") is None, reason="console script not installed")
def test_console_script_exit_code(tmp_path):
    doc = {"system": {"eigenvalues": [1], "amplitudes": [1]}, "requests": [{"quantity": "ZZ"}]}
    proc = subprocess.run(["qprob", "discrete", "--config", write_config(tmp_path, doc)],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qprob", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
