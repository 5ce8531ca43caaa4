import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dispcancel import parse_config, serialize
from dispcancel.cli import main
from dispcancel.config import ConfigError

BASE = {
    "source": {"family": "gaussian_quantum", "P": 1e6, "T0": 1e-12},
    "detector": {"response": "gaussian", "Tg": 1e-9},
}
CLASSICAL_MC = {
    "source": {"family": "gaussian_classical", "P": 0.2, "T0": 1.0},
    "grid": {"n": 8192, "dt": 0.03125},
    "montecarlo": {"trials": 8, "seed": 4},
}


def _errors(doc):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(doc))
    return dict(info.value.errors)


def test_minimal_config_defaults():
    cfg = parse_config(json.dumps({"source": {"family": "gaussian_classical", "P": 1, "T0": 1}}))
    assert cfg.detector.is_ideal and cfg.detector.eta == 1 and cfg.detector.q == 1
    assert cfg.filters.net_beta == 0 and cfg.grid is None and cfg.montecarlo is None


def test_all_errors_reported_with_paths():
    errs = _errors({
        "source": {"family": "rect_noise", "P": -1, "Omega": 1, "G": 0.5, "colour": 1},
        "detector": {"eta": 1.5, "response": "gaussian"},
        "grid": {"n": 100, "dt": 0.1},
        "extra": True,
    })
    assert errs["extra"] == "unknown key"
    assert errs["source.colour"] == "unknown key"
    assert "eta" in errs["detector.eta"]
    assert errs["detector.Tg"] == "required key missing"
    assert "power of two" in errs["grid.n"]


def test_gain_message():
    errs = _errors({"source": {"family": "rect_noise", "P": 1, "Omega": 1, "G": 0.5}})
    assert "gain ≥ 1 required" in errs["source.G"]


def test_unknown_family_and_bad_json():
    assert "unknown family" in _errors({"source": {"family": "laser"}})["source.family"]
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_balanced_beta_conflict():
    errs = _errors({"source": BASE["source"],
                    "filters": {"balanced_beta": 1e-24, "signal": {"beta": 1e-24}}})
    assert "conflicts" in errs["filters.signal.beta"]


def test_balanced_beta_expands():
    cfg = parse_config(json.dumps({"source": BASE["source"], "filters": {"balanced_beta": 2e-24}}))
    assert cfg.filters.signal.beta == 2e-24 and cfg.filters.reference.beta == -2e-24


def test_semiclassical_gate_at_parse():
    doc = dict(CLASSICAL_MC, source={"family": "gaussian_quantum", "P": 0.2, "T0": 1.0})
    assert "semiclassical gate" in _errors(doc)["montecarlo"]


def test_roundtrip():
    doc = {"source": {"family": "rect_noise", "P": 0.3, "Omega": 2.0, "G": 1.7, "pump_phase": 0.4},
           "filters": {"omega0": 5.0, "signal": {"tau_p": 0.1, "beta": 3.0},
                       "reference": {"tau_g": -1.0}},
           "detector": {"response": "gaussian", "Tg": 0.5, "eta": 0.9, "q": 1.6e-19},
           "grid": {"n": 1024, "dt": 0.01},
           "montecarlo": {"trials": 10, "seed": 3, "burn_margin": 0.05}}
    cfg = parse_config(json.dumps(doc))
    again = parse_config(serialize(cfg))
    assert serialize(again) == serialize(cfg)
    assert again.filters.reference.tau_g == -1.0 and again.source.pump_phase == 0.4


def test_tabulated_roundtrip():
    w = list(np.linspace(-5, 5, 11))
    s = [1.0] * 11
    doc = {"source": {"family": "custom_tabulated", "omega": w, "S_SS": s, "S_RR": s,
                      "S_SR_re": [0.5] * 11, "S_SR_im": [0.1] * 11}}
    cfg = parse_config(json.dumps(doc))
    assert json.loads(serialize(parse_config(serialize(cfg)))) == json.loads(serialize(cfg))


# -- CLI -------------------------------------------------------------------------

def _write(tmp_path, doc):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(doc))
    return p


def _read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_analyze(tmp_path, capsys):
    cfg = _write(tmp_path, BASE)
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["contrast"] == pytest.approx(398.9, rel=1e-2)
    assert rep["classification"]["label"] == "maximally_entangled"
    rows = _read_csv(tmp_path / "o" / "trace.csv")
    assert rows[0] == ["tau_s", "C", "C_acc", "C_dc"]
    assert len(rows[1][1].replace("-", "").replace(".", "").split("e")[0]) >= 15
    out = json.loads(capsys.readouterr().out)
    assert out["scenario_hash"] == rep["scenario_hash"]


def test_bounds(tmp_path):
    cfg = _write(tmp_path, {"source": {"family": "rect_noise", "P": 1.0, "Omega": 3.14159,
                                       "G": 3.0}})
    assert main(["bounds", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["classification"]["label"] == "classical"


def test_montecarlo(tmp_path):
    cfg = _write(tmp_path, CLASSICAL_MC)
    assert main(["montecarlo", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / "mc_trace.csv")
    assert rows[0] == ["tau_s", "C", "C_acc", "C_dc", "stderr"]
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["seed"] == 4 and rep["traces"] == ["mc_trace.csv"]


def test_sweep_beta(tmp_path):
    doc = {"source": {"family": "gaussian_classical", "P": 1.0, "T0": 1.0}}
    cfg = _write(tmp_path, doc)
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path),
                 "--sweep-param", "beta_s", "--values", "2,0,1"]) == 0
    rows = _read_csv(tmp_path / "sweep.csv")
    assert rows[0][:3] == ["value", "beta_s", "beta_r"]
    fwhm = [float(r[4]) for r in rows[1:]]
    assert [float(r[0]) for r in rows[1:]] == [0, 1, 2]
    assert fwhm[0] < fwhm[1] < fwhm[2]


def test_sweep_gain(tmp_path):
    cfg = _write(tmp_path, {"source": {"family": "rect_noise", "P": 1.0, "Omega": 3.0}})
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path),
                 "--sweep-param", "gain", "--values", "1,2,4"]) == 0
    labels = [r[-1] for r in _read_csv(tmp_path / "sweep.csv")[1:]]
    assert labels == ["maximally_entangled", "classical", "classical"]


@pytest.mark.parametrize("argv_extra,doc,code", [
    (["analyze"], {"source": {"family": "gaussian_quantum", "P": -1, "T0": 1}}, 2),
    (["montecarlo"], dict(CLASSICAL_MC, source={"family": "gaussian_quantum", "P": 1, "T0": 1}), 2),
    (["sweep", "--sweep-param", "beta", "--values", ""], BASE, 2),
    (["sweep", "--sweep-param", "gain", "--values", "0.5"],
     {"source": {"family": "rect_noise", "P": 1, "Omega": 1}}, 2),
    (["analyze"], dict(BASE, grid={"n": 64, "dt": 1e-13}), 3),
    (["montecarlo"], dict(CLASSICAL_MC, source={"family": "gaussian_classical", "P": 50.0,
                                                "T0": 1.0}), 3),
])
def test_exit_codes(tmp_path, capsys, argv_extra, doc, code):
    cfg = _write(tmp_path, doc)
    argv = [argv_extra[0], "--config", str(cfg), "--out", str(tmp_path)] + argv_extra[1:]
    assert main(argv) == code
    err = capsys.readouterr().err.strip().splitlines()
    assert err and all({"path", "message"} <= set(json.loads(line)) for line in err)


def test_missing_config_file(tmp_path):
    assert main(["analyze", "--config", str(tmp_path / "nope.json")]) == 2


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, {"source": {"family": "gaussian_classical", "P": 1.0, "T0": 1.0}})
    proc = subprocess.run([sys.executable, "-m", "dispcancel", "bounds", "--config", str(cfg),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["label"] == "classical_maximally_correlated"
