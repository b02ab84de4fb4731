import json
import os

import numpy as np
import pytest

from trfield.cli import (EXIT_EXISTENCE, EXIT_IO, EXIT_OK, EXIT_SCHEMA,
                         EXIT_TOLERANCE, main)
from trfield.simulate import Realization

MA_SPEC = {"flavor": "MA", "d": 1, "n": 1, "lambda": 1.0,
           "E": [[1.0]], "H": [[0.7]],
           "phi": {"variant": "euclidean"},
           "measure": {"variant": "gaussian"}}


def write_config(tmp_path, name, doc):
    path = os.path.join(tmp_path, name)
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


def run(tmp_path, command, doc, *extra):
    cfg = write_config(tmp_path, f"{command}_cfg.json", doc)
    out = os.path.join(tmp_path, f"out_{command}_{len(os.listdir(tmp_path))}")
    return main([command, "--config", cfg, "--out", out, *extra]), out


def test_check_ok(tmp_path):
    code, out = run(tmp_path, "check", {"command": "check", "spec": MA_SPEC})
    assert code == EXIT_OK
    report = json.load(open(os.path.join(out, "existence_report.json")))
    assert report["ok"]
    assert report["margins"]["eigenvalue_margin"] == pytest.approx(0.7)
    assert os.path.exists(os.path.join(out, "manifest.json"))


def test_check_schema_violation_bad_lambda(tmp_path):
    bad = dict(MA_SPEC, **{"lambda": -1.0})
    code, _ = run(tmp_path, "check", {"spec": bad})
    assert code == EXIT_SCHEMA


def test_check_schema_violation_missing_field(tmp_path):
    code, _ = run(tmp_path, "check", {"spec": {"flavor": "MA"}})
    assert code == EXIT_SCHEMA


def test_check_existence_failure(tmp_path):
    bad = {"flavor": "MA_B", "d": 2, "n": 1, "lambda": 1.0,
           "E": [[1.0, 0.0], [0.0, 1.0]], "H": [[0.4]],
           "phi": {"variant": "euclidean"},
           "measure": {"variant": "gaussian"}}
    code, _ = run(tmp_path, "check", {"spec": bad})
    assert code == EXIT_EXISTENCE


def test_command_mismatch(tmp_path):
    code, _ = run(tmp_path, "check", {"command": "cov", "spec": MA_SPEC})
    assert code == EXIT_SCHEMA


def test_missing_config_file(tmp_path):
    code = main(["check", "--config", os.path.join(tmp_path, "nope.json"),
                 "--out", os.path.join(tmp_path, "o")])
    assert code == EXIT_IO


def test_invalid_json(tmp_path):
    p = os.path.join(tmp_path, "bad.json")
    open(p, "w").write("{not json")
    code = main(["check", "--config", p, "--out",
                 os.path.join(tmp_path, "o")])
    assert code == EXIT_SCHEMA


def test_cov_artifacts(tmp_path):
    doc = {"command": "cov",
           "spec": {"variant": "IBTOFBF", "d": 1, "n": 1, "lambda": 0.5,
                    "H": [[0.7]]},
           "pairs": [[[1.0], [0.4]], [[0.5], [0.0]]]}
    code, out = run(tmp_path, "cov", doc)
    assert code == EXIT_OK
    csv = open(os.path.join(out, "covariance.csv")).read().splitlines()
    assert csv[0] == "x,x2,i,j,value"
    assert len(csv) == 3
    meta = json.load(open(os.path.join(out, "covariance_meta.json")))
    assert meta["spec"]["variant"] == "IBTOFBF"
    # values round-trip through repr at full precision
    from trfield.covariance import IsotropicGaussianSpec, ibtofbf_cov
    spec = IsotropicGaussianSpec.from_json(doc["spec"])
    expect = ibtofbf_cov(spec, [1.0], [0.4])[0, 0]
    assert float(csv[1].split(",")[-1]) == expect


def test_simulate_requires_seed(tmp_path):
    doc = {"method": "gaussian_exact",
           "spec": {"variant": "TFBM_LINE", "h": 0.6, "lambda": 0.2},
           "grid": {"ranges": [[0.0, 1.0]], "counts": [16]}}
    code, _ = run(tmp_path, "simulate", doc)
    assert code == EXIT_SCHEMA


def test_simulate_reproducible_payload_digests(tmp_path):
    doc = {"method": "gaussian_exact", "seed": 42, "n_draws": 2,
           "spec": {"variant": "ITOFBF", "d": 1, "n": 1, "lambda": 0.5,
                    "H": [[0.7]]},
           "grid": {"ranges": [[0.0, 1.0]], "counts": [32]}}
    code1, out1 = run(tmp_path, "simulate", doc)
    code2, out2 = run(tmp_path, "simulate", doc)
    assert code1 == code2 == EXIT_OK
    m1 = json.load(open(os.path.join(out1, "manifest.json")))
    m2 = json.load(open(os.path.join(out2, "manifest.json")))
    assert m1["outputs"] == m2["outputs"]
    assert m1["config_sha256"] == m2["config_sha256"]
    # artifacts load back through the library
    real = Realization.load(os.path.join(out1, "draw_0000.trf"))
    assert real.values.shape == (32, 1)
    assert real.values[0, 0] == 0.0


def test_simulate_seed_flag_override(tmp_path):
    doc = {"method": "tfsm", "hurst": 0.7, "alpha": 1.5, "lambda": 0.3,
           "grid": {"ranges": [[0.0, 1.0]], "counts": [8]},
           "integration_grid": {"ranges": [[-120.0, 1.0]], "counts": [512]}}
    cfg = write_config(tmp_path, "tfsm.json", doc)
    out = os.path.join(tmp_path, "out_tfsm")
    assert main(["simulate", "--config", cfg, "--out", out,
                 "--seed", "9"]) == EXIT_OK
    real = Realization.load(os.path.join(out, "draw_0000.trf"))
    assert real.provenance["seed"] == 9


def test_simulate_ma_existence_gate(tmp_path):
    bad_spec = dict(MA_SPEC, **{"lambda": 0.0})
    doc = {"method": "ma", "seed": 1, "spec": bad_spec,
           "grid": {"ranges": [[0.0, 1.0]], "counts": [4]},
           "integration_grid": {"ranges": [[-50.0, 51.0]], "counts": [256]}}
    code, _ = run(tmp_path, "simulate", doc)
    assert code == EXIT_EXISTENCE


def test_simulate_sas_truncation_refusal(tmp_path):
    sas_spec = dict(MA_SPEC, **{"lambda": 0.05,
                                "measure": {"variant": "sas",
                                            "alphas": [1.5]},
                                "H": [[0.3]]})
    doc = {"method": "ma", "seed": 1, "spec": sas_spec,
           "grid": {"ranges": [[0.0, 1.0]], "counts": [4]},
           "integration_grid": {"ranges": [[-40.0, 41.0]], "counts": [512]}}
    code, out = run(tmp_path, "simulate", doc)
    # grid covers far less than the tempering radius: refused with a
    # truncation report before any drawing happens
    assert code in (EXIT_TOLERANCE, EXIT_EXISTENCE)


def test_simulate_spectral_csv_export(tmp_path):
    doc = {"method": "spectral", "seed": 3, "csv": True,
           "spec": {"variant": "IBTOFBF", "d": 1, "n": 1, "lambda": 1.0,
                    "H": [[0.7]]},
           "grid": {"ranges": [[0.0, 1.0]], "counts": [8]},
           "freq_count": 128}
    code, out = run(tmp_path, "simulate", doc)
    assert code == EXIT_OK
    assert os.path.exists(os.path.join(out, "draw_0000.csv"))


def test_estimate_analytic_holder(tmp_path):
    doc = {"estimator": "directional_holder",
           "spec": {"h": 0.5, "lambda": 0.1},
           "lags": list(np.arange(2, 17) / 1023),
           "target": 0.5, "tolerance": 0.05}
    code, out = run(tmp_path, "estimate", doc)
    assert code == EXIT_OK
    rep = json.load(open(os.path.join(out, "estimate_report.json")))
    assert rep["passed"]
    assert os.path.exists(os.path.join(out, "scale_statistics.csv"))


def test_estimate_semi_lrd(tmp_path):
    doc = {"estimator": "semi_lrd",
           "spec": {"variant": "IBTOFBF", "d": 1, "n": 1, "lambda": 0.5,
                    "H": [[0.7]]},
           "lags_small": list(range(1, 9)),
           "lags_large": list(range(30, 61)),
           "lambda_target": 0.5, "slope_tolerance": 0.1}
    code, out = run(tmp_path, "estimate", doc)
    assert code == EXIT_OK
    rep = json.load(open(os.path.join(out, "estimate_report.json")))
    assert rep["extras"]["exponential_window"]


def test_estimate_box_dimension_from_saved_paths(tmp_path):
    sim = {"method": "gaussian_exact", "seed": 5, "n_draws": 3,
           "spec": {"variant": "TFBM_LINE", "h": 0.5, "lambda": 0.1},
           "grid": {"ranges": [[0.0, 1.0]], "counts": [1025]}}
    code, out_sim = run(tmp_path, "simulate", sim)
    assert code == EXIT_OK
    paths = [os.path.join(out_sim, f"draw_000{j}.trf") for j in range(3)]
    doc = {"estimator": "box_dimension", "realizations": paths,
           "target": 1.5, "tolerance": 0.2}
    code, out = run(tmp_path, "estimate", doc)
    assert code == EXIT_OK


def test_xcheck_pass_and_tolerance_failure(tmp_path):
    doc = {"check": "ibtofbf_closed_vs_spectral", "h": 0.7, "lambda": 1.0,
           "d": 1, "rtol": 1e-4,
           "pairs": [[[1.0], [0.4]], [[0.5], [-0.3]]]}
    code, out = run(tmp_path, "xcheck", doc)
    assert code == EXIT_OK
    rep = json.load(open(os.path.join(out, "xcheck_report.json")))
    assert rep["ok"] and rep["worst_rel_error"] < 1e-4
    # impossible tolerance trips exit 4 (tolerance-scale shrinks rtol)
    cfg = write_config(tmp_path, "xc2.json", doc)
    out2 = os.path.join(tmp_path, "out_xc2")
    code = main(["xcheck", "--config", cfg, "--out", out2,
                 "--tolerance-scale", "1e-8"])
    assert code == EXIT_TOLERANCE


def test_manifest_lists_inputs_and_outputs(tmp_path):
    doc = {"command": "check", "spec": MA_SPEC}
    code, out = run(tmp_path, "check", doc)
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert len(manifest["inputs"]) == 1
    assert "existence_report.json" in manifest["outputs"]
    assert manifest["version"]
