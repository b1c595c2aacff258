import csv
import json

import pytest

from dgvar.cli import main


def write_config(tmp_path, **kw):
    cfg = {"density": "power:4", "p": 4, "beta": 0.1, "penalty": "pen1", "alphas": [160],
           "resolutions": [8], "alpha_tol": 1e-5, "formulation": "projected",
           "output_dir": str(tmp_path / "out"), "initial_guess": "interpolated-boundary-datum"}
    cfg.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["run", "--config", str(path)]) == 0
    assert "converged=True" in capsys.readouterr().out
    rows = list(csv.DictReader(open(tmp_path / "out" / "results.csv")))
    assert len(rows) == 1 and rows[0]["n_triangles"] == "8"


def test_sweep(tmp_path):
    path = write_config(tmp_path, alphas=[20, 160], resolutions=[8, 32])
    assert main(["sweep", "--config", str(path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "out" / "results.csv")))
    assert len(rows) == 4


def test_check_grad(tmp_path, capsys):
    path = write_config(tmp_path, penalty="pen2")
    assert main(["check-grad", "--config", str(path), "--samples", "2"]) == 0
    assert "check-grad PASS" in capsys.readouterr().out


def test_limsup(tmp_path, capsys):
    path = write_config(tmp_path, alphas=[20])
    assert main(["limsup", "--config", str(path), "--refinements", "3"]) == 0
    assert "limsup PASS" in capsys.readouterr().out
    assert (tmp_path / "out" / "limsup.csv").exists()


def test_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"density": "power:4", "unknown": 1}))
    assert main(["run", "--config", str(path)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
