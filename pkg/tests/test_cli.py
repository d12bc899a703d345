import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import large_config, tri_config

from ptweyl.cli import main


def test_plan_from_config(write_config, tmp_path, capsys):
    path = write_config(tri_config(h=0.1))
    assert main(["plan", "--config", str(path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["N1"] == pytest.approx(21, abs=1e-9)
    assert report["M"] == pytest.approx(11, abs=1e-9)


def test_plan_from_flags(capsys):
    assert main(["plan", "--h", "0.1"]) == 0
    assert json.loads(capsys.readouterr().out)["Mtilde"] == pytest.approx(9.5)


def test_plan_domain_error_exit_1(capsys):
    assert main(["plan", "--h", "0.1", "--tau0", "0.9"]) == 1
    assert "tau0" in capsys.readouterr().err


def test_spectrum_triangular_csv(write_config, tmp_path):
    h, K = 0.1, 16
    path = write_config(tri_config(h=h, K=K))
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--config", str(path), "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    re = np.array([float(r["re"]) for r in rows])
    im = np.array([float(r["im"]) for r in rows])
    np.testing.assert_allclose(re, np.sort((h * np.arange(-K, K + 1)) ** 2), atol=1e-10)
    assert np.all(im == 0)


def test_weyl_subcommand(write_config, capsys):
    path = write_config(tri_config(h=0.05, grid={"nx": 256, "nxi": 256}))
    assert main(["weyl", "--config", str(path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    r = rep["regions"][0]
    assert r["prediction"] == pytest.approx(r["volume"]["fine"] / (2 * np.pi * 0.05))


def test_mc_twice_identical(write_config, tmp_path):
    path = write_config(tri_config(h=0.05, K=40, coupling=1e-6, trials=3))
    for d in ("a", "b"):
        assert main(["mc", "--config", str(path), "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a/summary.json").read_bytes() == (tmp_path / "b/summary.json").read_bytes()
    for i in range(3):
        name = f"eigs/trial_{i:04d}.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_mc_flag_overrides(write_config, tmp_path):
    path = write_config(tri_config(h=0.05, K=40, coupling=1e-6, trials=3))
    out = tmp_path / "o"
    assert main(["mc", "--config", str(path), "--out", str(out), "--trials", "2", "--seed", "5", "--coupling", "0"]) == 0
    s = json.loads((out / "summary.json").read_text())
    assert [t["seed"] for t in s["trials"]] == [5, 6]
    assert s["setup"]["plan"]["coupling_effective"] == 0.0


def test_mc_figures(write_config, tmp_path):
    path = write_config(tri_config(h=0.05, K=40, coupling=1e-6, trials=2))
    out = tmp_path / "o"
    assert main(["mc", "--config", str(path), "--out", str(out), "--figures"]) == 0
    pngs = list((out / "figures").glob("*.png"))
    assert pngs and all(p.stat().st_size > 0 for p in pngs)


def test_large_subcommand(write_config, tmp_path):
    path = write_config(large_config(K=30, lambdas=[50.0, 100.0]))
    assert main(["large", "--config", str(path), "--out", str(tmp_path / "L")]) == 0
    s = json.loads((tmp_path / "L/summary.json").read_text())
    assert s["mode"] == "large" and "growth_exponents" in s["aggregate"]["per_region"]["region_0"]


def test_malformed_config_names_path(write_config, capsys):
    cfg = tri_config()
    cfg["regions"][0]["radius"] = "wide"
    path = write_config(cfg)
    assert main(["mc", "--config", str(path)]) == 1
    assert "$.regions[0]" in capsys.readouterr().err


def test_invalid_json_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["check", "--config", str(p)]) == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_check_pt_and_non_pt(write_config, capsys):
    path = write_config(tri_config(h=0.1, K=20, coupling=1e-4, trials=2))
    assert main(["check", "--config", str(path)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["unperturbed"] == {"pt": True, "symmetric": True, "conjugation": True}
    cfg = tri_config(h=0.1, K=20)
    cfg["operator"]["potential"] = {"1": [0.0, 0.5], "-1": [0.0, 0.5]}  # i cos x
    path = write_config(cfg, "nonpt.json")
    assert main(["check", "--config", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["symbol"]["pt"] is False


def test_kyfan_subcommand(capsys):
    assert main(["kyfan", "--trials", "30", "--nmax", "16", "--seed", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["violations"] == 0


def test_console_script_module_entry():
    r = subprocess.run([sys.executable, "-m", "ptweyl.cli", "plan", "--h", "0.1"], capture_output=True, text=True)
    assert r.returncode == 0 and '"N1"' in r.stdout
