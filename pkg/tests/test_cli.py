"""End-to-end runs of the command-line interface on tiny workloads."""
import json
import math
from pathlib import Path

import numpy as np
import pytest

from pointscat.cli import main
from pointscat.report import read_csv
from pointscat.sampling import PointCloud, save_cloud

BALL = "scenarios/ball3d.toml"


def test_validate_ok(tmp_path, capsys):
    rc = main(["validate", BALL, "--out-dir", str(tmp_path)])
    assert rc == 0
    assert "scenario OK" in capsys.readouterr().out
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["results"]["violations"] == []


def test_validate_rejects_packing_violation(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(Path(BALL).read_text().replace("ell = 1.0", "ell = 2.5"))
    rc = main(["validate", str(bad), "--out-dir", str(tmp_path / "out")])
    assert rc == 2
    assert "assumption" in capsys.readouterr().err
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["results"]["violations"]


def test_sample_writes_cloud(tmp_path):
    rc = main(["sample", BALL, "--n", "16", "--out-dir", str(tmp_path)])
    assert rc == 0
    header, rows = read_csv(tmp_path / "cloud.csv")
    assert len(rows) == 16
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["results"]["N"] == 16
    assert man["results"]["min_pair_distance"] > 0


def test_spectrum_from_cloud_file(tmp_path, capsys):
    cloud = PointCloud(d=3, N=1, positions=np.zeros((1, 3)),
                       strengths=np.array([-1.0 / (4.0 * math.pi)]),
                       min_pair_distance=math.inf, seed=0)
    cloud_csv = tmp_path / "one.csv"
    save_cloud(cloud, cloud_csv)
    out = tmp_path / "run"
    rc = main(["spectrum", BALL, "--cloud", str(cloud_csv),
               "--emin", "-9", "--emax", "-0.25", "--out-dir", str(out)])
    assert rc == 0
    assert "E_0 = -3.99999999" in capsys.readouterr().out
    _, rows = read_csv(out / "spectrum.csv")
    assert len(rows) == 1
    assert float(rows[0][1]) == pytest.approx(-4.0, abs=1e-6)
    rep = json.loads((out / "spectrum.json").read_text())
    assert rep["eigenvalues"][0] == pytest.approx(-4.0, abs=1e-6)


def test_xi_scan_lambda_trend(tmp_path):
    rc = main(["xi-scan", BALL, "--n", "32", "--lambdas", "2,4",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    _, rows = read_csv(tmp_path / "xi_scan.csv")
    assert [r[0] for r in rows] == ["2", "4"]
    me = [float(r[2]) for r in rows]
    assert me[1] > me[0]  # scaled min eigenvalue grows with lambda
    assert (tmp_path / "plots" / "min_eig.txt").exists()


def test_measures_subcommand(tmp_path):
    rc = main(["measures", BALL, "--n-list", "32,64", "--seeds", "2",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    _, rows = read_csv(tmp_path / "measures.csv")
    assert len(rows) == 8  # 2 N values x 2 seeds x 2 quantities
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert len(man["results"]["zeta0_mean_gaps"]) == 2
    assert man["oracles"][0]["name"] == "riesz_s1_integral"


def test_usage_errors_exit_2(tmp_path, capsys):
    rc = main(["spectrum", BALL, "--emin", "-0.1", "--emax", "-4",
               "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_nonconvergence_exits_3(tmp_path, capsys):
    # lambda far below the coercivity onset of the dense cloud
    rc = main(["resolvent-gap", "scenarios/ball3d_dense.toml",
               "--n-list", "16", "--seeds", "1", "--lam", "0.3",
               "--grid", "2.0,0.25", "--out-dir", str(tmp_path)])
    assert rc == 3
    assert "non-convergence" in capsys.readouterr().err


def test_verify_single_criterion(tmp_path, capsys):
    rc = main(["verify", "--criteria", "1", "--out-dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "all criteria passed" in out
    _, rows = read_csv(tmp_path / "criterion_1" / "spectrum.csv")
    assert float(rows[0][1]) == pytest.approx(-4.0, abs=1e-6)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["results"]["criterion_1"]["passed"] is True


def test_version_and_missing_command():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
