import json

import numpy as np
import pytest

from narfield import cli


def run(tmp_path, *args):
    return cli.run([str(a) for a in args])


def test_simulate_is_byte_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"p{k}.csv"
        assert cli.run(["simulate", "--seed", "7", "--N", "6", "--T", "5", "--out", str(out)]) == 0
        outs.append((out.read_bytes(), (tmp_path / f"p{k}_eps.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_simulate_ma_route_matches_recursive(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.run(["simulate", "--N", "6", "--T", "5", "--out", str(a)]) == 0
    assert cli.run(["simulate", "--N", "6", "--T", "5", "--method", "ma", "--out", str(b)]) == 0
    ya = np.loadtxt(a, delimiter=",", skiprows=1)[:, 2]
    yb = np.loadtxt(b, delimiter=",", skiprows=1)[:, 2]
    assert np.max(np.abs(ya - yb)) < 1e-10


def test_estimate_fixture_matches_golden(tmp_path, data_dir):
    out = tmp_path / "r.json"
    code = cli.run(["estimate", "--panel", str(data_dir / "fixture_panel.csv"),
                    "--network", str(data_dir / "fixture_network.txt"), "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    golden = np.loadtxt(data_dir / "fixture_golden_theta.txt")
    np.testing.assert_allclose(rep["metrics"]["theta_hat"], golden, rtol=1e-10)
    assert rep["command"] == "estimate" and rep["verdict"] == "PASS"
    assert rep["config"]["theta0"] is None and rep["config"]["eps"] is None
    assert set(rep["metrics"]) >= {"sigma2_hat", "sigma_hat_matrix", "lambda_min", "condition"}


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# settings\nbeta1 = 0.25\nN = 4  # nodes\nT = 3\nseed = 9\n")
    out = tmp_path / "p.csv"
    assert cli.run(["simulate", "--config", str(cfg), "--T", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 4 * 3
    resolved = cli.resolve("simulate", cli.read_config(cfg), {"T": "2"})
    assert resolved["beta1"] == 0.25 and resolved["T"] == 2 and resolved["beta0"] == 0.3


def test_clt_failing_thresholds_exit_3(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("sizes = 6x6,8x8\nreplications = 50\nvariance_ratio_floor = 1e9\n")
    out = tmp_path / "clt.json"
    assert cli.run(["clt", "--config", str(cfg), "--out", str(out)]) == 3
    rep = json.loads(out.read_text())
    assert rep["verdict"] == "FAIL"
    assert rep["config"]["variance_ratio_floor"] == 1e9
    assert rep["provenance"]["master_seed"] == 2024


def test_experiment_reports_are_byte_identical(tmp_path):
    blobs = []
    for workers in ("1", "2", "1"):
        # same paths each time because the resolved config (including paths) is echoed
        out = tmp_path / "q.json"
        raw = tmp_path / "raw.csv"
        assert cli.run(["qmle-normality", "--sizes", "6x6,8x8", "--replications", "60", "--workers", workers,
                        "--out", str(out), "--raw-out", str(raw)]) in (0, 3)
        blobs.append((out.read_bytes(), raw.read_bytes()))
    assert blobs[0] == blobs[1] == blobs[2]


@pytest.mark.parametrize("argv", [["bogus"], ["simulate", "--nope", "1"], [], ["simulate", "--N", "x"]])
def test_usage_errors_exit_1(argv, capsys):
    assert cli.run(argv) == 1
    assert capsys.readouterr().err


def test_validation_messages(tmp_path, capsys):
    assert cli.run(["simulate", "--beta1", "0.6", "--beta2", "0.5", "--out", str(tmp_path / "p.csv")]) == 1
    assert "stationarity" in capsys.readouterr().err
    assert cli.run(["bounds", "--p", "2", "--l", "1", "--out", str(tmp_path / "b.csv")]) == 1
    assert "p > l + 1" in capsys.readouterr().err
    assert cli.run(["bounds", "--form", "power", "--p", "4", "--l", "1", "--mu", "3",
                    "--out", str(tmp_path / "b.csv")]) == 1
    assert "mu >" in capsys.readouterr().err
    assert not (tmp_path / "p.csv").exists()


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour = blue\n")
    assert cli.run(["simulate", "--config", str(cfg)]) == 1


def test_unwritable_report_exit_2(tmp_path, data_dir):
    code = cli.run(["estimate", "--panel", str(data_dir / "fixture_panel.csv"),
                    "--network", str(data_dir / "fixture_network.txt"),
                    "--out", str(tmp_path / "nowhere" / "r.json")])
    assert code == 2


def test_bounds_and_check_network(tmp_path):
    out = tmp_path / "b.csv"
    rep = tmp_path / "b.json"
    assert cli.run(["bounds", "--out", str(out), "--report", str(rep), "--r-grid", "4,8,16"]) == 0
    assert out.read_text().splitlines()[0] == "s,value,stderr"
    assert json.loads(rep.read_text())["metrics"]["nonincreasing"] is True
    assert cli.run(["bounds", "--form", "exp", "--p", "4", "--l", "1", "--mu", "3", "--out", str(out)]) == 0
    chk = tmp_path / "n.json"
    assert cli.run(["check-network", "--N", "20", "--k-max", "5", "--out", str(chk)]) == 0
    assert json.loads(chk.read_text())["verdict"] == "PASS"
    assert cli.run(["check-network", "--N", "20", "--k-max", "5", "--c1-max", "1e-6", "--out", str(chk)]) == 3


def test_delta_and_covdecay(tmp_path):
    d = tmp_path / "d.csv"
    assert cli.run(["delta", "--N", "10", "--T", "10", "--replications", "5", "--out", str(d),
                    "--report", str(tmp_path / "d.json")]) == 0
    assert len(d.read_text().splitlines()) == 5
    c = tmp_path / "c.csv"
    assert cli.run(["covdecay", "--N", "10", "--T", "5", "--replications", "500", "--lag-grid", "1,2",
                    "--out", str(c), "--report", str(tmp_path / "c.json")]) == 0
    rep = json.loads((tmp_path / "c.json").read_text())
    assert len(rep["metrics"]["cov"]) == 2


def test_lln_command(tmp_path):
    out = tmp_path / "l.json"
    code = cli.run(["lln", "--sizes", "10x10,20x20,40x40", "--replications", "100", "--out", str(out)])
    rep = json.loads(out.read_text())
    assert code == (0 if rep["verdict"] == "PASS" else 3)
    assert len(rep["metrics"]["sizes"]) == 3
