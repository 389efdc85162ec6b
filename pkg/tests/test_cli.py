import numpy as np
import pytest

from quenchlab.cli import main
from quenchlab.covariance import thermal_covariance
from quenchlab.io import save_covariance
from quenchlab.model import coupling_matrix, nearest_neighbour

CDW = """experiment = "cdw"
[model]
L = 40
J = [0.0, 0.0, 1.0]
[time]
snapshots = [0.5, 1.5]
"""


@pytest.fixture
def cdw_config(tmp_path):
    p = tmp_path / "cdw.toml"
    p.write_text(CDW)
    return p


def test_simulate_uses_output_env(tmp_path, cdw_config, monkeypatch, capsys):
    monkeypatch.setenv("QUENCHLAB_OUTPUT", str(tmp_path / "runs"))
    assert main(["simulate", str(cdw_config)]) == 0
    assert (tmp_path / "runs" / "cdw-seed0" / "manifest.json").exists()
    assert "exact_steady_state = true" in capsys.readouterr().out


def test_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text('experiment = "cdw"\n[model]\nL = 3\nJ = [0, 1, 1]\n')
    assert main(["simulate", str(p)]) == 2
    assert main(["simulate", str(tmp_path / "missing.toml")]) == 2


def test_post_condition_exit_code(tmp_path, monkeypatch):
    monkeypatch.setenv("QUENCHLAB_OUTPUT", str(tmp_path))
    # snapshots listed backwards in time: the distance to equilibrium grows,
    # so the relaxation post-condition fails
    q = tmp_path / "nn.toml"
    q.write_text(CDW.replace("J = [0.0, 0.0, 1.0]", "J = [0.0, 1.0]").replace("[0.5, 1.5]", "[5.0, 0.5]"))
    assert main(["simulate", str(q)]) == 3


def test_certify_bound(tmp_path, cdw_config, capsys):
    cfg = tmp_path / "nn.toml"
    cfg.write_text('[model]\nL = 1000\nJ = [0.0, 1.0]\n')
    assert main(["certify-bound", str(cfg), "--csv", str(tmp_path / "c.csv")]) == 0
    out = capsys.readouterr().out
    assert "C_sharp = 1152.0" in out and "tR = 125.0" in out
    rows = np.loadtxt(tmp_path / "c.csv", delimiter=",", skiprows=1)
    assert np.all(rows[:, 2] <= rows[:, 1])


def test_classify_resilience(cdw_config, capsys):
    assert main(["classify-resilience", str(cdw_config)]) == 0
    assert 'verdict = "RESILIENT"' in capsys.readouterr().out


def test_fit_thermal_and_gge(tmp_path, capsys):
    g = thermal_covariance(coupling_matrix(nearest_neighbour(32)), 1.2, 0.1)
    save_covariance(tmp_path / "g.csv", g)
    assert main(["fit-thermal", str(tmp_path / "g.csv"), "0,1"]) == 0
    out = capsys.readouterr().out
    beta = float([l for l in out.splitlines() if l.startswith("beta")][0].split("=")[1])
    assert beta == pytest.approx(1.2, rel=1e-6)
    assert main(["fit-gge", str(tmp_path / "g.csv"), "--z-xi", "2"]) == 0
    assert "max_residual" in capsys.readouterr().out
    assert main(["fit-thermal", str(tmp_path / "g.csv"), "not-a-model"]) == 2
    assert main(["fit-thermal", str(tmp_path / "nothing.csv"), "0,1"]) == 2


def test_fit_gge_infeasible(tmp_path):
    save_covariance(tmp_path / "full.csv", np.eye(8, dtype=complex))
    assert main(["fit-gge", str(tmp_path / "full.csv"), "--z-xi", "1"]) == 3


def test_oracle_check(capsys):
    assert main(["oracle-check"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_plot(tmp_path, cdw_config, capsys):
    assert main(["simulate", str(cdw_config), "--out", str(tmp_path / "run")]) == 0
    capsys.readouterr()
    assert main(["plot", str(tmp_path / "run")]) == 0
    assert "plot 'cdw.csv'" in capsys.readouterr().out
    assert (tmp_path / "run" / "plot.gp").exists()
    assert main(["plot", str(tmp_path / "nowhere")]) == 2
