import json

import pytest

from tfac.main import main
from tfac.services.periodic_grid import read_snapshot_bin


def last_error(capsys) -> dict:
    line = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(line)["detail"]


def read_rows(path):
    return path.read_text().strip().splitlines()


def test_verify_kernels_command(tmp_path):
    code = main(
        [
            "verify-kernels",
            "--alpha", "0.5",
            "--n-steps", "8",
            "--meshes", "2",
            "--out", str(tmp_path),
        ]
    )

    assert code == 0
    checks = read_rows(tmp_path / "kernel_checks.csv")
    assert checks[0].startswith("alpha,mesh,n_steps,orthogonality")
    assert len(checks) == 3
    assert read_rows(tmp_path / "kernels_alpha0.5.csv")[0] == "n,k,a,q,theta,p,residual"


def test_converge_command(tmp_path):
    code = main(
        [
            "converge",
            "--alpha", "0.6",
            "--gamma", "2",
            "--n-steps", "10", "40",
            "--m1", "8",
            "--out", str(tmp_path),
        ]
    )

    assert code == 0
    rows = read_rows(tmp_path / "errors.csv")
    assert rows[0] == "alpha,sigma,gamma,N,tau_max,error,order"
    assert len(rows) == 3
    assert rows[1].endswith(",")


def test_maxbound_command(tmp_path):
    code = main(
        [
            "maxbound",
            "--T", "0.5",
            "--tau", "0.1",
            "--m1", "8",
            "--mode", "direct",
            "--out", str(tmp_path),
        ]
    )

    assert code == 0
    assert read_rows(tmp_path / "maxbound_alpha0.7_tau0.1.csv")[0] == "t,max_norm"
    assert len(read_rows(tmp_path / "maxbound_summary.csv")) == 2


def test_coarsen_command_writes_snapshots(tmp_path):
    code = main(
        [
            "coarsen",
            "--alpha", "0.7",
            "--kappa", "10",
            "--T", "0.3",
            "--m1", "8",
            "--tau-min", "0.01",
            "--mode", "direct",
            "--snapshot-times", "0.1", "0.3",
            "--out", str(tmp_path),
        ]
    )

    assert code == 0
    run_dir = tmp_path / "alpha0.7_kappa10"
    assert read_rows(run_dir / "records.csv")[0] == (
        "n,t,tau,E,E_alpha,max_norm,newton_iters,restriction_ok"
    )
    assert read_rows(run_dir / "mesh.csv")[0] == "index,t"
    snapshots = sorted(run_dir.glob("snapshot_t*.bin"))
    assert len(snapshots) == 2
    assert read_snapshot_bin(snapshots[0]).spec.m1 == 8
    assert (tmp_path / "coarsen_summary.csv").exists()


def test_config_file_and_flags(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("alpha = 0.3\nn-steps = 6\nmeshes = 1\n", encoding="utf-8")

    code = main(
        ["verify-kernels", "--config", str(config), "--alpha", "0.9", "--out", str(tmp_path)]
    )

    assert code == 0
    assert (tmp_path / "kernels_alpha0.9.csv").exists()
    assert not (tmp_path / "kernels_alpha0.3.csv").exists()


def test_invalid_parameter_exit_code(tmp_path, capsys):
    code = main(["converge", "--alpha", "1.5", "--out", str(tmp_path)])

    assert code == 2
    assert last_error(capsys)["error_type"] == "InvalidParameterError"


def test_unknown_config_key(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("colour = red\n", encoding="utf-8")

    code = main(["maxbound", "--config", str(config), "--out", str(tmp_path)])

    assert code == 2
    detail = last_error(capsys)
    assert detail["error_type"] == "ConfigurationError"
    assert "colour" in detail["error"]


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["bogus"])
