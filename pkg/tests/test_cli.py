import json

import pytest

from forbal.cli import main


def run_cli(*argv):
    return main(list(argv))


def test_ik_command(capsys):
    assert run_cli("ik", "--config", "forbal2", "--target", "0.3,0.25") == 0
    body = json.loads(capsys.readouterr().out)
    assert body["q11"] + body["q21"] > 0


def test_ik_unreachable_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("ik", "--config", "forbal2", "--target", "2.0,2.0")
    assert exc.value.code == 3
    assert "unreachable" in capsys.readouterr().err


def test_design_balance_command(tmp_path, capsys):
    out = tmp_path / "solution.json"
    assert run_cli("design-balance", "--config", "forbal2", "--rings",
                   "--out", str(out)) == 0
    body = json.loads(out.read_text())
    assert body["residuals_after"]["max_abs"] < 1e-12
    assert body["ring_stacks"] is not None


def test_design_balance_with_config_file(tmp_path, capsys):
    from forbal.config import builtin_config_doc

    doc = builtin_config_doc("forbal2")
    cfg = tmp_path / "custom.json"
    cfg.write_text(json.dumps(doc))
    assert run_cli("design-balance", "--config", str(cfg)) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["counter_masses"]["21"] > 0.1


def test_missing_config_file_exit(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("ik", "--config", "/nope/missing.json", "--target", "0.3,0.2")
    assert exc.value.code == 1


def test_simulate_command(tmp_path, capsys):
    out = tmp_path / "run.csv"
    assert run_cli("simulate", "--config", "forbal2", "--traj", "F2-T1",
                   "--dt", "0.05", "--unbalanced", "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("t,q11,q21")
    assert len(lines) == 82


def test_traj_export_command(tmp_path):
    out = tmp_path / "wps.csv"
    assert run_cli("traj", "export", "F2-T4", "--out", str(out)) == 0
    assert out.read_text().splitlines()[0] == "t,x,z"


def test_workspace_command(tmp_path, capsys):
    svg = tmp_path / "ws.svg"
    assert run_cli("workspace", "--config", "forbal2", "--out", str(svg)) == 0
    assert svg.read_text().startswith("<svg")
    err = capsys.readouterr().err
    assert "area:" in err
    csv_out = tmp_path / "ws.csv"
    assert run_cli("workspace", "--config", "forbal2", "--out", str(csv_out)) == 0
    assert csv_out.read_text().splitlines()[0] == "x,z"


def test_report_command_writes_artifacts(tmp_path):
    out_dir = tmp_path / "report"
    assert run_cli("report", "--config", "forbal2", "--traj", "F2-T1",
                   "--dt", "0.05", "--out-dir", str(out_dir)) == 0
    names = {p.name for p in out_dir.iterdir()}
    assert names == {"balanced.csv", "unbalanced.csv", "metrics.json", "plot.svg"}
    metrics = json.loads((out_dir / "metrics.json").read_text())
    assert metrics["trajectory"] == "F2-T1"
    assert metrics["n_runs"] == 1


def test_report_repeated_runs_byte_identical(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert run_cli("report", "--config", "forbal2", "--traj", "F2-T1",
                       "--dt", "0.05", "--out-dir", str(d)) == 0
    for name in ("balanced.csv", "unbalanced.csv", "metrics.json", "plot.svg"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
