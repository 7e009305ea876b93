import json

import pytest

from ellipse_complexity.cli import EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_project(tmp_path, capsys):
    cfg = _write(tmp_path, {"ellipse": {"eigenvalues": [1, 0.25]}, "y": [2, 0]})
    assert main(["project", "--config", cfg]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["theta_hat"] == pytest.approx([1, 0]) and out["lambda"] == pytest.approx(1.0)


@pytest.mark.parametrize("command", ["kdim", "fixed-point", "minimax", "regularity", "phi"])
def test_commands_default_configs(command, capsys):
    assert main([command]) == EXIT_OK
    assert capsys.readouterr().out.strip()


def test_csv_output_to_file(tmp_path):
    cfg = _write(tmp_path, {"deltas": [0.5, 0.1]})
    out = tmp_path / "k.csv"
    assert main(["kdim", "--config", cfg, "--format", "csv", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("delta,k") and lines[1].startswith("0.5,2,")


def test_width_and_packing(tmp_path, capsys):
    cfg = _write(tmp_path, {"ellipse": {"family": "ball", "d": 3}, "delta": 0.3,
                            "n_samples": 50, "n": 500})
    assert main(["width", "--config", cfg, "--seed", "4"]) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["k"] == 3
    assert main(["packing", "--config", cfg]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["k"] == 3


def test_risk_curve_csv(tmp_path, capsys):
    cfg = _write(tmp_path, {"ellipse": {"family": "ball", "d": 5},
                            "sigma_grid": [0.01, 0.02, 0.04, 0.08], "replicates": 10})
    assert main(["risk-curve", "--config", cfg, "--format", "csv"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("sigma,sigma_sq,mse_mean,mse_stderr,replicates")


def test_kernel_spectrum(tmp_path, capsys):
    cfg = _write(tmp_path, {"kernel": {"kind": "sobolev1"},
                            "points": {"grid": {"n": 40, "lo": 0, "hi": 1}}})
    assert main(["kernel-spectrum", "--config", cfg]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["family"] == "polynomial" and out["trace_error"] <= 1e-10


def test_figure3_check(tmp_path, capsys):
    cfg = _write(tmp_path, {"replicates": 20, "sigma_sq_grid": [1e-4, 1e-3, 1e-2, 1e-1]})
    code = main(["figure3", "--config", cfg, "--out", str(tmp_path / "f3"), "--check"])
    report = json.loads(capsys.readouterr().out)
    assert code == (EXIT_OK if report["verdict"]["passed"] else EXIT_ACCEPTANCE)
    assert (tmp_path / "f3" / "figure3_plot.dat").exists()


def test_figure3_check_failure_exit_code(tmp_path, capsys):
    # a single decade at large noise flattens both curves below the target bands
    cfg = _write(tmp_path, {"replicates": 20, "sigma_sq_grid": [0.5, 1.0, 2.0, 4.0]})
    assert main(["figure3", "--config", cfg, "--check"]) == EXIT_ACCEPTANCE


@pytest.mark.parametrize("doc", [
    {"ellipse": {"family": "polynomial", "d": 3}},
    {"ellipse": {"eigenvalues": [0.1, 1.0]}},
    {"ellipse": {"family": "ball", "d": 2}, "theta_star": [0.7, 0.7], "delta": 0.1},
])
def test_config_errors(tmp_path, doc, capsys):
    assert main(["kdim", "--config", _write(tmp_path, doc)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    assert main(["kdim", "--config", str(p)]) == EXIT_CONFIG


def test_numerical_failure(tmp_path, capsys):
    cfg = _write(tmp_path, {"ellipse": {"family": "ball", "d": 100}, "sigma": 1.0,
                            "c_lower": 1.0})
    assert main(["fixed-point", "--config", cfg]) == EXIT_NUMERIC
    assert "numerical failure" in capsys.readouterr().err
