import json

import pytest

from gshe import cli


def _run(args, tmp_path):
    return cli.main(list(args) + ["--out", str(tmp_path), "--quiet"])


def test_parse_pi_multiple():
    assert cli.parse_pi_multiple("350pi") == 350
    assert cli.parse_pi_multiple("100*pi") == 100
    with pytest.raises(Exception):
        cli.parse_pi_multiple("3.5pi")


def test_invalid_flags_exit_2(tmp_path, capsys):
    assert _run(["stokes", "--d", "abc"], tmp_path) == 2
    assert _run(["homoclinic", "--epsilon", "0.2"], tmp_path) == 2
    assert _run(["scan", "--kappa-min", "0.5", "--kappa-max", "0.6"], tmp_path) == 2
    assert _run(["stokes", "--d", "351pi", "--sigma", "20"], tmp_path) == 2


def test_normal_form_verify_exit_3(tmp_path, capsys):
    assert _run(["normal-form", "--verify"], tmp_path) == 3
    assert "NormalizationMismatch" in capsys.readouterr().err
    assert _run(["normal-form", "--verify", "--f4", "derived"], tmp_path) == 0
    man = json.loads((tmp_path / "normal_form.manifest.json").read_text())
    assert man["command"] == "normal-form" and "wall_time_s" in man


def test_stokes_single_sigma_csv(tmp_path):
    assert _run(["stokes", "--sigma", "20", "--d", "100pi"], tmp_path) == 0
    lines = (tmp_path / "theta_hat.csv").read_text().splitlines()
    assert lines[0].startswith("sigma,")
    assert lines[-1] == "# manifest: theta_hat.manifest.json"
    man = json.loads((tmp_path / "theta_hat.manifest.json").read_text())
    assert man["parameters"]["d"] == "100pi"
    assert man["precision"]["digits"] == 16


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nepsilon = -0.05\ndigits = 20\nbranch = 1\n")
    assert _run(["homoclinic", "--config", str(cfg), "--branch", "0"], tmp_path) == 0
    rec = json.loads((tmp_path / "homoclinic_eps-0.05_b0.json").read_text())
    assert float(rec["omega_bar"]) > 0
    man = json.loads((tmp_path / "homoclinic_eps-0.05_b0.manifest.json").read_text())
    assert man["parameters"]["digits"] >= 20


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    assert _run(["homoclinic", "--config", str(cfg), "--epsilon", "-0.05"], tmp_path) == 2


def test_fit_command(tmp_path):
    pts = tmp_path / "pts.csv"
    rows = ["epsilon,omega_bar"] + [f"{-0.001 * i},{10 + 2 * (-0.001 * i) + 3 * (0.001 * i) ** 2}"
                                    for i in range(1, 9)]
    pts.write_text("\n".join(rows) + "\n")
    assert _run(["fit", "--points", str(pts), "--degrees", "2..3"], tmp_path) == 0
    text = (tmp_path / "fit.csv").read_text()
    assert text.startswith("degree,k,coefficient")
    assert _run(["fit", "--points", str(pts), "--degrees", "9..10"], tmp_path) == 2
