import json
import subprocess
import sys

from phbox.cli import CSV_HEADER, cmd_selftest, cmd_simulate, cmd_validate, main


def write_config(tmp_path, name="cfg.json", **overrides):
    cfg = {
        "system": "wave",
        "parameters": {"n": 2},
        "grid": {"counts": [7, 7]},
        "splitting": {"gamma1_faces": [1]},
        "boundary_condition": {"kind": "impedance-M", "scale": 1.5},
        "time": {"dt": 0.02, "t_final": 0.4},
        "initial_state": {"kind": "random", "scale": 1.0},
        "seed": 11,
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_validate_impedance_passes(tmp_path, capsys):
    path = write_config(tmp_path)
    assert cmd_validate(path) == 0
    out = capsys.readouterr().out
    assert "hamiltonian-bounds: PASS" in out
    assert "p0-skew: PASS" in out
    assert "block-structure: PASS" in out


def test_validate_mindlin_and_appendix(tmp_path):
    path = write_config(tmp_path, system="mindlin", parameters={"rho": 1.0},
                        grid={"counts": [7, 7]})
    assert cmd_validate(path) == 0
    path = write_config(tmp_path, system="appendix1d", parameters={},
                        grid={"counts": [17]},
                        splitting={"gamma1_faces": [0, 1]})
    assert cmd_validate(path) == 0


def test_validate_antidissipative_fails_naming_condition(tmp_path, capsys):
    b = 7
    path = write_config(tmp_path, boundary_condition={
        "kind": "W",
        "W1": [[1.0 if i == j else 0.0 for j in range(b)] for i in range(b)],
        "W2": [[-1.0 if i == j else 0.0 for j in range(b)] for i in range(b)],
    })
    assert cmd_validate(path) == 1
    out = capsys.readouterr().out
    assert "injective False" in out


def test_validate_malformed_grid_schema_error(tmp_path):
    path = write_config(tmp_path, grid={"counts": [2, 7]})
    assert cmd_validate(path) == 2


def test_validate_unknown_key_schema_error(tmp_path):
    path = write_config(tmp_path, extra_field=1)
    assert cmd_validate(path) == 2


def test_validate_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert cmd_validate(str(path)) == 2


def test_simulate_writes_stable_csv(tmp_path, capsys):
    path = write_config(tmp_path)
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert cmd_simulate(path, out_path=str(out1)) == 0
    assert cmd_simulate(path, out_path=str(out2)) == 0
    b1 = out1.read_bytes()
    assert b1 == out2.read_bytes()
    lines = b1.decode().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 20 + 1       # header + initial row + 20 steps
    assert lines[1].startswith("0,0,")


def test_simulate_forced_run_reports_residual(tmp_path, capsys):
    path = write_config(
        tmp_path,
        boundary_condition={"kind": "scattering-R", "scale": 1.0},
        input={"kind": "sine", "face": 1, "amplitude": 0.5,
               "frequency": 2.0, "t_on": 0.0, "t_off": 0.3},
        initial_state={"kind": "zero"},
    )
    out = tmp_path / "forced.csv"
    assert cmd_simulate(path, out_path=str(out)) == 0
    text = capsys.readouterr().out
    assert "max balance residual" in text
    rows = out.read_text().strip().split("\n")[1:]
    assert any(float(r.split(",")[3]) > 0 for r in rows)   # u_norm_sq column


def test_simulate_requires_time_section(tmp_path):
    cfg = {
        "system": "wave",
        "grid": {"counts": [5, 5]},
    }
    path = tmp_path / "no_time.json"
    path.write_text(json.dumps(cfg))
    assert cmd_simulate(str(path)) == 2


def test_simulate_conservation_summary(tmp_path, capsys):
    path = write_config(tmp_path, splitting={"gamma1_faces": []},
                        boundary_condition={"kind": "clamp"},
                        time={"dt": 0.02, "t_final": 1.0})
    assert cmd_simulate(path) == 0
    out = capsys.readouterr().out
    assert "energy monotone non-increasing: True" in out


def test_simulate_maxwell_conductivity_via_config(tmp_path, capsys):
    path = write_config(
        tmp_path, system="maxwell", parameters={"g": 0.3},
        grid={"counts": [4, 4, 4]},
        splitting={"gamma1_faces": []},
        boundary_condition={"kind": "clamp"},
        time={"dt": 0.02, "t_final": 0.4},
        initial_state={"kind": "random", "scale": 1.0},
    )
    assert cmd_simulate(path) == 0
    out = capsys.readouterr().out
    assert "energy monotone non-increasing: True" in out


def test_selftest_passes(capsys):
    assert cmd_selftest(seed=0) == 0
    out = capsys.readouterr().out
    assert "selftest: PASS" in out


def test_selftest_corruption_hook_names_check(capsys):
    assert cmd_selftest(seed=0, corrupt="sbp-identity") == 1
    out = capsys.readouterr().out
    assert "selftest: FAIL (sbp-identity)" in out


def test_main_subcommand_dispatch(tmp_path):
    path = write_config(tmp_path)
    assert main(["validate", "--config", path]) == 0
    assert main(["validate", "--config", path, "--threads", "1"]) == 0
    assert main([]) == 2


def test_cli_subprocess_entrypoint(tmp_path):
    path = write_config(tmp_path)
    proc = subprocess.run([sys.executable, "-m", "phbox.cli", "validate",
                           "--config", path], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "validate: PASS" in proc.stdout


def test_custom_system_roundtrip(tmp_path):
    cfg = {
        "system": "custom",
        "grid": {"counts": [9]},
        "custom": {
            "L": [[[1.0]]],
            "P0": [[0.0, 0.0], [0.0, 0.0]],
            "H": [[1.0, 0.0], [0.0, 1.0]],
        },
        "splitting": {"gamma1_faces": [0, 1]},
        "boundary_condition": {"kind": "impedance-M", "scale": 2.0},
        "time": {"dt": 0.01, "t_final": 0.2},
        "initial_state": {"kind": "random"},
        "seed": 3,
    }
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(cfg))
    assert cmd_validate(str(path)) == 0
    assert cmd_simulate(str(path), out_path=str(tmp_path / "c.csv")) == 0
