"""Command line interface: exit codes, artifacts, determinism."""

import os
import subprocess
import sys

import pytest

from aggrsim.cli import main

PDE1D_SMALL = """
m = 32
dt = 1e-4
n_steps = 5
snapshot_stride = 2
initial.kind = cosine
"""

PARTICLES2_SMALL = """
n = 20
dt = 0.001
n_steps = 5
"""

KINETIC_SMALL = """
n_x = 8
n_v = 8
n_steps = 3
"""


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _files(directory):
    return sorted(os.listdir(directory))


def _read_all(directory):
    return {
        name: open(os.path.join(directory, name), "rb").read()
        for name in os.listdir(directory)
    }


# ------------------------------------------------------------ happy paths


def test_pde1d_run_writes_snapshots_and_summary(tmp_path, capsys):
    cfg = _write(tmp_path, PDE1D_SMALL)
    out = str(tmp_path / "out")
    assert main(["pde1d", "--config", cfg, "--out", out]) == 0
    summary = capsys.readouterr().out.strip()
    assert summary.startswith("pde1d: mass=")
    assert "aggregates=" in summary and "steady_time=" in summary
    # snapshots at steps 0, 2, 4 and the final step 5
    assert _files(out) == ["rho_0000.csv", "rho_0001.csv", "rho_0002.csv", "rho_0003.csv"]


def test_particles_run_writes_tables(tmp_path, capsys):
    cfg = _write(tmp_path, PARTICLES2_SMALL + "snapshot_stride = 2\n")
    out = str(tmp_path / "p")
    assert main(["particles2", "--config", cfg, "--out", out]) == 0
    summary = capsys.readouterr().out.strip()
    assert summary.startswith("particles2: n=20 t_final=")
    assert "clusters=" in summary
    assert _files(out) == [
        "particles_000000.csv",
        "particles_000002.csv",
        "particles_000004.csv",
        "particles_000005.csv",
    ]
    header = open(os.path.join(out, "particles_000000.csv")).readline().strip()
    assert header == "id,x,y,vx,vy,theta"


def test_first_order_particles_have_no_velocity_columns(tmp_path, capsys):
    cfg = _write(tmp_path, "n = 10\nn_steps = 2\n")
    out = str(tmp_path / "p1")
    assert main(["particles1", "--config", cfg, "--out", out]) == 0
    capsys.readouterr()
    header = open(os.path.join(out, "particles_000000.csv")).readline().strip()
    assert header == "id,x,y,theta"


def test_kinetic_run_writes_profiles_phase_and_moments(tmp_path, capsys):
    cfg = _write(tmp_path, KINETIC_SMALL)
    out = str(tmp_path / "k")
    assert main(["kinetic1d", "--config", cfg, "--out", out]) == 0
    summary = capsys.readouterr().out.strip()
    assert summary.startswith("kinetic1d: mass=")
    assert "upwind_faces=" in summary and "max_tv_increase=" in summary
    names = _files(out)
    assert "moments.csv" in names
    assert "rho_0000.csv" in names and "f_0000.pgm" in names
    header = open(os.path.join(out, "moments.csv")).readline().strip()
    assert header == "t,mass,momentum,energy"


def test_kinetic_csv_only_skips_phase_images(tmp_path, capsys):
    cfg = _write(tmp_path, KINETIC_SMALL + "formats = csv\n")
    out = str(tmp_path / "k2")
    assert main(["kinetic1d", "--config", cfg, "--out", out]) == 0
    capsys.readouterr()
    assert not any(name.endswith(".pgm") for name in _files(out))


def test_stability_reports_both_normalizations(tmp_path, capsys):
    cfg = _write(tmp_path, "rho0 = 4\nmax_mode = 8\n")
    out = str(tmp_path / "s")
    assert main(["stability", "--config", cfg, "--out", out]) == 0
    summary = capsys.readouterr().out.strip()
    assert summary.startswith("stability: rho0=4.0")
    assert "raw: 0 unstable modes" in summary
    assert "unit: 3 unstable modes" in summary
    assert _files(out) == ["stability_raw.csv", "stability_unit.csv"]


def test_stability_constant_response_is_all_stable(tmp_path, capsys):
    cfg = _write(tmp_path, "g.kind = constant\ng.param = 1.0\n")
    out = str(tmp_path / "s2")
    assert main(["stability", "--config", cfg, "--out", out]) == 0
    summary = capsys.readouterr().out.strip()
    assert summary.count("0 unstable modes") == 2


def test_pde2d_writes_images(tmp_path, capsys):
    cfg = _write(tmp_path, "m = 12\nn_steps = 2\ndt = 1e-4\n")
    out = str(tmp_path / "d2")
    assert main(["pde2d", "--config", cfg, "--out", out]) == 0
    capsys.readouterr()
    names = _files(out)
    assert names and all(n.startswith("rho_") and n.endswith(".pgm") for n in names)


# ------------------------------------------------------------ determinism


def test_reruns_are_byte_identical(tmp_path, capsys):
    cfg = _write(tmp_path, PARTICLES2_SMALL)
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["particles2", "--config", cfg, "--out", out_a]) == 0
    assert main(["particles2", "--config", cfg, "--out", out_b]) == 0
    capsys.readouterr()
    assert _read_all(out_a) == _read_all(out_b)


def test_seed_override_changes_artifacts(tmp_path, capsys):
    cfg = _write(tmp_path, PARTICLES2_SMALL)
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["particles2", "--config", cfg, "--out", out_a]) == 0
    assert main(["particles2", "--config", cfg, "--seed", "9", "--out", out_b]) == 0
    capsys.readouterr()
    a, b = _read_all(out_a), _read_all(out_b)
    assert set(a) == set(b) and a != b


def test_out_defaults_to_config_key(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = _write(tmp_path, PDE1D_SMALL + "out = from_config\n")
    assert main(["pde1d", "--config", cfg]) == 0
    capsys.readouterr()
    assert os.path.isdir(tmp_path / "from_config")


# ------------------------------------------------------------ error paths


def test_config_error_exits_1_without_output_dir(tmp_path, capsys):
    cfg = _write(tmp_path, "bogus = 1\n")
    out = str(tmp_path / "never")
    assert main(["pde1d", "--config", cfg, "--out", out]) == 1
    err = capsys.readouterr().err
    assert "aggrsim: error:" in err and "unknown config key: bogus" in err
    assert not os.path.exists(out)


def test_missing_config_file_exits_1(tmp_path, capsys):
    assert main(["pde1d", "--config", str(tmp_path / "absent.cfg")]) == 1
    assert "cannot read config file" in capsys.readouterr().err


def test_numerical_failure_exits_2_with_no_artifacts(tmp_path, capsys):
    # H dt = 2 >= 1 overshoots the damping update on the first step
    cfg = _write(tmp_path, "n = 10\nn_steps = 2\ndt = 1.0\n")
    out = str(tmp_path / "boom")
    assert main(["particles2", "--config", cfg, "--out", out]) == 2
    err = capsys.readouterr().err
    assert "aggrsim: numerical failure:" in err and "damping overshoot" in err
    assert _files(out) == []  # artifacts only appear after a completed run


def test_format_mismatch_for_2d_fields_exits_1(tmp_path, capsys):
    cfg = _write(tmp_path, "m = 12\nn_steps = 1\nformats = csv\n")
    out = str(tmp_path / "d2")
    assert main(["pde2d", "--config", cfg, "--out", out]) == 1
    assert "no requested format applies" in capsys.readouterr().err


def test_subcommand_conflict_exits_1(tmp_path, capsys):
    cfg = _write(tmp_path, "subcommand = pde1d\n")
    assert main(["pde2d", "--config", cfg]) == 1
    assert "names subcommand" in capsys.readouterr().err


# ------------------------------------------------------- argparse plumbing


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == "aggrsim 0.1.0"


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2  # argparse usage error, not a numerical failure


def test_installed_entry_point_runs(tmp_path):
    cfg = _write(tmp_path, "rho0 = 2\nmax_mode = 3\n")
    result = subprocess.run(
        [sys.executable, "-m", "aggrsim.cli", "stability", "--config", cfg,
         "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout.startswith("stability: rho0=2.0")
