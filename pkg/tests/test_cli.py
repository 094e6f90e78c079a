import json
import math

import numpy as np
import pytest

from quniverse import ModelConfig
from quniverse.cli import compare_free_energy, main, read_trajectory, run_experiment

from conftest import toy6_config


@pytest.fixture()
def toy_cfg_file(tmp_path):
    cfg = toy6_config(alpha=0.2, rng_seed=31)
    path = tmp_path / "toy.cfg"
    cfg.to_file(path)
    return cfg, path


def _run(cfg, out, **kwargs):
    kwargs.setdefault("t_max_ps", 2.0)
    kwargs.setdefault("n_points", 50)
    kwargs.setdefault("use_cache", False)
    return run_experiment(cfg, list(range(cfg.n_system_levels)), out, **kwargs)


def test_toy_run_writes_all_artifacts(tmp_path):
    cfg = toy6_config(alpha=0.2, rng_seed=31)
    out = tmp_path / "run"
    manifest = _run(cfg, out)
    for name in manifest.outputs:
        assert (out / name).exists(), name
    assert (out / "manifest.json").exists()
    expected = {"traj_n0.csv", "traj_n1.csv", "sticks_n0.csv", "sticks_n1.csv",
                "summary.json", "anomalies.json"}
    assert expected == set(manifest.outputs)

    summary = json.loads((out / "summary.json").read_text())
    assert summary["shell_state_count"] == cfg.shell_size(cfg.total_energy)
    assert [row["n"] for row in summary["states"]] == [0, 1]

    manifest_echo = json.loads((out / "manifest.json").read_text())
    assert ModelConfig.from_dict(manifest_echo["config"]) == cfg
    assert manifest_echo["seed"] == 31


def test_trajectory_columns_and_invariants(tmp_path):
    cfg = toy6_config(alpha=0.2, rng_seed=31)
    _run(cfg, tmp_path)
    cols = read_trajectory(tmp_path / "traj_n0.csv")
    for name in ("time_reduced", "time_ps", "S_vN", "S_univ", "U_S", "U_S_cm",
                 "dF", "dF_cm", "minus_dF_over_kT", "S_partial_0", "rdm_diag_0",
                 "T_fit_K"):
        assert name in cols, name
    assert cols["time_reduced"][0] == 0.0
    assert cols["dF"][0] == 0.0
    assert abs(cols["S_vN"][0]) <= 1e-12  # product state at t = 0
    assert np.all(cols["S_vN"] <= math.log(cfg.n_system_levels) + 1e-9)
    assert np.all(cols["S_vN"] >= -1e-12)
    rdm_sum = cols["rdm_diag_0"] + cols["rdm_diag_1"]
    np.testing.assert_allclose(rdm_sum, 1.0, rtol=0, atol=1e-10)
    partials = sum(cols[f"S_partial_{s}"] for s in range(3))
    np.testing.assert_allclose(partials, cols["S_univ"], rtol=0, atol=1e-10)
    np.testing.assert_allclose(
        cols["U_S_cm"], cols["U_S"] * cfg.energy_unit_wavenumbers, rtol=1e-12
    )


def test_repeated_run_byte_identical(tmp_path):
    cfg = toy6_config(alpha=0.2, rng_seed=31)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    _run(cfg, out_a)
    _run(cfg, out_b)
    for name in ("traj_n0.csv", "traj_n1.csv", "sticks_n0.csv",
                 "sticks_n1.csv", "summary.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_different_seed_changes_output(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    _run(toy6_config(alpha=0.2, rng_seed=31), out_a)
    _run(toy6_config(alpha=0.2, rng_seed=32), out_b)
    assert (out_a / "traj_n0.csv").read_bytes() != (out_b / "traj_n0.csv").read_bytes()


def test_compare_report(tmp_path):
    cfg = toy6_config(alpha=0.2, rng_seed=31)
    _run(cfg, tmp_path)
    report = compare_free_energy(tmp_path / "traj_n0.csv")
    assert set(report) >= {
        "late_mean_dS_univ", "late_mean_minus_dF_over_kT",
        "late_mean_abs_difference", "late_relative_discrepancy",
        "max_abs_difference", "transient_flagged", "transient_end_reduced",
    }
    assert report["late_mean_abs_difference"] >= 0.0


def test_compare_zero_discrepancy_on_synthetic(tmp_path):
    # dS_univ identical to -dF/(kT) by construction
    path = tmp_path / "synthetic.csv"
    t = np.linspace(0.0, 10.0, 21)
    s = 1.0 - np.exp(-t)
    lines = ["time_reduced,S_univ,dF,minus_dF_over_kT"]
    for ti, si in zip(t.tolist(), s.tolist()):
        lines.append(f"{ti!r},{2.0 + si!r},{-si!r},{si!r}")
    path.write_text("\n".join(lines) + "\n")
    report = compare_free_energy(path)
    assert report["late_mean_abs_difference"] <= 1e-12
    assert report["max_abs_difference"] <= 1e-12
    assert not report["transient_flagged"]
    assert report["transient_end_reduced"] == 0.0


def test_compare_missing_column_rejected(tmp_path):
    path = tmp_path / "broken.csv"
    path.write_text("time_reduced,S_univ\n0.0,1.0\n1.0,1.1\n")
    with pytest.raises(ValueError, match="lacks required column"):
        compare_free_energy(path)


def test_cli_run_and_compare_commands(tmp_path, toy_cfg_file, capsys):
    cfg, cfg_path = toy_cfg_file
    out = tmp_path / "cli_run"
    rc = main(["run", "--config", str(cfg_path), "--out", str(out),
               "--states", "0", "--t-max-ps", "2.0", "--n-points", "40",
               "--no-cache"])
    assert rc == 0
    assert (out / "traj_n0.csv").exists()
    assert not (out / "traj_n1.csv").exists()
    capsys.readouterr()

    rc = main(["compare", "--traj", str(out / "traj_n0.csv")])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert "late_mean_abs_difference" in report


def test_cli_seed_and_compat_overrides(tmp_path, toy_cfg_file):
    _, cfg_path = toy_cfg_file
    out = tmp_path / "cli_run2"
    rc = main(["run", "--config", str(cfg_path), "--out", str(out),
               "--states", "0", "--seed", "77", "--paper-compat",
               "--t-max-ps", "1.0", "--n-points", "20", "--no-cache"])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 77
    assert manifest["config"]["paper_compat"] is True
    assert manifest["temperature"]["kelvin"] == 230.41


def test_cli_sticks_command(tmp_path, toy_cfg_file):
    cfg, cfg_path = toy_cfg_file
    out = tmp_path / "cli_run3"
    main(["run", "--config", str(cfg_path), "--out", str(out),
          "--states", "1", "--t-max-ps", "2.0", "--n-points", "30", "--no-cache"])
    sticks_out = tmp_path / "sticks_t.csv"
    rc = main(["sticks", "--traj", str(out / "traj_n1.csv"),
               "--time", "5.0", "--out", str(sticks_out)])
    assert rc == 0
    text = sticks_out.read_text().splitlines()
    assert text[0].startswith("#")
    assert text[1] == "energy,p,n,m,l,shell"
    p = np.array([float(line.split(",")[1]) for line in text[2:]])
    np.testing.assert_allclose(p.sum(), 1.0, rtol=0, atol=1e-10)

    # recomputation is faithful: t = 0 sticks match the initial state exactly
    sticks0 = tmp_path / "sticks_0.csv"
    main(["sticks", "--traj", str(out / "traj_n1.csv"),
          "--time", "0.0", "--out", str(sticks0)])
    body = sticks0.read_text().splitlines()[2:]
    live = [line for line in body if float(line.split(",")[1]) > 1e-12]
    assert len(live) == 1  # toy6 initial n=1 sits on the single |m=0, l=0> state
    assert abs(float(live[0].split(",")[1]) - 1.0) < 1e-10


def test_config_file_errors_surface(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense_key = 3\n")
    with pytest.raises(ValueError, match="unknown configuration key"):
        main(["run", "--config", str(bad), "--out", str(tmp_path / "x")])
