"""Experiment driver: run trajectories from a config file, compare the
two free-energy routes, and regenerate stick diagrams.

Everything a run writes is reproducible from its manifest: the config
echo (seed included) pins the Hamiltonian bit-exactly and the grid
parameters pin the sampling.  CSV bodies contain no timestamps, so a
repeated run with the same seed is byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, units
from .analysis import (
    detect_negative_production,
    entropy_production_rate,
    late_window_slice,
    shell_decompose,
    stick_diagram,
)
from .cache import cache_key
from .config import ModelConfig
from .dynamics import PureState, initial_state, propagate, propagate_to_times, time_grid
from .model import assemble_hamiltonian, build_system_levels, temperature_of
from .observables import observable_record
from .rng import SeededRng

SCHEMA_VERSION = 1
DEFAULT_T_MAX_PS = 30.0
DEFAULT_N_POINTS = 600
LATE_FRACTION = 0.2


@dataclasses.dataclass
class RunManifest:
    """Everything needed to reproduce a run bit-exactly, plus bookkeeping."""

    config: dict
    seed: int
    code_version: str
    schema_version: int
    states: list[int]
    t_max_reduced: float
    n_points: int
    cache_key: str
    constants: dict
    temperature: dict
    outputs: list[str]
    timing_seconds: dict

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _fmt(x: float) -> str:
    return repr(float(x))


def _traj_header(config: ModelConfig, n_shells: int) -> list[str]:
    cols = ["time_reduced", "time_ps", "S_vN", "S_univ", "U_S", "U_S_cm",
            "dF", "dF_cm", "minus_dF_over_kT"]
    cols += [f"S_partial_{s}" for s in range(n_shells)]
    cols += [f"rdm_diag_{k}" for k in range(config.n_system_levels)]
    cols += ["T_fit_K"]
    return cols


def run_experiment(config: ModelConfig, states: list[int], out_dir,
                   *, t_max_ps: float = DEFAULT_T_MAX_PS,
                   n_points: int = DEFAULT_N_POINTS,
                   use_cache: bool = True) -> RunManifest:
    """Propagate each requested initial state and write all artifacts.

    Per state: a trajectory CSV of observable records, a final-time
    stick diagram CSV, and an entry in the shell summary; plus one
    anomaly report and one manifest for the run.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timing: dict[str, float] = {}

    t0 = time.time()
    ham = assemble_hamiltonian(config, use_cache=use_cache)
    timing["build_and_solve"] = time.time() - t0

    basis = ham.basis
    ladder = build_system_levels(config).ladder
    temp = temperature_of(config)
    unit = config.energy_unit_wavenumbers
    t_max = units.ps_to_reduced_time(t_max_ps, unit)
    times = time_grid(t_max, n_points)
    n_shells = basis.n_system_levels - 1 + basis.degeneracies.size
    late = late_window_slice(n_points, LATE_FRACTION)

    outputs: list[str] = []
    summary_rows = []
    anomaly_report = {"seed": config.rng_seed, "threshold": 0.0, "states": []}
    rng = SeededRng(config.rng_seed)

    t0 = time.time()
    for n in states:
        psi0 = initial_state(basis, n, config.total_energy,
                             phase_rng=rng if config.random_initial_phases else None)
        amplitudes = propagate_to_times(psi0, ham, times)
        records = []
        for k, t in enumerate(times):
            state = PureState(amplitudes[k], float(t))
            state.check_normalized()
            rec = observable_record(
                state, basis, ladder, temp.kbt_reduced, unit,
                reference_record=records[0] if records else None,
            )
            rec.validate(config.n_system_levels, config.n_universe_states)
            records.append(rec)

        traj_path = out / f"traj_n{n}.csv"
        _write_trajectory(traj_path, config, n, records, n_shells)
        outputs.append(traj_path.name)

        final_state = PureState(amplitudes[-1], float(times[-1]))
        sticks_path = out / f"sticks_n{n}.csv"
        _write_sticks(sticks_path, config, n, final_state, basis)
        outputs.append(sticks_path.name)

        s_univ_series = np.array([r.s_univ for r in records])
        rate = entropy_production_rate(times, s_univ_series)
        dips = detect_negative_production(times, rate)
        anomaly_report["states"].append({
            "n": n,
            "dips": [dataclasses.asdict(d) for d in dips],
            "min_rate": float(rate.min()),
            "min_rate_time": float(times[int(rate.argmin())]),
        })

        partial5 = np.array([r.shell_partial_entropies[config.total_energy] for r in records])
        decomp = shell_decompose(final_state, basis)
        summary_rows.append({
            "n": n,
            "S_univ": float(s_univ_series[late].mean()),
            "S_partial": float(partial5[late].mean()),
            "S_univ_final": float(s_univ_series[-1]),
            "S_partial_final": decomp.partial_entropy(config.total_energy),
            "effective_states": float(np.exp(s_univ_series[late].mean())),
            "shell_population_final": decomp.population(config.total_energy),
        })
    timing["trajectories"] = time.time() - t0

    summary = {
        "schema_version": SCHEMA_VERSION,
        "seed": config.rng_seed,
        "microcanonical_shell": config.total_energy,
        "shell_state_count": config.shell_size(config.total_energy),
        "late_window_fraction": LATE_FRACTION,
        "temperature_kelvin": temp.kelvin,
        "states": summary_rows,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    outputs.append("summary.json")

    (out / "anomalies.json").write_text(json.dumps(anomaly_report, indent=2, sort_keys=True))
    outputs.append("anomalies.json")

    manifest = RunManifest(
        config=config.to_dict(),
        seed=config.rng_seed,
        code_version=__version__,
        schema_version=SCHEMA_VERSION,
        states=list(states),
        t_max_reduced=float(t_max),
        n_points=n_points,
        cache_key=cache_key(config),
        constants={
            "kB_wavenumber_per_K": units.KB_WAVENUMBER_PER_KELVIN,
            "reduced_time_unit_ps": units.reduced_time_unit_ps(unit),
            "energy_unit_wavenumbers": unit,
        },
        temperature=dataclasses.asdict(temp),
        outputs=outputs,
        timing_seconds=timing,
    )
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest


def _write_trajectory(path, config, n, records, n_shells):
    unit = config.energy_unit_wavenumbers
    with open(path, "w", newline="") as fh:
        fh.write(f"# quniverse trajectory schema={SCHEMA_VERSION} state_n={n} "
                 f"seed={config.rng_seed} config_sha256={config.content_hash()}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_traj_header(config, n_shells))
        for r in records:
            row = [
                _fmt(r.time), _fmt(r.time_ps), _fmt(r.s_vn), _fmt(r.s_univ),
                _fmt(r.u_system), _fmt(r.u_system * unit),
                _fmt(r.delta_f), _fmt(r.delta_f * unit),
                _fmt(r.minus_delta_f_over_kbt),
            ]
            row += [_fmt(v) for v in r.shell_partial_entropies]
            row += [_fmt(v) for v in r.rdm_diagonal]
            row.append("" if r.t_fit_kelvin is None else _fmt(r.t_fit_kelvin))
            writer.writerow(row)


def _write_sticks(path, config, n, state, basis):
    diagram = stick_diagram(state, basis)
    with open(path, "w", newline="") as fh:
        fh.write(f"# quniverse sticks schema={SCHEMA_VERSION} state_n={n} "
                 f"time_reduced={_fmt(state.time)} seed={config.rng_seed} "
                 f"config_sha256={config.content_hash()}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["energy", "p", "n", "m", "l", "shell"])
        for k in range(diagram.size):
            writer.writerow([
                _fmt(diagram.energy[k]), _fmt(diagram.p[k]),
                int(diagram.n[k]), int(diagram.m[k]), int(diagram.l[k]),
                int(diagram.shell[k]),
            ])


def read_trajectory(path) -> dict[str, np.ndarray]:
    """Trajectory CSV back into column arrays (comment header skipped)."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) if x else np.nan for x in row] for row in reader]
    data = np.asarray(rows)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"malformed trajectory file {path}")
    return {name: data[:, k] for k, name in enumerate(header)}


def compare_free_energy(traj_path, late_fraction: float = LATE_FRACTION) -> dict:
    """Align dS_univ(t) with -dF(t)/(k_B T) and quantify their agreement.

    The short-time window where the universe entropy runs ahead of the
    free-energy surrogate is reported as a flagged transient, not a
    failure.
    """
    cols = read_trajectory(traj_path)
    for needed in ("time_reduced", "S_univ", "dF", "minus_dF_over_kT"):
        if needed not in cols:
            raise ValueError(f"trajectory {traj_path} lacks required column {needed}")
    t = cols["time_reduced"]
    ds_univ = cols["S_univ"] - cols["S_univ"][0]
    minus_df_kbt = cols["minus_dF_over_kT"]
    diff = ds_univ - minus_df_kbt
    late = late_window_slice(t.size, late_fraction)
    late_abs = float(np.abs(diff[late]).mean())
    late_mean_ds = float(ds_univ[late].mean())
    scale = max(abs(late_mean_ds), 1e-12)
    transient_tol = max(2.0 * late_abs, 0.05)
    beyond = np.abs(diff) > transient_tol
    if beyond.any():
        transient_end = float(t[min(int(np.max(np.nonzero(beyond)[0])) + 1, t.size - 1)])
    else:
        transient_end = 0.0
    return {
        "trajectory": str(traj_path),
        "late_window_fraction": late_fraction,
        "late_mean_dS_univ": late_mean_ds,
        "late_mean_minus_dF_over_kT": float(minus_df_kbt[late].mean()),
        "late_mean_abs_difference": late_abs,
        "late_relative_discrepancy": late_abs / scale,
        "max_abs_difference": float(np.abs(diff).max()),
        "transient_flagged": bool(beyond.any()),
        "transient_end_reduced": transient_end,
        "series": {
            "time_reduced": t.tolist(),
            "dS_univ": ds_univ.tolist(),
            "minus_dF_over_kT": minus_df_kbt.tolist(),
            "difference": diff.tolist(),
        },
    }


def _sticks_from_manifest(traj_path, t_reduced: float | None, t_ps: float | None):
    """Rebuild the universe from the run manifest and re-emit sticks at any time."""
    traj_path = Path(traj_path)
    manifest_path = traj_path.parent / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(
            f"{manifest_path} not found; stick diagrams are recomputed from the manifest"
        )
    manifest = json.loads(manifest_path.read_text())
    config = ModelConfig.from_dict(manifest["config"])
    name = traj_path.stem
    if not name.startswith("traj_n"):
        raise ValueError(f"cannot infer initial state from file name {traj_path.name}")
    n = int(name.removeprefix("traj_n"))
    if t_reduced is None:
        if t_ps is None:
            raise ValueError("need a time (--time or --time-ps)")
        t_reduced = units.ps_to_reduced_time(t_ps, config.energy_unit_wavenumbers)
    ham = assemble_hamiltonian(config, use_cache=True)
    rng = SeededRng(config.rng_seed)
    psi0 = initial_state(ham.basis, n, config.total_energy,
                         phase_rng=rng if config.random_initial_phases else None)
    state = propagate(psi0, ham, t_reduced)
    return config, n, state, ham.basis


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quniverse",
        description="system-environment universe simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run trajectories for one config")
    p_run.add_argument("--config", required=True, help="key = value config file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--states", default=None,
                       help="comma-separated initial system levels (default: all)")
    p_run.add_argument("--seed", type=int, default=None, help="override rng_seed")
    p_run.add_argument("--paper-compat", action="store_true",
                       help="pin the reference temperature 230.41 K")
    p_run.add_argument("--t-max-ps", type=float, default=DEFAULT_T_MAX_PS)
    p_run.add_argument("--n-points", type=int, default=DEFAULT_N_POINTS)
    p_run.add_argument("--no-cache", action="store_true",
                       help="skip the eigendecomposition cache")

    p_cmp = sub.add_parser("compare", help="free energy vs universe entropy")
    p_cmp.add_argument("--traj", required=True, help="trajectory CSV")
    p_cmp.add_argument("--out", default=None, help="write JSON report here (default stdout)")

    p_sticks = sub.add_parser("sticks", help="stick diagram at an arbitrary time")
    p_sticks.add_argument("--traj", required=True,
                          help="trajectory CSV (its manifest.json is used to rebuild)")
    p_sticks.add_argument("--time", type=float, default=None, help="time in reduced units")
    p_sticks.add_argument("--time-ps", type=float, default=None, help="time in picoseconds")
    p_sticks.add_argument("--out", default=None, help="write CSV here (default stdout)")

    args = parser.parse_args(argv)

    if args.command == "run":
        config = ModelConfig.from_file(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["rng_seed"] = args.seed
        if args.paper_compat:
            overrides["paper_compat"] = True
        if overrides:
            config = dataclasses.replace(config, **overrides)
        states = (list(range(config.n_system_levels)) if args.states is None
                  else [int(s) for s in args.states.split(",")])
        manifest = run_experiment(
            config, states, args.out,
            t_max_ps=args.t_max_ps, n_points=args.n_points,
            use_cache=not args.no_cache,
        )
        print(f"wrote {len(manifest.outputs)} files to {args.out}")
        return 0

    if args.command == "compare":
        report = compare_free_energy(args.traj)
        text = json.dumps(report, indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(text)
        else:
            print(text)
        return 0

    if args.command == "sticks":
        config, n, state, basis = _sticks_from_manifest(args.traj, args.time, args.time_ps)
        if args.out:
            _write_sticks(args.out, config, n, state, basis)
        else:
            _write_sticks("/dev/stdout", config, n, state, basis)
        return 0

    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
