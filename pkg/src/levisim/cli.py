"""Command-line pipeline: trap -> simulate -> psd -> fit/calibrate -> sense.

Subcommands: trap, simulate, psd, calibrate, budget, sense, reproduce,
pipeline.  Exit codes: 2 config error, 3 physics-validity error,
4 numerical failure.  Every output file carries the config fingerprint and
seed; reruns with identical config and seed overwrite outputs with
byte-identical content.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config, parse_config
from .constants import K_B, TWO_PI
from .core import GasEnvironment
from .detection import (
    calibrate_volts_to_meters,
    lorentzian_fit,
    Spectrum,
    synthesize_readout,
    welch_psd,
    write_spectrum_csv,
)
from .dynamics import (
    EquationOfMotion,
    Trajectory,
    ensemble,
    read_trajectory_csv,
    simulate,
    write_trajectory_csv,
)
from .errors import (
    ConfigError,
    NumericalError,
    PhysicsValidityError,
    StepSizeError,
    UnresolvedPeakError,
)
from .noise import (
    build_noise_budget,
    budget_report,
    disc_photon_recoil_rate,
    gas_damping_free_molecular,
    gas_damping_knudsen,
    recoil_heating_rate,
)
from .optics import AXES, trap_frequencies
from .sensing import (
    acceleration_min,
    force_min_thermal,
    force_min_with_recoil,
    min_frequency_shift,
    strain_limit,
    torque_min,
)

EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_NUMERICAL = 4

# reference single-tweezer configuration: 200 nm silica at 1 W / 2 um /
# 1550 nm in 1 mbar air; the x/y splitting reproduces 47.328/43.025 kHz
REFERENCE_CONFIGS = {
    "time_trace": {
        "particle": {"radius_m": 100e-9, "density_kg_m3": 2200.0,
                     "refractive_index": 1.45},
        "beam": {"power_w": 1.0, "waist_m": 2e-6, "wavelength_m": 1550e-9,
                 "asymmetry_xy": 47.328 / 43.025},
        "gas": {"pressure_pa": 100.0, "temperature_k": 300.0},
        "simulation": {"duration_s": 2.5, "seed": 714025, "store_every": 4},
    }
}


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _trap_summary(cfg: ExperimentConfig) -> dict:
    freqs = trap_frequencies(cfg.particle, cfg.beam)
    nb = build_noise_budget(
        cfg.particle, cfg.beam, cfg.gas, freqs,
        gamma_fb=cfg.feedback.damping_gain if cfg.feedback else 0.0,
    )
    report = budget_report(cfg.particle, cfg.beam, cfg.gas, freqs, nb)
    return {
        "fingerprint": cfg.fingerprint,
        "trap_frequencies_rad_s": {
            ax: w for ax, w in zip(AXES, freqs.as_array().tolist())
        },
        "trap_frequencies_hz": {
            ax: w / TWO_PI for ax, w in zip(AXES, freqs.as_array().tolist())
        },
        "gamma_gas": nb.gamma_gas,
        "budget": report,
    }


def _cmd_trap(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    summary = _trap_summary(cfg)
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        _write_json(Path(args.out) / "trap.json", summary)
    return 0


def _cmd_budget(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    summary = _trap_summary(cfg)
    payload = dict(summary["budget"])
    payload["fingerprint"] = cfg.fingerprint
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out:
        _write_json(Path(args.out) / "budget.json", payload)
    return 0


def _build_eom(cfg: ExperimentConfig) -> EquationOfMotion:
    sim = cfg.simulation
    return EquationOfMotion.from_physics(
        cfg.particle, cfg.beam, cfg.gas,
        include_recoil=sim.include_recoil if sim else False,
        duffing=sim.duffing if sim else False,
        controller=cfg.feedback,
    )


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    if cfg.simulation is None:
        raise ConfigError("missing required section [simulation]")
    sim = cfg.simulation
    eom = _build_eom(cfg)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    runs = ensemble(
        eom, sim.duration, sim.dt, n_runs=sim.n_runs, base_seed=sim.seed,
        store_every=sim.store_every, config_fingerprint=cfg.fingerprint,
    )
    for traj in runs:
        name = "traj.csv" if traj.run_index == 0 else f"traj_run{traj.run_index}.csv"
        write_trajectory_csv(traj, out / name)
    if cfg.readout is not None:
        volts = synthesize_readout(runs[0], cfg.readout, seed=sim.seed)
        _write_volts_csv(out / "volts.csv", runs[0], volts, cfg.fingerprint)
    print(f"wrote {len(runs)} trajectory file(s) to {out}")
    return 0


def _write_volts_csv(path: Path, traj: Trajectory, volts: np.ndarray,
                     fingerprint: str) -> None:
    t = traj.times
    with open(path, "w", newline="") as fh:
        fh.write("t,v\n")
        for i in range(volts.size):
            fh.write(f"{t[i]:.17g},{volts[i]:.17g}\n")
    _write_json(Path(str(path) + ".json"), {
        "columns": ["t", "v"],
        "dt_s": traj.dt,
        "seed": traj.seed,
        "config_fingerprint": fingerprint,
        "units": "s, V",
    })


def _spectrum_for_axis(traj: Trajectory, axis: str) -> Spectrum:
    series = traj.positions[:, traj.axis(axis)]
    return welch_psd(series, sample_rate=1.0 / traj.dt, units="m^2/Hz")


def _cmd_psd(args) -> int:
    traj = read_trajectory_csv(args.series)
    out = Path(args.out or Path(args.series).parent)
    out.mkdir(parents=True, exist_ok=True)
    axes = AXES if args.axis == "all" else (args.axis,)
    fits = {}
    for ax in axes:
        sp = _spectrum_for_axis(traj, ax)
        write_spectrum_csv(sp, out / f"psd_{ax}.csv", sidecar={
            "axis": ax,
            "seed": traj.seed,
            "config_fingerprint": traj.config_fingerprint,
        })
        try:
            fit = lorentzian_fit(sp)
            fits[ax] = {
                "amplitude": fit.amplitude,
                "omega_m_rad_s": fit.omega_m,
                "frequency_hz": fit.omega_m / TWO_PI,
                "gamma_rad_s": fit.gamma,
                "noise_floor": fit.noise_floor,
                "peak_height": fit.peak_height,
            }
        except UnresolvedPeakError as exc:
            fits[ax] = {"error": str(exc)}
    payload = {
        "fingerprint": traj.config_fingerprint,
        "seed": traj.seed,
        "fits": fits,
    }
    _write_json(out / "psd_fit.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_calibrate(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    data = np.loadtxt(args.series, delimiter=",", skiprows=1)
    t, volts = data[:, 0], data[:, 1]
    dt = float(t[1] - t[0])
    sp = welch_psd(volts, sample_rate=1.0 / dt, units="V^2/Hz")
    result = calibrate_volts_to_meters(sp, cfg.particle.mass, cfg.gas.temperature)
    payload = {
        "fingerprint": cfg.fingerprint,
        "conversion_v_per_m": result.conversion,
        "uncertainty_v_per_m": result.uncertainty,
        "fitted_omega_m_rad_s": result.fit.omega_m,
        "fitted_gamma_rad_s": result.fit.gamma,
        "assumes_thermal_equilibrium": result.assumes_thermal_equilibrium,
        "gas_temperature_k": cfg.gas.temperature,
    }
    out = Path(args.out or Path(args.series).parent)
    _write_json(out / "calibration.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _sense_payload(cfg: ExperimentConfig) -> tuple[dict, list[tuple[float, float]]]:
    if cfg.sensing is None:
        raise ConfigError("missing required section [sensing]")
    sense = cfg.sensing
    p, b, g = cfg.particle, cfg.beam, cfg.gas
    bandwidth = sense.bandwidth
    payload = {
        "fingerprint": cfg.fingerprint,
        "bandwidth_hz": bandwidth,
        "measurement_time_s": sense.measurement_time,
        "t_cm_k": sense.t_cm,
    }
    curve = []
    if p.shape == "sphere":
        omega0 = trap_frequencies(p, b).omega_x
        gamma_g = gas_damping_knudsen(p, g)
        gamma_sc = recoil_heating_rate(p, b, omega0, "x")
        k = p.mass * omega0**2
        f_thermal = force_min_thermal(
            k, sense.t_cm, bandwidth, omega0, omega0 / gamma_g
        )
        f_lim = force_min_with_recoil(
            p.mass, sense.t_cm, gamma_g, bandwidth, gamma_sc, omega0
        )
        a_si, a_g = acceleration_min(f_lim, p.mass)
        payload.update({
            "omega0_rad_s": omega0,
            "gamma_gas": gamma_g,
            "gamma_sc_x": gamma_sc,
            "force_min_thermal_n": f_thermal,
            "force_min_with_recoil_n": f_lim,
            "acceleration_min_m_s2": a_si,
            "acceleration_min_g": a_g,
            "torque_min_nm": torque_min(
                sense.t_cm, p.moment_of_inertia, gamma_g, sense.measurement_time
            ),
        })
        if sense.z_rms > 0:
            payload["min_frequency_shift"] = min_frequency_shift(
                sense.t_cm, bandwidth, k, omega0, sense.q_eff, sense.z_rms
            )
        if sense.scan is not None and sense.scan.kind == "pressure":
            grid = np.geomspace(sense.scan.start, sense.scan.stop,
                                sense.scan.points)
            for pressure in grid:
                gas_i = GasEnvironment(
                    pressure=float(pressure), temperature=g.temperature,
                    viscosity=g.viscosity, molecular_mass=g.molecular_mass,
                    molecular_diameter=g.molecular_diameter,
                )
                gamma_i = gas_damping_knudsen(p, gas_i)
                value = force_min_with_recoil(
                    p.mass, sense.t_cm, gamma_i, bandwidth, gamma_sc, omega0
                ) if gamma_i > 0 else float("nan")
                curve.append((float(pressure), value))
            payload["scan"] = {"kind": "pressure",
                               "columns": ["pressure_pa", "force_min_n"]}
        elif sense.scan is not None:
            raise ConfigError("frequency scans describe disc sensors")
    else:
        if b.cavity is None:
            raise ConfigError("disc sensing requires [beam.cavity]")
        if sense.scan is None or sense.scan.kind != "frequency":
            raise ConfigError("disc sensing requires a frequency scan")
        gamma_g = gas_damping_free_molecular(p, g)
        payload["gamma_gas"] = gamma_g
        grid = np.geomspace(sense.scan.start, sense.scan.stop, sense.scan.points)
        for omega in grid:
            gamma_sc_disc = disc_photon_recoil_rate(p, b, float(omega))
            curve.append((float(omega), float(strain_limit(
                p.mass, sense.t_cm, gamma_g, bandwidth, gamma_sc_disc,
                float(omega), b.cavity.length, b.cavity.linewidth,
            ))))
        payload["scan"] = {"kind": "frequency",
                           "columns": ["omega0_rad_s", "h_limit"]}
    return payload, curve


def _cmd_sense(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    payload, curve = _sense_payload(cfg)
    out = Path(args.out or ".")
    _write_json(out / "sense.json", payload)
    if curve:
        with open(out / "sense_scan.csv", "w", newline="") as fh:
            fh.write(",".join(payload["scan"]["columns"]) + "\n")
            for xval, yval in curve:
                fh.write(f"{xval:.17g},{yval:.17g}\n")
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def reproduce_time_trace(out_dir, seed: int | None = None) -> dict:
    """Rebuild the reference single-tweezer bundle: trajectory, per-axis
    spectra, and position/velocity histogram data, with summary checks."""
    raw = REFERENCE_CONFIGS["time_trace"]
    cfg = parse_config(raw, seed_override=seed)
    sim = cfg.simulation
    start = time.perf_counter()
    freqs = trap_frequencies(cfg.particle, cfg.beam)
    ratio = freqs.omega_y / freqs.omega_z
    eom = _build_eom(cfg)
    traj = simulate(
        eom, sim.duration, sim.dt, sim.seed,
        store_every=sim.store_every, config_fingerprint=cfg.fingerprint,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # figure-sized excerpt; spectra and histograms use the full record
    excerpt_rows = min(int(0.02 / traj.dt) + 1, traj.n_samples)
    excerpt = Trajectory(
        dt=traj.dt,
        positions=traj.positions[:excerpt_rows].copy(),
        velocities=traj.velocities[:excerpt_rows].copy(),
        seed=traj.seed,
        config_fingerprint=traj.config_fingerprint,
    )
    write_trajectory_csv(excerpt, out / "traj.csv",
                         sidecar={"note": "first 20 ms of the full record"})

    fitted = {}
    for ax in AXES:
        sp = _spectrum_for_axis(traj, ax)
        write_spectrum_csv(sp, out / f"psd_{ax}.csv", sidecar={
            "axis": ax, "seed": traj.seed,
            "config_fingerprint": cfg.fingerprint,
        })
        fit = lorentzian_fit(sp)
        fitted[ax] = {"omega_m_rad_s": fit.omega_m, "gamma_rad_s": fit.gamma}

    mass = cfg.particle.mass
    t_gas = cfg.gas.temperature
    summary_stats = {}
    for ax, omega in zip(AXES, freqs.as_array()):
        q = traj.positions[:, traj.axis(ax)]
        v = traj.velocities[:, traj.axis(ax)]
        _write_histogram(out / f"hist_position_{ax}.csv", q,
                         math.sqrt(K_B * t_gas / (mass * omega**2)))
        _write_histogram(out / f"hist_velocity_{ax}.csv", v,
                         math.sqrt(K_B * t_gas / mass))
        summary_stats[ax] = {
            "position_variance_m2": float(np.var(q)),
            "position_variance_expected_m2": K_B * t_gas / (mass * omega**2),
            "velocity_variance_m2_s2": float(np.var(v)),
            "velocity_variance_expected_m2_s2": K_B * t_gas / mass,
        }

    summary = {
        "builtin": "time_trace",
        "fingerprint": cfg.fingerprint,
        "seed": sim.seed,
        "duration_s": sim.duration,
        "trap_frequencies_hz": {
            ax: w / TWO_PI for ax, w in zip(AXES, freqs.as_array().tolist())
        },
        "ratio_omega_y_over_omega_z": ratio,
        "gamma_gas": eom.gamma_gas,
        "fitted": fitted,
        "statistics": summary_stats,
        "runtime_s": time.perf_counter() - start,
    }
    _write_json(out / "summary.json", summary)
    return summary


def _write_histogram(path, samples: np.ndarray, sigma_expected: float) -> None:
    lo, hi = -4.0 * sigma_expected, 4.0 * sigma_expected
    counts, edges = np.histogram(samples, bins=61, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = edges[1] - edges[0]
    model = samples.size * width * np.exp(
        -0.5 * (centers / sigma_expected) ** 2
    ) / (sigma_expected * math.sqrt(2.0 * math.pi))
    with open(path, "w", newline="") as fh:
        fh.write("bin_center,count,gaussian_model\n")
        for c, n, m in zip(centers, counts, model):
            fh.write(f"{c:.17g},{n},{m:.17g}\n")


def _cmd_reproduce(args) -> int:
    if args.builtin not in REFERENCE_CONFIGS:
        raise ConfigError(
            f"unknown builtin {args.builtin!r}; available: "
            f"{', '.join(sorted(REFERENCE_CONFIGS))}"
        )
    out = args.out or f"reproduce_{args.builtin}"
    summary = reproduce_time_trace(out, seed=args.seed)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


PIPELINE_ORDER = ("trap", "budget", "simulate", "psd", "calibrate", "sense")


def run_pipeline(config_path, out_dir, stages, seed: int | None = None) -> int:
    """Run the requested stages in dependency order."""
    unknown = set(stages) - set(PIPELINE_ORDER)
    if unknown:
        raise ConfigError(f"unknown stage(s): {', '.join(sorted(unknown))}")
    ordered = [s for s in PIPELINE_ORDER if s in stages]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ns = argparse.Namespace(config=config_path, out=str(out), seed=seed,
                            axis="all", series=None, builtin=None)
    for stage in ordered:
        if stage == "trap":
            _cmd_trap(ns)
        elif stage == "budget":
            _cmd_budget(ns)
        elif stage == "simulate":
            _cmd_simulate(ns)
        elif stage == "psd":
            ns.series = str(out / "traj.csv")
            _cmd_psd(ns)
        elif stage == "calibrate":
            ns.series = str(out / "volts.csv")
            _cmd_calibrate(ns)
        elif stage == "sense":
            _cmd_sense(ns)
    return 0


def _cmd_pipeline(args) -> int:
    stages = [s.strip() for s in args.stages.split(",") if s.strip()]
    if not stages:
        raise ConfigError("--stages must list at least one stage")
    return run_pipeline(args.config, args.out or ".", stages, seed=args.seed)


def _add_common(parser, config_required: bool = True) -> None:
    parser.add_argument("-c", "--config", required=config_required,
                        help="TOML experiment configuration")
    parser.add_argument("-o", "--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override simulation seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levisim",
        description="Levitated-nanoparticle trap, dynamics, detection, and "
                    "sensing toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trap", help="trap frequencies, damping, noise budget")
    _add_common(p)
    p.set_defaults(func=_cmd_trap)

    p = sub.add_parser("budget", help="noise budget JSON")
    _add_common(p)
    p.set_defaults(func=_cmd_budget)

    p = sub.add_parser("simulate", help="integrate the stochastic dynamics")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("psd", help="Welch spectra and Lorentzian fits of a "
                                   "trajectory CSV")
    p.add_argument("series", help="trajectory CSV (t,x,vx,y,vy,z,vz)")
    p.add_argument("--axis", choices=("x", "y", "z", "all"), default="all")
    _add_common(p, config_required=False)
    p.set_defaults(func=_cmd_psd)

    p = sub.add_parser("calibrate", help="volts-to-meters from a voltage CSV")
    p.add_argument("series", help="voltage CSV (t,v)")
    _add_common(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("sense", help="sensitivity floors and scans")
    _add_common(p)
    p.set_defaults(func=_cmd_sense)

    p = sub.add_parser("reproduce", help="rebuild a reference output bundle")
    p.add_argument("builtin", help="bundle id (time_trace)")
    _add_common(p, config_required=False)
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("pipeline", help="run several stages in order")
    p.add_argument("--stages", required=True,
                   help="comma-separated subset of "
                        f"{','.join(PIPELINE_ORDER)}")
    _add_common(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsValidityError as exc:
        print(f"physics validity error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (NumericalError, StepSizeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
