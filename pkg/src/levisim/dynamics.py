"""Time-domain stochastic integration of the trapped particle's motion.

The equations of motion per axis q in (x, y, z) are

    qddot + gamma_g qdot + Omega_q^2 q (1 + Duffing terms)
        = [F_th + F_qba + F_drive + F_feedback] / M

integrated with the BAOAB splitting (exact Ornstein-Uhlenbeck treatment of
friction and noise, velocity-Verlet in the noiseless limit).  White force
noises are specified through their two-sided angular-frequency PSDs; the
thermal PSD is tied to the damping rate by fluctuation-dissipation and the
builders below never set the two independently.

Reproducibility contract: a (config, seed) pair maps to one trajectory,
bit for bit, through the Philox streams of :mod:`levisim.rng`; ensemble
member r uses streams keyed by (seed, r, channel), so members are
independent and order-insensitive.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import rng
from ._kernels import (
    CHUNK_STEPS,
    FB_COLD_DAMPING,
    FB_NONE,
    FB_PARAMETRIC,
    active_backend,
    baoab_chunk,
)
from .constants import HBAR, K_B, TWO_PI
from .core import Beam, GasEnvironment, Particle
from .errors import NumericalError, PhysicsValidityError, StepSizeError
from .feedback import KIND_COLD_DAMPING, KIND_NONE, KIND_PARAMETRIC, Controller
from .noise import gas_damping_knudsen, recoil_force_psd, thermal_force_psd
from .optics import AXES, DuffingCoefficients, duffing_coefficients, trap_frequencies

_FB_CODE = {KIND_NONE: FB_NONE, KIND_COLD_DAMPING: FB_COLD_DAMPING,
            KIND_PARAMETRIC: FB_PARAMETRIC}

TRAJECTORY_COLUMNS = ("t", "x", "vx", "y", "vy", "z", "vz")


@dataclass(frozen=True)
class SinusoidalDrive:
    """External drive F(t) = amplitude * sin(omega t + phase) per axis [N]."""

    amplitude: tuple[float, float, float]
    omega: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("drive omega must be > 0")
        object.__setattr__(self, "amplitude", tuple(float(a) for a in self.amplitude))


@dataclass(frozen=True)
class EquationOfMotion:
    """Parameters of the stochastic oscillator (all SI).

    ``s_ff_thermal`` and ``s_ff_qba`` are per-axis white force PSDs in the
    two-sided angular convention.  Use the builders to keep the thermal PSD
    consistent with ``gamma_gas``.
    """

    mass: float
    omega: np.ndarray                       # (3,) rad/s
    gamma_gas: float = 0.0
    s_ff_thermal: np.ndarray = (0.0, 0.0, 0.0)
    s_ff_qba: np.ndarray = (0.0, 0.0, 0.0)
    duffing: DuffingCoefficients | None = None
    drive: SinusoidalDrive | None = None
    controller: Controller | None = None

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be > 0")
        omega = np.asarray(self.omega, dtype=float)
        if omega.shape != (3,) or not (omega > 0).all():
            raise ValueError("omega must be three positive frequencies")
        object.__setattr__(self, "omega", omega)
        for name in ("s_ff_thermal", "s_ff_qba"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape == ():
                arr = np.full(3, float(arr))
            if arr.shape != (3,) or (arr < 0).any():
                raise ValueError(f"{name} must be three PSDs >= 0")
            object.__setattr__(self, name, arr)
        if self.gamma_gas < 0:
            raise ValueError("gamma_gas must be >= 0")
        if self.gamma_gas == 0.0 and (self.s_ff_thermal > 0).any():
            raise ValueError(
                "thermal noise without damping breaks fluctuation-dissipation; "
                "use the qba channel for undamped noise"
            )

    @classmethod
    def thermal(cls, mass, omega, gamma_gas, temperature, **kwargs):
        """Oscillator in a gas bath: S_FF = 2 M kB T gamma on each axis."""
        s = 2.0 * mass * K_B * temperature * gamma_gas
        return cls(mass=mass, omega=omega, gamma_gas=gamma_gas,
                   s_ff_thermal=(s, s, s), **kwargs)

    @classmethod
    def from_physics(
        cls,
        p: Particle,
        b: Beam,
        g: GasEnvironment,
        include_recoil: bool = False,
        duffing: bool = False,
        **kwargs,
    ):
        """Assemble the oscillator from trap, gas, and recoil physics."""
        freqs = trap_frequencies(p, b)
        gamma = gas_damping_knudsen(p, g)
        s_th = thermal_force_psd(p, g, gamma)
        s_qba = (
            np.array([recoil_force_psd(p, b, ax) for ax in AXES])
            if include_recoil
            else np.zeros(3)
        )
        return cls(
            mass=p.mass,
            omega=freqs.as_array(),
            gamma_gas=gamma,
            s_ff_thermal=(s_th, s_th, s_th),
            s_ff_qba=s_qba,
            duffing=duffing_coefficients(p, b) if duffing else None,
            **kwargs,
        )

    @property
    def gamma_effective(self) -> float:
        """Gas damping plus cold-damping feedback gain (resolution guard)."""
        extra = self.controller.damping_gain if self.controller else 0.0
        return self.gamma_gas + extra


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled state record; immutable once produced."""

    dt: float                      # sample period of stored rows [s]
    positions: np.ndarray          # (n, 3) [m]
    velocities: np.ndarray         # (n, 3) [m/s]
    seed: int
    run_index: int = 0
    config_fingerprint: str = ""

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        vel = np.asarray(self.velocities, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape != vel.shape:
            raise ValueError("positions/velocities must be matching (n, 3) arrays")
        if pos.shape[0] == 0:
            raise ValueError("trajectory must contain at least one sample")
        if not (np.isfinite(pos).all() and np.isfinite(vel).all()):
            raise ValueError("trajectory contains non-finite samples")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        pos.setflags(write=False)
        vel.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)

    @property
    def n_samples(self) -> int:
        return self.positions.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.dt

    def axis(self, name: str) -> int:
        return AXES.index(name)


@dataclass(frozen=True)
class SecondMoments:
    """Streaming <q^2>, <v^2> per axis over the post-burn-in samples."""

    q2_mean: np.ndarray
    v2_mean: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class EnergyTrace:
    times: np.ndarray
    energy_axis: np.ndarray        # (n, 3) [J]
    occupation: np.ndarray         # (n, 3) [phonons]

    @property
    def energy_total(self) -> np.ndarray:
        return self.energy_axis.sum(axis=1)


def default_timestep(eom: EquationOfMotion) -> float:
    """min(2 pi / Omega_max, 1 / gamma_eff) / 50: resolves both timescales."""
    dt = TWO_PI / float(eom.omega.max())
    if eom.gamma_effective > 0:
        dt = min(dt, 1.0 / eom.gamma_effective)
    return dt / 50.0


def _check_timestep(eom: EquationOfMotion, dt: float) -> None:
    if not dt > 0:
        raise StepSizeError("dt must be > 0")
    limit = TWO_PI / (20.0 * float(eom.omega.max()))
    if dt > limit:
        raise StepSizeError(f"dt = {dt:.3g} s does not resolve the oscillation "
                            f"(needs dt <= {limit:.3g} s)")
    if eom.gamma_effective > 0 and dt > 1.0 / (20.0 * eom.gamma_effective):
        raise StepSizeError(f"dt = {dt:.3g} s does not resolve the damping "
                            f"(needs dt <= {1.0 / (20.0 * eom.gamma_effective):.3g} s)")


def _kernel_inputs(eom: EquationOfMotion, dt: float):
    gamma = eom.gamma_gas
    c1 = math.exp(-gamma * dt)
    if gamma > 0:
        a_ou = math.sqrt((1.0 - c1 * c1) / (2.0 * gamma))
    else:
        a_ou = math.sqrt(dt)
    sig_th = np.sqrt(eom.s_ff_thermal)
    sig_qba = np.sqrt(eom.s_ff_qba)
    if eom.duffing is not None:
        duffing_on = 1
        xi_self = eom.duffing.xi_self
        xi_cross = eom.duffing.xi_cross
    else:
        duffing_on = 0
        xi_self = np.zeros(3)
        xi_cross = np.zeros((3, 3))
    if eom.drive is not None:
        drive_amp = np.asarray(eom.drive.amplitude, dtype=float)
        drive_omega = eom.drive.omega
        drive_phase = eom.drive.phase
    else:
        drive_amp = np.zeros(3)
        drive_omega = 0.0
        drive_phase = 0.0
    c = eom.controller
    if c is not None and c.kind != KIND_NONE:
        fb_kind = _FB_CODE[c.kind]
        fb_gain = c.gain
        fb_delay = int(round(c.measurement_delay / dt))
        fb_sat = c.force_saturation
        meas_sigma = math.sqrt(c.measurement_noise_psd / dt)
        meas_on = c.measurement_noise_psd > 0
    else:
        fb_kind = FB_NONE
        fb_gain = 0.0
        fb_delay = 0
        fb_sat = math.inf
        meas_sigma = 0.0
        meas_on = False
    return (gamma, c1, a_ou, sig_th, sig_qba, duffing_on, xi_self, xi_cross,
            drive_amp, drive_omega, drive_phase,
            fb_kind, fb_gain, fb_delay, fb_sat, meas_sigma, meas_on)


def _integrate(
    eom: EquationOfMotion,
    duration: float,
    dt: float,
    seed: int,
    run_index: int,
    store_every: int,
    burn_in: float,
    initial_position,
    initial_velocity,
):
    """Shared driver: chunked noise generation + kernel calls."""
    _check_timestep(eom, dt)
    n_steps = int(round(duration / dt))
    if n_steps < 1:
        raise ValueError("duration must cover at least one step")

    (gamma, c1, a_ou, sig_th, sig_qba, duffing_on, xi_self, xi_cross,
     drive_amp, drive_omega, drive_phase,
     fb_kind, fb_gain, fb_delay, fb_sat, meas_sigma, meas_on) = _kernel_inputs(eom, dt)

    q = np.zeros(3) if initial_position is None else np.array(initial_position, dtype=float)
    v = np.zeros(3) if initial_velocity is None else np.array(initial_velocity, dtype=float)
    if q.shape != (3,) or v.shape != (3,):
        raise ValueError("initial state must be 3-vectors")

    if store_every > 0:
        n_rows = n_steps // store_every + 1
        out_q = np.empty((n_rows, 3))
        out_v = np.empty((n_rows, 3))
        out_q[0] = q
        out_v[0] = v
    else:
        out_q = np.empty((0, 3))
        out_v = np.empty((0, 3))

    acc = np.zeros(7)
    burn_in_steps = int(round(burn_in / dt))
    meas_buf = np.zeros((fb_delay + 2, 3))

    gen_th = rng.stream(seed, run_index, rng.CHANNEL_THERMAL)
    gen_qba = rng.stream(seed, run_index, rng.CHANNEL_RECOIL)
    gen_meas = rng.stream(seed, run_index, rng.CHANNEL_MEASUREMENT)
    use_th = bool((sig_th > 0).any())
    use_qba = bool((sig_qba > 0).any())
    use_meas = fb_kind != FB_NONE and meas_on
    empty = np.empty((0, 3))

    step0 = 0
    while step0 < n_steps:
        m = min(CHUNK_STEPS, n_steps - step0)
        noise_th = gen_th.standard_normal((m, 3)) if use_th else empty
        noise_qba = gen_qba.standard_normal((m, 3)) if use_qba else empty
        noise_meas = gen_meas.standard_normal((m, 3)) if use_meas else empty
        baoab_chunk(
            q, v, m, dt, eom.mass,
            eom.omega**2, gamma,
            duffing_on, xi_self, xi_cross,
            c1, a_ou, sig_th, sig_qba,
            noise_th, noise_qba,
            drive_amp, drive_omega, drive_phase,
            fb_kind, fb_gain, fb_delay, fb_sat,
            noise_meas, meas_sigma, meas_buf,
            step0,
            out_q, out_v, store_every,
            acc, burn_in_steps,
        )
        if not (np.isfinite(q).all() and np.isfinite(v).all()):
            raise NumericalError(
                f"non-finite state within steps {step0}..{step0 + m} "
                f"(dt={dt:.3g}, backend={active_backend()})"
            )
        step0 += m
    return out_q, out_v, acc


def simulate(
    eom: EquationOfMotion,
    duration: float,
    dt: float | None = None,
    seed: int = 0,
    *,
    run_index: int = 0,
    store_every: int = 1,
    initial_position=None,
    initial_velocity=None,
    config_fingerprint: str = "",
) -> Trajectory:
    """Integrate one realization and return the sampled trajectory.

    ``store_every`` subsamples the stored record (the integration step is
    unchanged); identical (eom, duration, dt, seed, run_index) inputs give
    bit-identical output.
    """
    if dt is None:
        dt = default_timestep(eom)
    if store_every < 1:
        raise ValueError("store_every must be >= 1")
    out_q, out_v, _ = _integrate(
        eom, duration, dt, seed, run_index, store_every, 0.0,
        initial_position, initial_velocity,
    )
    return Trajectory(
        dt=dt * store_every,
        positions=out_q,
        velocities=out_v,
        seed=seed,
        run_index=run_index,
        config_fingerprint=config_fingerprint,
    )


def simulate_moments(
    eom: EquationOfMotion,
    duration: float,
    dt: float | None = None,
    seed: int = 0,
    *,
    run_index: int = 0,
    burn_in: float = 0.0,
    initial_position=None,
    initial_velocity=None,
) -> SecondMoments:
    """Integrate without storing samples; stream post-burn-in second moments."""
    if dt is None:
        dt = default_timestep(eom)
    _, _, acc = _integrate(
        eom, duration, dt, seed, run_index, 0, burn_in,
        initial_position, initial_velocity,
    )
    n = acc[6]
    if n < 1:
        raise ValueError("burn_in leaves no samples to average")
    return SecondMoments(q2_mean=acc[0:3] / n, v2_mean=acc[3:6] / n, n_samples=int(n))


def _worker_count() -> int:
    raw = os.environ.get("LEVISIM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ensemble(
    eom: EquationOfMotion,
    duration: float,
    dt: float | None = None,
    n_runs: int = 1,
    base_seed: int = 0,
    **kwargs,
) -> list[Trajectory]:
    """Independent realizations; run r uses streams keyed (base_seed, r).

    Members are mutually independent and reproducible individually, so the
    result does not depend on execution order.  LEVISIM_THREADS > 1 runs
    members concurrently (the compiled kernel releases the GIL).
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    runs = range(n_runs)
    workers = min(_worker_count(), n_runs)
    if workers > 1 and active_backend() == "numba":
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(simulate, eom, duration, dt, base_seed,
                            run_index=r, **kwargs)
                for r in runs
            ]
            return [f.result() for f in futures]
    return [simulate(eom, duration, dt, base_seed, run_index=r, **kwargs)
            for r in runs]


def msd(traj: Trajectory, axis: str = "x", max_lag: int | None = None):
    """Mean square displacement <[q(t+tau) - q(t)]^2> vs lag tau.

    Exact FFT algorithm (no stationarity approximation); the maximum lag is
    capped at a tenth of the record so every lag keeps decent statistics.
    Returns (lags [s], msd [m^2]).
    """
    x = traj.positions[:, traj.axis(axis)]
    n = x.size
    cap = n // 10
    if max_lag is None:
        max_lag = cap
    if not 1 <= max_lag <= cap:
        raise ValueError(f"max_lag must lie in [1, {cap}] (n = {n})")
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    fx = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(fx * np.conj(fx), nfft)[: max_lag + 1]
    # S1 recursion: sum of x_i^2 + x_{i+tau}^2 over valid windows
    x2 = x * x
    s1 = np.empty(max_lag + 1)
    s1[0] = 2.0 * x2.sum()
    tail = x2.sum()
    head = x2.sum()
    for tau in range(1, max_lag + 1):
        tail -= x2[tau - 1]
        head -= x2[n - tau]
        s1[tau] = tail + head
    counts = n - np.arange(max_lag + 1)
    out = (s1 - 2.0 * acf) / counts
    out[0] = 0.0
    return np.arange(max_lag + 1) * traj.dt, out


def velocity_rms(traj: Trajectory, axis: str = "x") -> float:
    v = traj.velocities[:, traj.axis(axis)]
    return float(np.sqrt(np.mean(v * v)))


def energy_trace(traj: Trajectory, eom: EquationOfMotion) -> EnergyTrace:
    """Per-sample harmonic energy and phonon occupation per axis.

    Valid for the harmonic model only; refuses Duffing configurations where
    the quadratic energy is not the oscillator energy.
    """
    if eom.duffing is not None:
        raise PhysicsValidityError("energy_trace requires the harmonic model")
    q = traj.positions
    v = traj.velocities
    e_axis = 0.5 * eom.mass * (v**2 + eom.omega**2 * q**2)
    occupation = e_axis / (HBAR * eom.omega)
    return EnergyTrace(times=traj.times, energy_axis=e_axis, occupation=occupation)


def write_trajectory_csv(traj: Trajectory, path, sidecar: dict | None = None) -> None:
    """Write ``t,x,vx,y,vy,z,vz`` (SI, full float64 precision) plus a JSON
    sidecar carrying the seed, sampling, and config fingerprint."""
    t = traj.times
    q = traj.positions
    v = traj.velocities
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for i in range(traj.n_samples):
            fh.write(
                f"{t[i]:.17g},{q[i,0]:.17g},{v[i,0]:.17g},"
                f"{q[i,1]:.17g},{v[i,1]:.17g},{q[i,2]:.17g},{v[i,2]:.17g}\n"
            )
    meta = {
        "columns": list(TRAJECTORY_COLUMNS),
        "dt_s": traj.dt,
        "n_samples": traj.n_samples,
        "seed": traj.seed,
        "run_index": traj.run_index,
        "config_fingerprint": traj.config_fingerprint,
        "rng": "Philox(key=[seed, run, channel, STREAM_TAG])",
        "units": "SI",
    }
    if sidecar:
        meta.update(sidecar)
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_trajectory_csv(path) -> Trajectory:
    """Re-ingest a trajectory written by :func:`write_trajectory_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    if data.shape[1] != 7:
        raise ValueError("trajectory CSV must have columns t,x,vx,y,vy,z,vz")
    meta_path = str(path) + ".json"
    seed = 0
    run_index = 0
    fingerprint = ""
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
        seed = int(meta.get("seed", 0))
        run_index = int(meta.get("run_index", 0))
        fingerprint = meta.get("config_fingerprint", "")
    t = data[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    return Trajectory(
        dt=dt,
        positions=data[:, (1, 3, 5)].copy(),
        velocities=data[:, (2, 4, 6)].copy(),
        seed=seed,
        run_index=run_index,
        config_fingerprint=fingerprint,
    )
