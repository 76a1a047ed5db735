"""Optical readout model, spectral estimation, and calibration.

Spectral convention (locked package-wide): PSDs are two-sided in angular
frequency, <q^2> = (1/2pi) integral S(omega) domega over the full line.
Spectra store the symmetric two-sided grid so the discrete Parseval sum
``sum(S) * domega / (2 pi)`` equals the signal mean square directly.  For a
thermal harmonic oscillator the position PSD is the Lorentzian

    S(omega) = (2 kB T gamma / M) / ((omega_m^2 - omega^2)^2 + omega^2 gamma^2)

whose peak value is 2 kB T / (M gamma omega_m^2) and whose full integral
returns the equipartition variance kB T / (M omega_m^2).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import signal as _signal
from scipy.optimize import least_squares

from . import rng
from .constants import K_B, TWO_PI
from .dynamics import Trajectory
from .errors import FitError, UnresolvedPeakError

FIT_PARAMETERS = ("amplitude", "omega_m", "gamma", "noise_floor")


@dataclass(frozen=True)
class ReadoutModel:
    """Interferometric displacement readout.

    ``conversion`` is the true transduction [V/m] used when synthesizing
    detector data; ``shot_noise_floor`` the white detector-noise PSD
    [V^2/Hz]; the field amplitudes and phases feed the interference model.
    ``heterodyne_offset`` is the reference-signal frequency offset (0 for
    homodyne).
    """

    conversion: float = 1.0
    shot_noise_floor: float = 0.0
    reference_phase: float = 0.0
    local_oscillator_power: float = 1e-3
    signal_power: float = 1e-9
    heterodyne_offset: float = 0.0

    def __post_init__(self):
        if self.local_oscillator_power < 0 or self.signal_power < 0:
            raise ValueError("powers must be >= 0")
        if self.shot_noise_floor < 0:
            raise ValueError("shot_noise_floor must be >= 0")


def photodetector_power(
    rm: ReadoutModel,
    phi_s,
    e_r: float | None = None,
    e_s: float | None = None,
    balanced: bool = False,
    t: float = 0.0,
):
    """Detector signal of interfering reference and signal fields [arb].

    Unbalanced: |E_r|^2 + 2 E_r E_s cos(phi_s - phi_r) + |E_s|^2.  Balanced
    detection subtracts the reference offset and keeps the interference
    term only.  Field amplitudes default to the square roots of the model
    powers; ``t`` advances the reference phase for heterodyne operation.
    """
    if e_r is None:
        e_r = math.sqrt(rm.local_oscillator_power)
    if e_s is None:
        e_s = math.sqrt(rm.signal_power)
    phi_r = rm.reference_phase + rm.heterodyne_offset * t
    phi_s = np.asarray(phi_s, dtype=float)
    interference = 2.0 * e_r * e_s * np.cos(phi_s - phi_r)
    if balanced:
        out = interference
    else:
        out = e_r**2 + interference + e_s**2
    return out if out.ndim else float(out)


def synthesize_readout(
    traj: Trajectory, rm: ReadoutModel, seed: int, axis: str = "x"
) -> np.ndarray:
    """Detector voltage v = conversion * q + white shot noise [V].

    The shot-noise sample variance is shot_noise_floor / dt, the white
    level matching the configured PSD under the package convention.
    Deterministic for a given (trajectory, seed).
    """
    q = traj.positions[:, traj.axis(axis)]
    volts = rm.conversion * q
    if rm.shot_noise_floor > 0:
        gen = rng.stream(seed, traj.run_index, rng.CHANNEL_READOUT)
        sigma = math.sqrt(rm.shot_noise_floor / traj.dt)
        volts = volts + sigma * gen.standard_normal(q.size)
    return volts


@dataclass(frozen=True)
class Spectrum:
    """Two-sided PSD on a strictly increasing angular-frequency grid."""

    omega: np.ndarray
    psd: np.ndarray
    units: str = "arb^2/Hz"
    convention: str = "two-sided-angular"
    window: str = "hann"
    segment_length: int = 0
    overlap: float = 0.0
    n_segments: int = 1

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        psd = np.asarray(self.psd, dtype=float)
        if omega.ndim != 1 or omega.shape != psd.shape:
            raise ValueError("omega and psd must be matching 1-d arrays")
        if not (np.diff(omega) > 0).all():
            raise ValueError("frequency grid must be strictly increasing")
        if (psd < 0).any():
            raise ValueError("psd must be >= 0")
        omega.setflags(write=False)
        psd.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "psd", psd)

    @property
    def domega(self) -> float:
        return float(self.omega[1] - self.omega[0])

    def mean_square(self) -> float:
        """Discrete Parseval sum: sum(S) domega / 2 pi."""
        return float(self.psd.sum() * self.domega / TWO_PI)

    def positive(self):
        """(omega, psd) restricted to omega > 0."""
        keep = self.omega > 0
        return self.omega[keep], self.psd[keep]


def welch_psd(
    series,
    sample_rate: float,
    segment_length: int | None = None,
    overlap: float = 0.5,
    window: str = "hann",
    units: str = "arb^2/Hz",
) -> Spectrum:
    """Welch PSD estimate in the package convention.

    Defaults: Hann window, 50% overlap, eight non-overlapping segments
    (so ~15 averaged periodograms).  Window power is normalized, making the
    estimate unbiased for white noise; units propagate from the input.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if segment_length is None:
        segment_length = max(x.size // 8, 16)
    if not 2 <= segment_length <= x.size:
        raise ValueError(
            f"segment_length must lie in [2, {x.size}], got {segment_length}"
        )
    if not 0.0 <= overlap <= 0.9:
        raise ValueError("overlap must lie in [0, 0.9]")
    try:
        _signal.get_window(window, segment_length)
    except ValueError as exc:
        raise ValueError(f"invalid window {window!r}: {exc}") from None
    noverlap = int(segment_length * overlap)
    freqs, pxx = _signal.welch(
        x,
        fs=sample_rate,
        window=window,
        nperseg=segment_length,
        noverlap=noverlap,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    order = np.argsort(freqs)
    n_segments = 1 + (x.size - segment_length) // (segment_length - noverlap) \
        if segment_length > noverlap else 1
    return Spectrum(
        omega=TWO_PI * freqs[order],
        psd=pxx[order],
        units=units,
        window=window,
        segment_length=segment_length,
        overlap=overlap,
        n_segments=n_segments,
    )


def periodogram(series, sample_rate: float, units: str = "arb^2/Hz") -> Spectrum:
    """Whole-record rectangular-window estimate (exact discrete Parseval)."""
    x = np.asarray(series, dtype=float)
    return welch_psd(
        x, sample_rate, segment_length=x.size, overlap=0.0,
        window="boxcar", units=units,
    )


def brownian_psd(omega, mass: float, temperature: float, omega_m: float, gamma: float):
    """Analytic thermal-oscillator position PSD (two-sided angular)."""
    omega = np.asarray(omega, dtype=float)
    num = 2.0 * K_B * temperature * gamma / mass
    return num / ((omega_m**2 - omega**2) ** 2 + (omega * gamma) ** 2)


def lorentzian_model(omega, amplitude, omega_m, gamma, noise_floor):
    omega = np.asarray(omega, dtype=float)
    return amplitude / ((omega_m**2 - omega**2) ** 2 + (omega * gamma) ** 2) + noise_floor


@dataclass(frozen=True)
class LorentzianFit:
    """Result of the damped-oscillator spectral fit.

    ``amplitude`` is the Lorentzian numerator (2 kB T gamma / M for a
    thermal spectrum); covariance is ordered like FIT_PARAMETERS.
    """

    amplitude: float
    omega_m: float
    gamma: float
    noise_floor: float
    covariance: np.ndarray

    @property
    def peak_height(self) -> float:
        """Model value at resonance, amplitude / (omega_m gamma)^2."""
        return self.amplitude / (self.omega_m * self.gamma) ** 2

    @property
    def area_mean_square(self) -> float:
        """(1/2pi) integral of the fitted Lorentzian: amplitude/(2 gamma omega_m^2)."""
        return self.amplitude / (2.0 * self.gamma * self.omega_m**2)

    def uncertainty(self, name: str) -> float:
        i = FIT_PARAMETERS.index(name)
        return float(np.sqrt(self.covariance[i, i]))


def _initial_guess(omega, psd):
    floor = float(np.median(psd))
    ipk = int(np.argmax(psd))
    peak = float(psd[ipk])
    omega_m = float(omega[ipk])
    half = floor + 0.5 * (peak - floor)
    above = psd > half
    left = ipk
    while left > 0 and above[left - 1]:
        left -= 1
    right = ipk
    while right < psd.size - 1 and above[right + 1]:
        right += 1
    width = float(omega[right] - omega[left])
    gamma = width if width > 0 else 0.05 * omega_m
    amplitude = (peak - floor) * (omega_m * gamma) ** 2
    return amplitude, omega_m, gamma, max(floor, peak * 1e-12)


def lorentzian_fit(sp: Spectrum, max_nfev: int = 2000) -> LorentzianFit:
    """Levenberg-Marquardt fit of log(PSD) to the Lorentzian-plus-floor model.

    Requires a resolved peak (max/median > 3).  Parameters are fitted in
    log space, which enforces positivity and equalizes the exponential
    scatter of averaged periodogram bins.
    """
    omega, psd = sp.positive()
    good = psd > 0
    omega, psd = omega[good], psd[good]
    if psd.size < 8:
        raise UnresolvedPeakError("too few positive-frequency bins to fit")
    guess = _initial_guess(omega, psd)
    if guess[0] <= 0 or np.max(psd) < 3.0 * np.median(psd):
        raise UnresolvedPeakError(
            "no resolved peak: max/median < 3 over positive frequencies"
        )
    log_data = np.log(psd)

    def residual(theta):
        model = lorentzian_model(omega, *np.exp(theta))
        return np.log(model) - log_data

    result = least_squares(
        residual,
        x0=np.log(np.asarray(guess)),
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    if not result.success:
        raise FitError(f"Lorentzian fit did not converge: {result.message}")
    theta = np.exp(result.x)
    dof = max(omega.size - 4, 1)
    res_var = 2.0 * result.cost / dof
    jtj = result.jac.T @ result.jac
    try:
        cov_log = np.linalg.inv(jtj) * res_var
    except np.linalg.LinAlgError:
        cov_log = np.full((4, 4), np.nan)
    cov = cov_log * np.outer(theta, theta)
    return LorentzianFit(
        amplitude=float(theta[0]),
        omega_m=float(theta[1]),
        gamma=float(theta[2]),
        noise_floor=float(theta[3]),
        covariance=cov,
    )


@dataclass(frozen=True)
class CalibrationResult:
    """Volts-to-meters conversion from the thermal-equilibrium spectrum.

    ``assumes_thermal_equilibrium`` flags the central caveat: if the
    center-of-mass temperature exceeds the gas temperature (heated
    particle), the conversion is biased by sqrt(T_cm / T_gas).
    """

    conversion: float            # V/m
    uncertainty: float           # V/m, from the fit covariance
    fit: LorentzianFit
    temperature: float
    mass: float
    assumes_thermal_equilibrium: bool = True


def calibrate_volts_to_meters(
    sp: Spectrum, mass: float, t_gas: float
) -> CalibrationResult:
    """Equipartition calibration: fitted spectral area in V^2 equals
    conversion^2 * kB T / (M omega_m^2)."""
    fit = lorentzian_fit(sp)
    area_v2 = fit.area_mean_square
    expected_m2 = K_B * t_gas / (mass * fit.omega_m**2)
    conversion = math.sqrt(area_v2 / expected_m2)
    # area ~ A / gamma at fixed omega_m; propagate its covariance
    a, g = fit.amplitude, fit.gamma
    var = (
        fit.covariance[0, 0] / a**2
        + fit.covariance[2, 2] / g**2
        - 2.0 * fit.covariance[0, 2] / (a * g)
    )
    uncertainty = conversion * 0.5 * math.sqrt(max(var, 0.0))
    return CalibrationResult(
        conversion=conversion,
        uncertainty=uncertainty,
        fit=fit,
        temperature=t_gas,
        mass=mass,
    )


def write_spectrum_csv(sp: Spectrum, path, sidecar: dict | None = None) -> None:
    """Write ``omega_rad_s,psd`` plus a JSON metadata sidecar."""
    with open(path, "w", newline="") as fh:
        fh.write("omega_rad_s,psd\n")
        for w, s in zip(sp.omega, sp.psd):
            fh.write(f"{w:.17g},{s:.17g}\n")
    meta = {
        "units": sp.units,
        "convention": sp.convention,
        "window": sp.window,
        "segment_length": sp.segment_length,
        "overlap": sp.overlap,
        "n_segments": sp.n_segments,
    }
    if sidecar:
        meta.update(sidecar)
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_spectrum_csv(path) -> Spectrum:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    meta = {}
    meta_path = str(path) + ".json"
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    return Spectrum(
        omega=data[:, 0].copy(),
        psd=data[:, 1].copy(),
        units=meta.get("units", "arb^2/Hz"),
        window=meta.get("window", "hann"),
        segment_length=int(meta.get("segment_length", 0)),
        overlap=float(meta.get("overlap", 0.0)),
        n_segments=int(meta.get("n_segments", 1)),
    )
