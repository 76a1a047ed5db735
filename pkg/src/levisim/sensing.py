"""Closed-form sensitivity floors for force, acceleration, torque, and strain.

The thermal-noise force floor and the recoil-corrected floor are algebraic
rearrangements of the same white-force budget: with k = M Omega^2 and
Q = Omega / gamma,

    F_min = sqrt(4 k kB T b / (omega0 Q)) = sqrt(4 kB T gamma M b)

and the recoil bracket multiplies the radicand by 1 + Gamma_sc/(n_i gamma)
with n_i = kB T_cm / (hbar omega0).  Bandwidth b and averaging time are
reciprocal through b = 1 / (2 dt) (equivalent noise bandwidth of a boxcar
average).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import G_STANDARD, HBAR, K_B


@dataclass(frozen=True)
class SensingQuery:
    """Measurement settings for the sensitivity calculators.

    Exactly one of ``bandwidth`` [Hz] / ``measurement_time`` [s] is given;
    the other follows from b = 1/(2 dt).  ``z_rms`` is the driven amplitude
    for gradient (frequency-shift) sensing.
    """

    t_cm: float
    bandwidth: float | None = None
    measurement_time: float | None = None
    z_rms: float = 0.0
    q_eff: float = 1.0

    def __post_init__(self):
        if (self.bandwidth is None) == (self.measurement_time is None):
            raise ValueError("give exactly one of bandwidth / measurement_time")
        if self.bandwidth is not None:
            if not self.bandwidth > 0:
                raise ValueError("bandwidth must be > 0")
            object.__setattr__(self, "measurement_time", 1.0 / (2.0 * self.bandwidth))
        else:
            if not self.measurement_time > 0:
                raise ValueError("measurement_time must be > 0")
            object.__setattr__(self, "bandwidth", 1.0 / (2.0 * self.measurement_time))
        if not self.t_cm > 0:
            raise ValueError("t_cm must be > 0")
        if self.z_rms < 0:
            raise ValueError("z_rms must be >= 0")
        if not self.q_eff > 0:
            raise ValueError("q_eff must be > 0")


def force_min_thermal(k: float, temperature: float, bandwidth: float,
                      omega0: float, q_factor: float) -> float:
    """Thermal-noise force floor sqrt(4 k kB T b / (omega0 Q)) [N]."""
    if min(k, temperature, bandwidth, omega0, q_factor) <= 0:
        raise ValueError("all inputs must be > 0")
    return math.sqrt(4.0 * k * K_B * temperature * bandwidth / (omega0 * q_factor))


def force_min_with_recoil(mass: float, t_cm: float, gamma_g: float,
                          bandwidth: float, gamma_sc: float, omega0: float) -> float:
    """Force floor including photon-recoil back-action [N].

    sqrt(4 kB T_cm gamma_g b M [1 + Gamma_sc / (n_i gamma_g)]),
    n_i = kB T_cm / (hbar omega0).  Reduces to the thermal floor at
    Gamma_sc = 0 and becomes independent of gamma_g when recoil dominates.
    """
    if min(mass, t_cm, gamma_g, bandwidth, omega0) <= 0:
        raise ValueError("mass, t_cm, gamma_g, bandwidth, omega0 must be > 0")
    if gamma_sc < 0:
        raise ValueError("gamma_sc must be >= 0")
    n_i = K_B * t_cm / (HBAR * omega0)
    bracket = 1.0 + gamma_sc / (n_i * gamma_g)
    return math.sqrt(4.0 * K_B * t_cm * gamma_g * bandwidth * mass * bracket)


def min_frequency_shift(t_cm: float, bandwidth: float, k: float, omega0: float,
                        q_eff: float, z_rms: float) -> float:
    """Smallest resolvable |d omega0 / omega0| for a driven oscillator."""
    if not z_rms > 0:
        raise ValueError("z_rms must be > 0 (drive the oscillator)")
    if min(t_cm, bandwidth, k, omega0, q_eff) <= 0:
        raise ValueError("all inputs must be > 0")
    return math.sqrt(
        K_B * t_cm * bandwidth / (k * omega0 * q_eff * z_rms**2)
    )


def acceleration_min(f_lim: float, mass: float) -> tuple[float, float]:
    """Acceleration floor (m/s^2, g units) from a force floor."""
    if not mass > 0:
        raise ValueError("mass must be > 0")
    a = f_lim / mass
    return a, a / G_STANDARD


def torque_min(temperature: float, inertia: float, gamma: float,
               measurement_time: float) -> float:
    """Thermal torque floor sqrt(4 kB T I gamma) / sqrt(dt) [N m]."""
    if min(temperature, inertia, gamma, measurement_time) <= 0:
        raise ValueError("all inputs must be > 0")
    return math.sqrt(4.0 * K_B * temperature * inertia * gamma) / math.sqrt(
        measurement_time
    )


def cavity_response(omega, kappa: float):
    """H(omega) = sqrt(1 + 4 omega^2 / kappa^2); H -> 1 for a fast cavity."""
    if not kappa > 0:
        raise ValueError("kappa must be > 0")
    omega = np.asarray(omega, dtype=float)
    out = np.sqrt(1.0 + 4.0 * omega**2 / kappa**2)
    return out if out.ndim else float(out)


def strain_limit(mass: float, t_cm: float, gamma_g: float, bandwidth: float,
                 gamma_sc: float, omega0, cavity_length: float, kappa: float):
    """Minimum detectable strain of the cavity-trapped sensor.

    h = (4 / (omega0^2 L)) sqrt(kB T_cm gamma_g b / M
        [1 + gamma_sc / (N_i gamma_g)]) H(omega0)

    Broadcasts over omega0 (the trap frequency is tunable with intensity,
    so sensitivity curves are scans over omega0).  In the gas-dominated
    regime h scales as (M t)^-1/2 for a disc of thickness t; in the
    recoil-dominated regime as 1 / (M sqrt(finesse)).
    """
    if min(mass, t_cm, gamma_g, bandwidth) <= 0:
        raise ValueError("mass, t_cm, gamma_g, bandwidth must be > 0")
    if gamma_sc < 0:
        raise ValueError("gamma_sc must be >= 0")
    if not cavity_length > 0:
        raise ValueError("cavity_length must be > 0")
    omega0 = np.asarray(omega0, dtype=float)
    if not (omega0 > 0).all():
        raise ValueError("omega0 must be > 0")
    n_i = K_B * t_cm / (HBAR * omega0)
    bracket = 1.0 + gamma_sc / (n_i * gamma_g)
    radicand = K_B * t_cm * gamma_g * bandwidth / mass * bracket
    out = 4.0 / (omega0**2 * cavity_length) * np.sqrt(radicand) * cavity_response(
        omega0, kappa
    )
    return out if out.ndim else float(out)


def resonance_response_to_strain(omega_gw: float, omega0: float,
                                 rtol: float = 1e-6) -> tuple[bool, float]:
    """(resonant?, detuning) of a strain signal against the trap frequency."""
    if not (omega_gw > 0 and omega0 > 0):
        raise ValueError("frequencies must be > 0")
    detuning = abs(omega_gw - omega0)
    return detuning <= rtol * omega0, detuning
