"""Damping and stochastic-heating rates.

Collects the dissipation and noise channels acting on the trapped particle:
gas drag interpolated across Knudsen regimes, the thermal force spectral
density tied to it by fluctuation-dissipation, photon-recoil back-action,
and the phonon-rate bookkeeping that balances them into a steady state.

All force PSDs use the two-sided angular-frequency convention
S(omega) = integral e^{i omega tau} <F(0) F(tau)> dtau, under which a white
force of PSD S heats a mode at S / (2 M hbar Omega) phonons per second and
the thermal PSD is exactly 2 M kB T gamma.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .constants import C_LIGHT, HBAR, K_B, TWO_PI
from .core import Beam, DISC, GasEnvironment, Particle, SPHERE, mean_free_path
from .errors import KnudsenRegimeWarning, PhysicsValidityError
from .optics import AXES, TrapFrequencies, scattering_cross_section

# recoil anisotropy for x-polarized light: emission suppressed along the
# polarization axis halves the x momentum diffusion
RECOIL_AXIS_WEIGHT = {"x": 0.5, "y": 1.0, "z": 1.0}


def gas_damping_knudsen(p: Particle, g: GasEnvironment) -> float:
    """Gas damping rate valid from diffusive to ballistic pressures [1/s].

    Stokes drag 6 pi eta R / m times the Knudsen interpolation
    0.619/(0.619 + Kn) (1 + c_k), c_k = 0.31 Kn / (0.785 + 1.152 Kn + Kn^2);
    continuous and monotone in pressure with the Stokes limit at Kn -> 0.
    """
    if p.shape != SPHERE:
        raise PhysicsValidityError("Knudsen drag interpolation requires a sphere")
    if g.pressure == 0.0:
        return 0.0
    kn = g.knudsen(p.radius)
    ck = 0.31 * kn / (0.785 + 1.152 * kn + kn * kn)
    stokes = 6.0 * math.pi * g.viscosity * p.radius / p.mass
    return stokes * 0.619 / (0.619 + kn) * (1.0 + ck)


def gas_damping_free_molecular(p: Particle, g: GasEnvironment) -> float:
    """Ballistic-regime drag, linear in pressure [1/s].

    Sphere: 16 P / (pi vbar rho R).  Disc (face-on, thickness t):
    32 P / (pi vbar rho t).  Warns when Kn < 10 where the ballistic
    assumption degrades.
    """
    if g.pressure == 0.0:
        return 0.0
    kn = mean_free_path(g) / p.radius
    if kn < 10.0:
        warnings.warn(
            f"Kn = {kn:.3g} < 10: free-molecular drag outside ballistic regime",
            KnudsenRegimeWarning,
            stacklevel=2,
        )
    if p.shape == DISC:
        scale = 32.0 / p.thickness
    else:
        scale = 16.0 / p.radius
    return scale * g.pressure / (math.pi * g.mean_speed * p.density)


def thermal_force_psd(p: Particle, g: GasEnvironment, gamma_g: float) -> float:
    """Fluctuation-dissipation white force PSD 2 M kB T gamma [N^2/Hz]."""
    if gamma_g < 0:
        raise ValueError("gamma_g must be >= 0")
    return 2.0 * p.mass * K_B * g.temperature * gamma_g


def thermalization_rate(gamma_g: float, t_gas: float, omega_q: float) -> float:
    """Phonon-flux rate gamma_g kB T / (hbar Omega) of the gas bath [1/s]."""
    if not omega_q > 0:
        raise ValueError("omega_q must be > 0")
    return gamma_g * K_B * t_gas / (HBAR * omega_q)


def scattered_power(p: Particle, b: Beam) -> float:
    """Total power scattered at the focus, C_scat I0 [W]."""
    return scattering_cross_section(p, b) * b.peak_intensity


def recoil_heating_rate(p: Particle, b: Beam, omega_q: float, axis: str) -> float:
    """Photon-recoil phonon heating rate [1/s].

    (1/5) (P_scat / M c^2) (omega_laser / Omega_q) along y and z; halved
    along the polarization axis x where dipole emission is suppressed.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    if not omega_q > 0:
        raise ValueError("omega_q must be > 0")
    weight = RECOIL_AXIS_WEIGHT[axis]
    return (
        weight
        * 0.2
        * scattered_power(p, b)
        / (p.mass * C_LIGHT**2)
        * (b.angular_frequency / omega_q)
    )


def recoil_force_psd(p: Particle, b: Beam, axis: str) -> float:
    """Back-action force PSD of photon recoil [N^2/Hz], white.

    Normalized so that S / (2 M hbar Omega) reproduces recoil_heating_rate
    exactly: S_y = S_z = (2/5) hbar omega_laser P_scat / c^2, halved on x.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    weight = RECOIL_AXIS_WEIGHT[axis]
    return weight * 0.4 * HBAR * b.angular_frequency * scattered_power(p, b) / C_LIGHT**2


def recoil_heating_rate_volumetric(p: Particle, b: Beam) -> float:
    """Secondary recoil estimator (2/5) pi^2 omega_laser V / lambda^3 * cm [1/s].

    Kept verbatim as a cross-check channel; it disagrees grossly with the
    scattered-power estimator and the two are reported side by side, never
    reconciled.  recoil_heating_rate is the default everywhere.
    """
    eps = p.permittivity_ratio
    return (
        0.4
        * math.pi**2
        * b.angular_frequency
        * p.volume
        / b.wavelength**3
        * (eps - 1.0)
        / (eps + 2.0)
    )


def disc_photon_recoil_rate(p: Particle, b: Beam, omega_trap: float) -> float:
    """Cavity-recaptured recoil damping-equivalent rate for a disc [1/s].

    V_c lambda omega_trap / (4 L) / integral dV (eps - 1) / finesse_disc,
    with the dielectric integral analytic for a uniform disc.
    """
    if b.cavity is None:
        raise PhysicsValidityError("disc recoil rate requires cavity parameters")
    if not omega_trap > 0:
        raise ValueError("omega_trap must be > 0")
    dielectric_volume = p.volume * (p.permittivity_ratio - 1.0)
    return (
        b.cavity.mode_volume
        * b.wavelength
        * omega_trap
        / (4.0 * b.cavity.length)
        / dielectric_volume
        / b.cavity.finesse_disc
    )


def classicality_threshold(omega_q: float) -> float:
    """Temperature hbar Omega / kB below which the classical picture fails [K]."""
    if omega_q < 0:
        raise ValueError("omega_q must be >= 0")
    return HBAR * omega_q / K_B


def hot_sphere_damping_correction(t_em: float, t_gas: float, gamma_g: float) -> float:
    """Extra damping channel from emission-heated gas rebounds [1/s].

    Gamma_em = (2 pi / 16) sqrt(T_em / T_gas) gamma_g.  The T_em = T_gas
    baseline value is returned as-is; callers report it separately rather
    than folding it into gamma_g.
    """
    if t_em < t_gas:
        raise PhysicsValidityError("t_em must be >= t_gas")
    if not t_gas > 0:
        raise ValueError("t_gas must be > 0")
    return TWO_PI / 16.0 * math.sqrt(t_em / t_gas) * gamma_g


@dataclass(frozen=True)
class NoiseBudget:
    """Per-axis heating rates and damping channels of one configuration.

    ``Gamma_*`` are phonon heating rates [1/s], ``gamma_*`` damping rates
    [1/s]; arrays are ordered (x, y, z).  S values use the module's PSD
    convention.  Feedback-imprecision and technical heating are inputs, not
    modeled (``gamma_photon`` defaults to 0: Doppler damping of scattered
    photons is negligible here).
    """

    gamma_gas: float
    gamma_fb: float
    gamma_photon: float
    Gamma_th: np.ndarray
    Gamma_sc: np.ndarray
    Gamma_fb: float
    Gamma_other: float
    S_FF_thermal: float
    S_FF_qba: np.ndarray

    def __post_init__(self):
        for name in ("Gamma_th", "Gamma_sc", "S_FF_qba"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (3,):
                raise ValueError(f"{name} must have shape (3,)")
            object.__setattr__(self, name, arr)
        values = [
            self.gamma_gas, self.gamma_fb, self.gamma_photon,
            self.Gamma_fb, self.Gamma_other, self.S_FF_thermal,
        ]
        if any(v < 0 for v in values) or (self.Gamma_th < 0).any() \
                or (self.Gamma_sc < 0).any() or (self.S_FF_qba < 0).any():
            raise ValueError("all rates and PSDs must be >= 0")
        sx, sy, sz = self.S_FF_qba
        if sy > 0 and not (
            math.isclose(2.0 * sx, sy, rel_tol=1e-12)
            and math.isclose(sz, sy, rel_tol=1e-12)
        ):
            raise ValueError("recoil back-action must satisfy x:y:z = 1:2:2")


def steady_state_phonons(nb: NoiseBudget) -> np.ndarray:
    """Per-axis steady-state occupation (sum of heating)/(sum of damping)."""
    denominator = nb.gamma_gas + nb.gamma_fb + nb.gamma_photon
    if denominator <= 0:
        raise ZeroDivisionError("no damping channel: steady state undefined")
    numerator = nb.Gamma_th + nb.Gamma_sc + nb.Gamma_fb + nb.Gamma_other
    return numerator / denominator


def build_noise_budget(
    p: Particle,
    b: Beam,
    g: GasEnvironment,
    freqs: TrapFrequencies,
    gamma_fb: float = 0.0,
    gamma_photon: float = 0.0,
    Gamma_fb: float = 0.0,
    Gamma_other: float = 0.0,
) -> NoiseBudget:
    """Assemble the full budget for a trapped sphere from first principles."""
    gamma_g = gas_damping_knudsen(p, g)
    omegas = freqs.as_array()
    return NoiseBudget(
        gamma_gas=gamma_g,
        gamma_fb=gamma_fb,
        gamma_photon=gamma_photon,
        Gamma_th=np.array(
            [thermalization_rate(gamma_g, g.temperature, w) for w in omegas]
        ),
        Gamma_sc=np.array(
            [recoil_heating_rate(p, b, w, ax) for w, ax in zip(omegas, AXES)]
        ),
        Gamma_fb=Gamma_fb,
        Gamma_other=Gamma_other,
        S_FF_thermal=thermal_force_psd(p, g, gamma_g),
        S_FF_qba=np.array([recoil_force_psd(p, b, ax) for ax in AXES]),
    )


def with_feedback_damping(nb: NoiseBudget, gamma_fb: float) -> NoiseBudget:
    return replace(nb, gamma_fb=gamma_fb)


def budget_report(
    p: Particle,
    b: Beam,
    g: GasEnvironment,
    freqs: TrapFrequencies,
    nb: NoiseBudget,
) -> dict:
    """JSON-ready budget document: every rate with formula tag and inputs.

    Field names are part of the CLI contract (see README).
    """
    def entry(value, unit, formula):
        if isinstance(value, np.ndarray):
            value = {ax: float(v) for ax, v in zip(AXES, value)}
        return {"value": value, "unit": unit, "formula": formula}

    n_inf = steady_state_phonons(nb)
    report = {
        "inputs": {
            "particle": {
                "radius_m": p.radius,
                "density_kg_m3": p.density,
                "refractive_index": p.refractive_index,
                "shape": p.shape,
                "mass_kg": p.mass,
            },
            "beam": {
                "power_w": b.power,
                "waist_m": b.waist,
                "wavelength_m": b.wavelength,
                "geometry": b.geometry,
            },
            "gas": {
                "pressure_pa": g.pressure,
                "temperature_k": g.temperature,
                "mean_free_path_m": mean_free_path(g),
                "knudsen": g.knudsen(p.radius),
            },
            "trap_frequencies_rad_s": {
                ax: float(w) for ax, w in zip(AXES, freqs.as_array())
            },
        },
        "rates": {
            "gamma_gas": entry(
                nb.gamma_gas, "1/s", "stokes * 0.619/(0.619+Kn) * (1+c_k)"
            ),
            "gamma_gas_free_molecular": entry(
                gas_damping_free_molecular(p, g) if g.pressure > 0 else 0.0,
                "1/s",
                "16 P / (pi vbar rho R) (sphere)",
            ),
            "gamma_fb": entry(nb.gamma_fb, "1/s", "user input"),
            "gamma_photon": entry(nb.gamma_photon, "1/s", "user input"),
            "Gamma_th": entry(
                nb.Gamma_th, "1/s", "gamma_gas kB T_gas / (hbar Omega_q)"
            ),
            "Gamma_sc": entry(
                nb.Gamma_sc, "1/s", "(1/5) (P_scat/M c^2)(omega_laser/Omega_q), x halved"
            ),
            "Gamma_sc_volumetric": entry(
                recoil_heating_rate_volumetric(p, b),
                "1/s",
                "(2/5) pi^2 omega_laser V / lambda^3 * (eps-1)/(eps+2); cross-check only",
            ),
            "Gamma_fb": entry(nb.Gamma_fb, "1/s", "user input"),
            "Gamma_other": entry(nb.Gamma_other, "1/s", "user input"),
            "S_FF_thermal": entry(
                nb.S_FF_thermal, "N^2/Hz", "2 M kB T_gas gamma_gas"
            ),
            "S_FF_qba": entry(
                nb.S_FF_qba, "N^2/Hz", "(2/5) hbar omega_laser P_scat / c^2, x halved"
            ),
            "n_infinity": entry(
                n_inf, "phonons", "(Gamma_th+Gamma_sc+Gamma_fb+Gamma_other)/(gamma_gas+gamma_fb+gamma_photon)"
            ),
        },
        "convention": "two-sided angular-frequency PSDs: <F^2> = (1/2pi) int S domega",
    }
    return report
