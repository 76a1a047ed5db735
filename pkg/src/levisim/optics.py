"""Optical fields and forces in the dipole (Rayleigh) regime.

The tweezer intensity is the focused Gaussian

    I(x, y, z) = I0 / (1 + z^2/zR^2) * exp(-2 (x^2 + y^2) / (w0^2 (1 + z^2/zR^2)))

and the standing-wave variant multiplies it by the axial interference
factor (1 + c^2 + 2 c cos(2 k z)) for retroreflection amplitude contrast c.
Forces follow the point-dipole expressions

    F_scat = z_hat C_scat I / c,     C_scat = 128 pi^5 R^6 / (3 lambda^4) * cm^2
    F_grad = (2 pi R^3 / c) * cm * grad I

with cm the Clausius-Mossotti factor and vacuum surroundings (n_med = 1).
The gradient force is exactly -grad U for the dipole potential
U = -alpha I / (2 eps0 c); trap frequencies and Duffing coefficients below
are the quadratic and quartic terms of that same potential, so curvature,
force, and frequency are mutually consistent by construction.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, TWO_PI
from .core import Beam, Particle, SPHERE, cm_factor
from .errors import PhysicsValidityError, RayleighValidityWarning

AXES = ("x", "y", "z")


def size_parameter(p: Particle, b: Beam) -> float:
    """Optical size parameter 2 pi R / lambda."""
    return TWO_PI * p.radius / b.wavelength


def check_rayleigh_validity(p: Particle, b: Beam, stacklevel: int = 2) -> float:
    """Warn above size parameter 0.5, raise above 1 (dipole limit broken)."""
    xi = size_parameter(p, b)
    if xi > 1.0:
        raise PhysicsValidityError(
            f"size parameter {xi:.3g} > 1: dipole approximation invalid"
        )
    if xi > 0.5:
        warnings.warn(
            f"size parameter {xi:.3g} > 0.5: dipole approximation marginal",
            RayleighValidityWarning,
            stacklevel=stacklevel,
        )
    return xi


@dataclass(frozen=True)
class IntensityField:
    """Closed-form intensity map with its analytic gradient.

    ``contrast`` is ignored for the single tweezer.  Intensities are W/m^2,
    positions meters, beam propagation along +z.
    """

    geometry: str
    i0: float
    waist: float
    rayleigh_range: float
    wavenumber: float
    contrast: float = 1.0

    def _envelope(self, x, y, z):
        s = 1.0 + (z / self.rayleigh_range) ** 2
        return self.i0 / s * np.exp(-2.0 * (x * x + y * y) / (self.waist**2 * s)), s

    def intensity(self, r) -> np.ndarray | float:
        x, y, z = np.asarray(r[0]), np.asarray(r[1]), np.asarray(r[2])
        env, _ = self._envelope(x, y, z)
        if self.geometry == "standing_wave":
            c = self.contrast
            env = env * (1.0 + c * c + 2.0 * c * np.cos(2.0 * self.wavenumber * z))
        return env

    def gradient(self, r) -> np.ndarray:
        """Analytic grad I, shape (3,) (or (3, ...) for array input)."""
        x, y, z = np.asarray(r[0]), np.asarray(r[1]), np.asarray(r[2])
        env, s = self._envelope(x, y, z)
        w2s = self.waist**2 * s
        dx = env * (-4.0 * x / w2s)
        dy = env * (-4.0 * y / w2s)
        # d/dz of [1/s * exp(-2 rho^2 / (w0^2 s))] with s = 1 + z^2/zR^2
        dsdz = 2.0 * z / self.rayleigh_range**2
        rho2 = x * x + y * y
        dz = env * dsdz * (-1.0 / s + 2.0 * rho2 / (self.waist**2 * s * s))
        if self.geometry == "standing_wave":
            c = self.contrast
            axial = 1.0 + c * c + 2.0 * c * np.cos(2.0 * self.wavenumber * z)
            daxial = -4.0 * c * self.wavenumber * np.sin(2.0 * self.wavenumber * z)
            dx = dx * axial
            dy = dy * axial
            dz = dz * axial + env * daxial
        return np.stack([dx, dy, dz])


def intensity_field(b: Beam) -> IntensityField:
    return IntensityField(
        geometry=b.geometry,
        i0=b.peak_intensity,
        waist=b.waist,
        rayleigh_range=b.rayleigh_range,
        wavenumber=b.wavenumber,
        contrast=b.contrast,
    )


def gaussian_intensity(b: Beam, r) -> float:
    """Focused-Gaussian intensity at position r (single tweezer only)."""
    if b.geometry != "single_tweezer":
        raise PhysicsValidityError("gaussian_intensity requires a single tweezer")
    return float(intensity_field(b).intensity(r))


def scattering_cross_section(p: Particle, b: Beam) -> float:
    """Dipole scattering cross section, proportional to R^6 / lambda^4."""
    check_rayleigh_validity(p, b, stacklevel=3)
    return (
        128.0 * math.pi**5 * p.radius**6 / (3.0 * b.wavelength**4) * cm_factor(p) ** 2
    )


def scattering_force(p: Particle, b: Beam, r) -> np.ndarray:
    """Radiation-pressure force along beam propagation, C_scat I / c."""
    f = scattering_cross_section(p, b) * intensity_field(b).intensity(r) / C_LIGHT
    return np.array([0.0, 0.0, float(f)])


def gradient_force_prefactor(p: Particle) -> float:
    """(2 pi R^3 / c) cm, so that F_grad = prefactor * grad I."""
    return 2.0 * math.pi * p.radius**3 / C_LIGHT * cm_factor(p)


def gradient_force(p: Particle, b: Beam, r) -> np.ndarray:
    """Dipole gradient force, pointing toward higher intensity for n > 1."""
    check_rayleigh_validity(p, b, stacklevel=3)
    return gradient_force_prefactor(p) * intensity_field(b).gradient(r)


def dipole_potential(p: Particle, b: Beam, r) -> float:
    """Dipole trapping potential U = -alpha I / (2 eps0 c) [J]."""
    return -gradient_force_prefactor(p) * float(intensity_field(b).intensity(r))


@dataclass(frozen=True)
class TrapFrequencies:
    """Harmonic eigenfrequencies about the trap center [rad/s]."""

    omega_x: float
    omega_y: float
    omega_z: float

    def __post_init__(self):
        if not (self.omega_x > 0 and self.omega_y > 0 and self.omega_z > 0):
            raise ValueError("trap frequencies must be > 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.omega_x, self.omega_y, self.omega_z])

    @property
    def omega_max(self) -> float:
        return max(self.omega_x, self.omega_y, self.omega_z)


def trap_frequencies(p: Particle, b: Beam) -> TrapFrequencies:
    """Trap frequencies of a sphere at the intensity maximum.

    Single tweezer:

        omega_r = sqrt(6 I0 cm / (c rho w0^2))
        omega_z = sqrt(3 I0 lambda^2 cm / (c pi^2 rho w0^4))

    so that omega_r / omega_z = sqrt(2) pi w0 / lambda exactly.  The x
    frequency is additionally multiplied by the beam's asymmetry factor.
    For a standing wave the transverse curvature scales with the antinode
    intensity (1+c)^2 I0 and the axial curvature picks up the cos(2kz)
    interference term, which dominates the Rayleigh-range term.
    """
    if p.shape != SPHERE:
        raise PhysicsValidityError("trap_frequencies requires a spherical particle")
    check_rayleigh_validity(p, b, stacklevel=3)
    cm = cm_factor(p)
    i0 = b.peak_intensity
    rho = p.density
    if b.geometry == "single_tweezer":
        omega_r = math.sqrt(6.0 * i0 * cm / (C_LIGHT * rho * b.waist**2))
        omega_z = math.sqrt(
            3.0 * i0 * b.wavelength**2 * cm / (C_LIGHT * math.pi**2 * rho * b.waist**4)
        )
    else:
        antinode = (1.0 + b.contrast) ** 2
        omega_r = math.sqrt(6.0 * i0 * antinode * cm / (C_LIGHT * rho * b.waist**2))
        # curvature of -C I: antinode Gaussian term + interference term 8 c k^2 I0
        pref = gradient_force_prefactor(p)
        k_gauss = pref * 2.0 * i0 * antinode / b.rayleigh_range**2
        k_sw = pref * 8.0 * b.contrast * b.wavenumber**2 * i0
        omega_z = math.sqrt((k_gauss + k_sw) / p.mass)
    return TrapFrequencies(b.asymmetry_xy * omega_r, omega_r, omega_z)


@dataclass(frozen=True)
class DuffingCoefficients:
    """Quartic (softening) corrections of the tweezer restoring force.

    The per-axis force model is

        F_q = -k_q q (1 + xi_self[q] q^2 + sum_{q' != q} xi_cross[q, q'] q'^2)

    with all coefficients negative for a Gaussian trap.  ``xi_self`` has
    shape (3,), ``xi_cross`` shape (3, 3) with zero diagonal, in 1/m^2.
    """

    xi_self: np.ndarray
    xi_cross: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi_self", np.asarray(self.xi_self, dtype=float))
        object.__setattr__(self, "xi_cross", np.asarray(self.xi_cross, dtype=float))
        if self.xi_self.shape != (3,) or self.xi_cross.shape != (3, 3):
            raise ValueError("xi_self must be (3,), xi_cross (3, 3)")


def duffing_coefficients(p: Particle, b: Beam) -> DuffingCoefficients:
    """Fourth-order Taylor coefficients of the Gaussian tweezer force.

    Expanding the focal intensity to fourth order gives

        F_x = -k_x x (1 - 2(x^2 + y^2)/w0^2 - 2 z^2/zR^2)
        F_z = -k_z z (1 - 4(x^2 + y^2)/w0^2 - 2 z^2/zR^2)

    (y by symmetry), i.e. self terms -2/w0^2 transverse and -2/zR^2 axial,
    and stronger transverse-into-axial cross terms -4/w0^2.
    """
    if b.geometry != "single_tweezer":
        raise PhysicsValidityError("duffing_coefficients requires a single tweezer")
    w2 = b.waist**2
    zr2 = b.rayleigh_range**2
    xi_self = np.array([-2.0 / w2, -2.0 / w2, -2.0 / zr2])
    xi_cross = np.array(
        [
            [0.0, -2.0 / w2, -2.0 / zr2],
            [-2.0 / w2, 0.0, -2.0 / zr2],
            [-4.0 / w2, -4.0 / w2, 0.0],
        ]
    )
    return DuffingCoefficients(xi_self, xi_cross)


def dipole_radiation_pattern(
    p: Particle, b: Beam, theta, phi, r=(0.0, 0.0, 0.0)
) -> np.ndarray | float:
    """Scattered power per solid angle dP/dOmega [W/sr].

    ``theta`` is measured from the polarization axis; the pattern is the
    dipole sin^2(theta), zero along the polarization and isotropic in the
    plane normal to it, normalized so the full solid-angle integral equals
    the total scattered power C_scat I(r).
    """
    axis = np.asarray(b.polarization_axis)
    if not np.allclose(axis, (1.0, 0.0, 0.0)):
        raise PhysicsValidityError("radiation pattern assumes x-polarized light")
    total = scattering_cross_section(p, b) * float(intensity_field(b).intensity(r))
    theta = np.asarray(theta, dtype=float)
    pattern = 3.0 / (8.0 * math.pi) * np.sin(theta) ** 2
    out = total * pattern * np.ones_like(np.asarray(phi, dtype=float))
    return out if out.ndim else float(out)


def export_intensity_grid(field: IntensityField, xs, ys, zs, path) -> None:
    """Write a CSV grid ``x,y,z,intensity`` for plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "z", "intensity"])
        for x in xs:
            for y in ys:
                for z in zs:
                    i = float(field.intensity((x, y, z)))
                    writer.writerow(
                        [f"{x:.17g}", f"{y:.17g}", f"{z:.17g}", f"{i:.17g}"]
                    )
