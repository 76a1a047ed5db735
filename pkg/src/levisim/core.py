"""Domain types and derived scalar properties.

Particles, beams, and gas environments are immutable value objects; every
derived quantity (mass, polarizability, mean free path, ...) is a pure
function of the constructor fields.  Construction validates all
invariants, so downstream code never re-checks them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import C_LIGHT, EPS_0, K_B, TWO_PI
from .errors import ShapeApproximationWarning

SPHERE = "sphere"
DISC = "disc"

# default gas: dry air near 300 K (hard-sphere kinetic-theory parameters)
AIR_VISCOSITY = 1.85e-5          # Pa s
AIR_MOLECULAR_MASS = 4.8e-26     # kg
AIR_MOLECULAR_DIAMETER = 3.7e-10  # m

# default particle material: bulk fused silica; Stober-process spheres can
# deviate by ~20%, so density is always an explicit field
SILICA_DENSITY = 2200.0          # kg/m^3
SILICA_INDEX = 1.45


@dataclass(frozen=True)
class Particle:
    """Levitated dielectric particle.

    ``shape`` is ``"sphere"`` or ``"disc"``; a disc is a flat cylinder of
    the given ``radius`` and ``thickness`` trapped face-on.
    ``surface_temperature`` is the emission temperature of the particle
    surface; ``None`` means it equals the gas temperature.
    """

    radius: float
    density: float
    refractive_index: float
    shape: str = SPHERE
    thickness: float | None = None
    surface_temperature: float | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if not self.density > 0:
            raise ValueError(f"density must be > 0, got {self.density}")
        if not self.refractive_index >= 1.0:
            raise ValueError(
                f"refractive_index must be >= 1, got {self.refractive_index}"
            )
        if self.shape == SPHERE:
            if self.thickness is not None:
                raise ValueError("thickness applies to disc particles only")
        elif self.shape == DISC:
            if self.thickness is None or not 0 < self.thickness <= self.radius:
                raise ValueError(
                    f"disc thickness must satisfy 0 < t <= radius, got {self.thickness}"
                )
        else:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.surface_temperature is not None and self.surface_temperature <= 0:
            raise ValueError("surface_temperature must be > 0 when given")

    @property
    def volume(self) -> float:
        if self.shape == SPHERE:
            return 4.0 / 3.0 * math.pi * self.radius**3
        return math.pi * self.radius**2 * self.thickness

    @property
    def mass(self) -> float:
        return self.density * self.volume

    @property
    def moment_of_inertia(self) -> float:
        """About an axis through the center (symmetry axis for a disc)."""
        if self.shape == SPHERE:
            return 0.4 * self.mass * self.radius**2
        return 0.5 * self.mass * self.radius**2

    @property
    def permittivity_ratio(self) -> float:
        """Relative dielectric constant epsilon/eps0 = n^2 (lossless)."""
        return self.refractive_index**2


@dataclass(frozen=True)
class CavityParams:
    """Standing-wave cavity geometry used by the strain calculators."""

    length: float             # m
    finesse_disc: float       # dimensionless, disc-scatter-limited finesse
    mode_volume: float        # m^3
    linewidth: float          # rad/s

    def __post_init__(self):
        for name in ("length", "finesse_disc", "mode_volume", "linewidth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"cavity {name} must be > 0")


@dataclass(frozen=True)
class Beam:
    """Trapping laser beam.

    ``geometry`` is ``"single_tweezer"`` or ``"standing_wave"``.  A standing
    wave is the ideal retroreflection of the same Gaussian beam; ``contrast``
    in [0, 1] is the amplitude ratio of the counterpropagating field (1 =
    lossless retroreflection).  ``asymmetry_xy`` multiplies the x trap
    frequency to model the polarization-induced splitting of the transverse
    degeneracy; the default keeps x and y degenerate.
    """

    power: float
    waist: float
    wavelength: float
    geometry: str = "single_tweezer"
    polarization_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    contrast: float = 1.0
    asymmetry_xy: float = 1.0
    cavity: CavityParams | None = None

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError(f"power must be > 0, got {self.power}")
        if not self.waist > 0:
            raise ValueError(f"waist must be > 0, got {self.waist}")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be > 0, got {self.wavelength}")
        if self.geometry not in ("single_tweezer", "standing_wave"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError("contrast must lie in [0, 1]")
        if not self.asymmetry_xy > 0:
            raise ValueError("asymmetry_xy must be > 0")
        axis = np.asarray(self.polarization_axis, dtype=float)
        norm = float(np.linalg.norm(axis))
        if not norm > 0:
            raise ValueError("polarization_axis must be a nonzero vector")
        object.__setattr__(self, "polarization_axis", tuple(axis / norm))

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist**2 / self.wavelength

    @property
    def peak_intensity(self) -> float:
        """On-axis focal intensity I0 = 2P / (pi w0^2)."""
        return 2.0 * self.power / (math.pi * self.waist**2)

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.wavelength

    @property
    def angular_frequency(self) -> float:
        return TWO_PI * C_LIGHT / self.wavelength


@dataclass(frozen=True)
class GasEnvironment:
    """Residual gas around the trap.  Defaults describe air near 300 K."""

    pressure: float
    temperature: float = 300.0
    viscosity: float = AIR_VISCOSITY
    molecular_mass: float = AIR_MOLECULAR_MASS
    molecular_diameter: float = AIR_MOLECULAR_DIAMETER

    def __post_init__(self):
        if self.pressure < 0:
            raise ValueError(f"pressure must be >= 0, got {self.pressure}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if not self.viscosity > 0:
            raise ValueError(f"viscosity must be > 0, got {self.viscosity}")
        if not self.molecular_mass > 0:
            raise ValueError("molecular_mass must be > 0")
        if not self.molecular_diameter > 0:
            raise ValueError("molecular_diameter must be > 0")

    @property
    def mean_speed(self) -> float:
        """Mean molecular speed sqrt(8 kB T / (pi m_gas))."""
        return math.sqrt(8.0 * K_B * self.temperature / (math.pi * self.molecular_mass))

    def knudsen(self, radius: float) -> float:
        """Knudsen number Kn = l / R for a particle of the given radius."""
        return mean_free_path(self) / radius


def particle_mass(p: Particle) -> float:
    """Particle mass in kg."""
    return p.mass


def cm_factor(p: Particle) -> float:
    """Clausius-Mossotti dielectric contrast (n^2 - 1) / (n^2 + 2).

    Lies in [0, 1) for real n >= 1 and increases monotonically with n.
    """
    n2 = p.refractive_index**2
    return (n2 - 1.0) / (n2 + 2.0)


def polarizability(p: Particle, beam: Beam | None = None) -> float:
    """Quasi-static polarizability alpha = 3 V eps0 (n^2-1)/(n^2+2) [C m^2/V].

    Exact for a sphere in the dipole limit.  A disc is approximated by the
    sphere of equal volume (flagged with ShapeApproximationWarning).  When a
    beam is supplied, the dipole-limit validity of the size parameter is
    checked and a RayleighValidityWarning/PhysicsValidityError may follow.
    """
    if p.shape != SPHERE:
        warnings.warn(
            "non-spherical particle: polarizability uses the equal-volume sphere",
            ShapeApproximationWarning,
            stacklevel=2,
        )
    if beam is not None:
        # local import: optics depends on core, not the other way around
        from .optics import check_rayleigh_validity

        check_rayleigh_validity(p, beam, stacklevel=3)
    return 3.0 * p.volume * EPS_0 * cm_factor(p)


def mean_free_path(g: GasEnvironment) -> float:
    """Hard-sphere mean free path kB T / (sqrt(2) pi d^2 P); inf at P = 0."""
    if g.pressure == 0.0:
        return math.inf
    return K_B * g.temperature / (
        math.sqrt(2.0) * math.pi * g.molecular_diameter**2 * g.pressure
    )


def dipole_potential_depth(p: Particle, beam: Beam) -> float:
    """Optical potential depth alpha I0 / (2 eps0 c) at the focus [J]."""
    return polarizability(p) * beam.peak_intensity / (2.0 * EPS_0 * C_LIGHT)
