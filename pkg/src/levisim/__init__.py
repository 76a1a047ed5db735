"""levisim: optically levitated nanoparticle simulation and sensing toolkit.

Layers, bottom to top: :mod:`core` (particles, beams, gas), :mod:`optics`
(fields, forces, trap frequencies), :mod:`noise` (damping and heating
rates), :mod:`dynamics` (stochastic integration), :mod:`feedback`
(controllers), :mod:`detection` (readout and spectral estimation),
:mod:`sensing` (sensitivity floors), and :mod:`cli` (config + pipeline).
"""

__version__ = "0.1.0"

from .constants import CONSTANTS, PhysicalConstants, hz_to_omega, omega_to_hz
from .core import (
    Beam,
    CavityParams,
    GasEnvironment,
    Particle,
    cm_factor,
    mean_free_path,
    particle_mass,
    polarizability,
)
from .dynamics import EquationOfMotion, SinusoidalDrive, Trajectory, ensemble, simulate
from .detection import ReadoutModel, Spectrum, lorentzian_fit, welch_psd
from .feedback import Controller
from .noise import NoiseBudget, build_noise_budget, steady_state_phonons
from .optics import TrapFrequencies, trap_frequencies

__all__ = [
    "Beam",
    "CavityParams",
    "CONSTANTS",
    "Controller",
    "EquationOfMotion",
    "GasEnvironment",
    "NoiseBudget",
    "Particle",
    "PhysicalConstants",
    "ReadoutModel",
    "SinusoidalDrive",
    "Spectrum",
    "Trajectory",
    "TrapFrequencies",
    "build_noise_budget",
    "cm_factor",
    "ensemble",
    "hz_to_omega",
    "lorentzian_fit",
    "mean_free_path",
    "omega_to_hz",
    "particle_mass",
    "polarizability",
    "simulate",
    "steady_state_phonons",
    "trap_frequencies",
    "welch_psd",
]
