"""Feedback controllers and closed-form cooling predictions.

The controller acts on the *measured* motion: true position plus additive
white position noise of the configured PSD, with the velocity estimate
taken from the documented two-point backward difference of successive
measurements.  Gains are defined so that a cold-damping gain C_l is itself
a damping rate in 1/s (the applied force is -M C_l qdot_meas); the
parametric gain C_nl has units 1/(m^2 s) and multiplies q qdot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import NoiseBudget, steady_state_phonons, with_feedback_damping

KIND_NONE = "none"
KIND_COLD_DAMPING = "cold_damping"
KIND_PARAMETRIC = "parametric"
KINDS = (KIND_NONE, KIND_COLD_DAMPING, KIND_PARAMETRIC)


@dataclass(frozen=True)
class Controller:
    kind: str = KIND_NONE
    gain: float = 0.0
    measurement_delay: float = 0.0       # s
    measurement_noise_psd: float = 0.0   # m^2/Hz, two-sided angular
    force_saturation: float = math.inf   # N

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.gain < 0:
            raise ValueError("gain must be >= 0")
        if self.measurement_delay < 0:
            raise ValueError("measurement_delay must be >= 0")
        if self.measurement_noise_psd < 0:
            raise ValueError("measurement_noise_psd must be >= 0")
        if not self.force_saturation > 0:
            raise ValueError("force_saturation must be > 0")

    @property
    def damping_gain(self) -> float:
        """Cold-damping gain as a rate (0 for other kinds)."""
        return self.gain if self.kind == KIND_COLD_DAMPING else 0.0


def feedback_force(c: Controller, q_meas, qdot_meas, mass: float):
    """Controller force for a measured state [N]; clamped at saturation."""
    if c.kind == KIND_NONE:
        return np.zeros_like(np.asarray(q_meas, dtype=float))
    if c.kind == KIND_COLD_DAMPING:
        force = -mass * c.gain * np.asarray(qdot_meas, dtype=float)
    else:
        force = -mass * c.gain * np.asarray(q_meas, dtype=float) * np.asarray(
            qdot_meas, dtype=float
        )
    return np.clip(force, -c.force_saturation, c.force_saturation)


def predicted_temperature_cold_damping(
    t_gas: float, gamma_g: float, gamma_fb: float
) -> float:
    """Noise-free cold-damping steady state T_gas gamma_g/(gamma_g+gamma_fb)."""
    if not gamma_g > 0:
        raise ValueError("gamma_g must be > 0")
    if gamma_fb < 0:
        raise ValueError("gamma_fb must be >= 0")
    return t_gas * gamma_g / (gamma_g + gamma_fb)


def phonon_budget_with_feedback(nb: NoiseBudget, c: Controller) -> np.ndarray:
    """Steady-state phonons with the controller's damping gain filled in."""
    if c.kind != KIND_COLD_DAMPING:
        raise ValueError("phonon budget applies to cold-damping controllers")
    return steady_state_phonons(with_feedback_damping(nb, c.gain))
