"""Physical constants (CODATA, SI) frozen at import time.

All quantities in the package are strict SI; angular frequencies are rad/s
and are converted to ordinary frequencies only through the helpers below.
"""

from dataclasses import dataclass

from scipy import constants as _codata

TWO_PI = 2.0 * _codata.pi


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = _codata.c
    k_B: float = _codata.k
    hbar: float = _codata.hbar
    eps0: float = _codata.epsilon_0
    mu0: float = _codata.mu_0


CONSTANTS = PhysicalConstants()

C_LIGHT = CONSTANTS.c
K_B = CONSTANTS.k_B
HBAR = CONSTANTS.hbar
EPS_0 = CONSTANTS.eps0
MU_0 = CONSTANTS.mu0

# standard gravity, exact by definition (used only for g-unit conversion)
G_STANDARD = 9.80665

# torr -> pascal (exactly 101325/760)
PA_PER_TORR = 101325.0 / 760.0


def omega_to_hz(omega: float) -> float:
    """rad/s -> Hz."""
    return omega / TWO_PI


def hz_to_omega(freq: float) -> float:
    """Hz -> rad/s."""
    return freq * TWO_PI
