"""Physical constants (CODATA 2018 / SI exact values)."""

import math

# Planck constant is exact in the 2019 SI; hbar follows from it.
PLANCK_H = 6.62607015e-34        # J s, exact
HBAR = PLANCK_H / (2.0 * math.pi)  # J s
BOLTZMANN_K = 1.380649e-23       # J / K, exact

CONSTANTS_RECORD = {
    "h": PLANCK_H,
    "hbar": HBAR,
    "k_B": BOLTZMANN_K,
    "source": "CODATA 2018 (SI exact)",
}
