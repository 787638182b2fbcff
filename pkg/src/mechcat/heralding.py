"""Heralding probabilities, scheme scalings, and experiment-time estimates.

Two success probabilities are exposed for the cat schedule:

* :func:`herald_probability` -- the closed form
      coherent:      2^{1-N} e^{-2 N eta |alpha|^2} eta^N |alpha|^{2N} B
      single photon: 2^{1-N} eta^N B
  with B = 1 - exp[-N^2 mu^2 (1 + 2 nbar)/4].  This is the value the
  experiment-time estimates are built from.

* :func:`operator_trace_probability` -- the trace of the composed step
  operators (times the per-step efficiency factor), which for a single
  photon equals 2^{1-2N} eta^N B, a factor 2^N below the printed form.

The two disagree by exactly 2^N at matched eta handling; both are reported
and the ratio is part of the audit output.  The Fock oracle reproduces the
operator-trace value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .protocol import ProtocolConfig, run_sequence


class HeraldingError(ValueError):
    pass


@dataclass(frozen=True)
class TimingParams:
    """Run-count and relaxation conventions for the total-time estimate."""

    runs: int = 1000
    omega: float = 0.0        # rad/s
    quality_factor: float = 0.0

    def __post_init__(self):
        if self.runs < 1:
            raise HeraldingError("runs must be >= 1")
        if self.omega <= 0 or self.quality_factor <= 0:
            raise HeraldingError("omega and Q must be positive")

    @property
    def relax_time(self) -> float:
        """T_r = min(1/gamma, 2e3 pi / omega) with gamma = omega/Q."""
        gamma = self.omega / self.quality_factor
        return min(1.0 / gamma, 2.0e3 * math.pi / self.omega)


def _bracket(n_steps: int, mu: float, nbar: float) -> float:
    return 1.0 - math.exp(-(n_steps * mu) ** 2 * (1.0 + 2.0 * nbar) / 4.0)


def herald_probability(config: ProtocolConfig) -> float:
    """Printed closed-form P_N for a uniform cat-schedule click record."""
    n, mu, nbar, eta = (config.steps, config.coupling,
                        config.initial_occupation, config.efficiency)
    bracket = _bracket(n, mu, nbar)
    if config.input_kind == "single_photon":
        return 2.0 ** (1 - n) * eta**n * bracket
    a2 = abs(config.alpha) ** 2
    return (2.0 ** (1 - n) * math.exp(-2.0 * n * eta * a2) * eta**n * a2**n * bracket)


def operator_trace_probability(config: ProtocolConfig, numeric: bool = False) -> float:
    """P_N from the trace of the composed measurement operators.

    For the single-photon cat schedule the product collapses to
    2^{-N}(e^{i N mu X} - 1) and the trace gives 2^{1-2N} B; the per-step
    optical-loss factor eta^N multiplies the lossless trace.  With
    ``numeric`` the trace is taken from the actual composed term algebra
    instead of the closed form.
    """
    n = config.steps
    eta_factor = config.efficiency**n
    if numeric:
        lossless = ProtocolConfig(
            steps=n,
            coupling=config.coupling,
            initial_occupation=config.initial_occupation,
            phases=config.phases,
            click_sequence=config.click_sequence,
            input_kind=config.input_kind,
            alpha=config.alpha,
            efficiency=1.0,
            per_step_thermal=0.0,
        )
        _, weight = run_sequence(lossless)
        return eta_factor * weight
    bracket = _bracket(n, config.coupling, config.initial_occupation)
    if config.input_kind == "single_photon":
        return eta_factor * 2.0 ** (1 - 2 * n) * bracket
    a2 = abs(config.alpha) ** 2
    return (eta_factor * math.exp(-2.0 * n * a2) * a2**n * 2.0 ** (-n) * 2.0 * bracket)


def scheme_scaling(kind: str, n: int) -> float:
    """Optimized heralding-probability scalings of the three schemes."""
    if n < 1:
        raise HeraldingError("n must be >= 1")
    if kind == "coherent_multistep":
        return 2.0 ** (1 - 2 * n) * math.exp(-n)
    if kind == "photon_multistep":
        return 2.0 ** (1 - n)
    if kind == "noon_multiport":
        return 2.0 ** (1 - n) * math.exp(-n)
    raise HeraldingError(f"unknown scheme kind {kind!r}")


def noon_probability(n_port: int, alpha: complex, mu: float, nbar: float,
                     phi: float) -> float:
    """Heralding probability of the NOON-projection multiport scheme."""
    if n_port < 1:
        raise HeraldingError("n_port must be >= 1")
    a2 = abs(alpha) ** 2
    bracket = 1.0 - (-1.0) ** n_port * math.exp(
        -(n_port**2) * mu**2 * (1.0 + 2.0 * nbar) / 4.0
    ) * math.cos(n_port * phi)
    return 2.0 * float(n_port) ** (-n_port) * math.exp(-2.0 * a2) * a2**n_port * bracket


def total_time(p_n: float, n_steps: int, timing: TimingParams) -> float:
    """T_tot = runs (2 pi N / omega + T_r) / P_N, seconds."""
    if p_n <= 0.0:
        raise HeraldingError("heralding probability must be positive")
    per_run = 2.0 * math.pi * n_steps / timing.omega + timing.relax_time
    return timing.runs * per_run / p_n
