"""Thermal decoherence between protocol steps.

The environment acts once per mechanical period as a Gaussian displacement
average (semigroup channel): in phase space this is convolution with an
isotropic Gaussian of variance nbar_th per quadrature.  On a Gaussian-fringe
term with parameters (w, c, s, k) the convolution is exact:

    s  -> s' = s + 2*nbar_th
    k  -> k * s/s'
    w  -> w * (s/s') * exp(-|k|^2 * nbar_th * s / (2 s'))
             * exp(+i (k . c) * 2*nbar_th / s')

which preserves the trace term by term.  Interleaving this channel with the
measurement steps reproduces the closed-form decohered Wigner function
implemented by :func:`decohered_protocol_state`, whose complex Gaussian
shifts are folded into real-centre terms at construction time via
(X + i a)^2 = X^2 + 2 i a X - a^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .constants import BOLTZMANN_K, HBAR
from .phasespace import PhaseSpaceState, WignerTerm, merge_terms
from .protocol import cat_phase_schedule, phase_radians

FEASIBILITY_MARGIN = 10.0


class DecoherenceError(ValueError):
    pass


@dataclass(frozen=True)
class ThermalEnvironment:
    """Mechanical bath description: occupation, quality factor, frequency."""

    bath_occupation: float
    quality_factor: float
    mech_frequency: float  # omega, rad/s

    def __post_init__(self):
        if self.bath_occupation < 0:
            raise DecoherenceError("bath occupation must be nonnegative")
        if self.quality_factor <= 0 or self.mech_frequency <= 0:
            raise DecoherenceError("Q and omega must be positive")

    @property
    def intrinsic_decay(self) -> float:
        """gamma = omega / Q, 1/s."""
        return self.mech_frequency / self.quality_factor

    @property
    def decoherence_rate(self) -> float:
        """Gamma = (2 nbar_b + 1) gamma, 1/s."""
        return (2.0 * self.bath_occupation + 1.0) * self.intrinsic_decay


def bath_occupancy(temperature: float, omega: float) -> float:
    """Bose-Einstein occupation of the bath mode at the given temperature."""
    if temperature <= 0 or omega <= 0:
        raise DecoherenceError("temperature and omega must be positive")
    return 1.0 / math.expm1(HBAR * omega / (BOLTZMANN_K * temperature))


def phonons_per_period(env: ThermalEnvironment) -> float:
    """Mean phonons added to the mechanics during one period:
    nbar_th = pi (2 nbar_b + 1) / Q."""
    return math.pi * (2.0 * env.bath_occupation + 1.0) / env.quality_factor


def feasibility_check(env: ThermalEnvironment, n_steps: int) -> tuple[bool, float]:
    """Margin of the slow-decoherence condition Q/(2 nbar_b + 1) >> 2 pi N.

    Returns (margin >= 10, margin)."""
    if n_steps < 1:
        raise DecoherenceError("n_steps must be >= 1")
    margin = env.quality_factor / (2.0 * env.bath_occupation + 1.0) / (2.0 * math.pi * n_steps)
    return margin >= FEASIBILITY_MARGIN, margin


def thermal_channel(state: PhaseSpaceState, nbar_th: float) -> PhaseSpaceState:
    """Add nbar_th phonons of isotropic phase-space noise (exact term algebra)."""
    if nbar_th < 0:
        raise DecoherenceError("nbar_th must be nonnegative")
    if nbar_th == 0.0:
        return state
    out = []
    for t in state.terms:
        s2 = t.s + 2.0 * nbar_th
        ratio = t.s / s2
        k2 = t.kx**2 + t.kp**2
        kc = t.kx * t.x0 + t.kp * t.p0
        w = (
            t.weight
            * ratio
            * np.exp(-k2 * nbar_th * t.s / (2.0 * s2) + 1j * kc * 2.0 * nbar_th / s2)
        )
        out.append(WignerTerm(w, t.x0, t.p0, s2, t.kx * ratio, t.kp * ratio))
    return PhaseSpaceState(out, normalized=state.normalized)


def decohered_protocol_state(
    n_steps: int,
    mu: float,
    nbar: float,
    nbar_th: float,
    phases: Sequence | None = None,
) -> PhaseSpaceState:
    """Closed-form state after N steps with thermalization between steps.

    Sums over the 4^N operator expansion indices l_i, m_i in {0, 1} with
    running kicks xi_i = mu * sum_{j<=i}(l_j - m_j); every term has the
    common width s = 1 + 2*nbar + 2*N*nbar_th.  For nbar_th = 0 this reduces
    exactly to the undamped cat state of :func:`build_scs`.
    """
    if n_steps < 1:
        raise DecoherenceError("n_steps must be >= 1")
    if phases is None:
        phases = cat_phase_schedule(n_steps, "click01")
    phi = np.array([phase_radians(p) for p in phases])
    if phi.shape != (n_steps,):
        raise DecoherenceError("need one phase per step")
    s = 1.0 + 2.0 * nbar + 2.0 * n_steps * nbar_th

    lm = np.array(list(product((0, 1), repeat=2 * n_steps)))
    l = lm[:, :n_steps]
    m = lm[:, n_steps:]
    d = l - m
    xi = mu * np.cumsum(d, axis=1)
    xi_sum = xi.sum(axis=1)
    xi_sq = (xi**2).sum(axis=1)
    d_tot = d.sum(axis=1)
    t_tot = (l + m).sum(axis=1)

    a = nbar_th * xi_sum
    weights = np.exp(
        -1j * (d @ (phi + math.pi))
        - 0.5 * nbar_th * xi_sq
        + (a**2) / s
    )
    kx = mu * d_tot - 2.0 * a / s
    p0 = 0.5 * mu * t_tot

    terms = [
        WignerTerm(complex(weights[i]), 0.0, float(p0[i]), s, float(kx[i]), 0.0)
        for i in range(len(weights))
    ]
    state = merge_terms(PhaseSpaceState(terms))
    return state.normalize()
