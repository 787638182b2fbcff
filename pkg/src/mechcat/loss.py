"""Optical loss and detector inefficiency.

Loss beam splitters of intensity transmission eta commute through the cat
protocol in two distinct ways:

* single-photon input: a lost photon always kills the heralding click, so
  the heralded state is untouched and each step just gains a probability
  factor eta;
* coherent input: photons lost from the cavity arm carry momentum kicks, so
  the heralded state becomes a statistical mixture of cat states displaced
  by K*mu along momentum, where the total lost-photon number K is Poisson
  with mean N (1 - eta) |alpha|^2.

The mixture weights depend only on the total K (the per-step product
``prod |C_{k_i}|^2`` collapses by the multinomial theorem), which is checked
against the explicit N-fold sum in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phasespace import PhaseSpaceState
from .protocol import (
    OperatorDescriptor,
    ProtocolConfig,
    build_scs,
    measurement_operator,
)

POISSON_TAIL_EPS = 1e-10


class LossError(ValueError):
    pass


@dataclass(frozen=True)
class LossModel:
    """Detection efficiency plus the coherent-input amplitude it acts on."""

    efficiency: float
    alpha: complex = 0.0
    truncation_tail: float = POISSON_TAIL_EPS

    def __post_init__(self):
        if not (0.0 < self.efficiency <= 1.0):
            raise LossError("efficiency must lie in (0, 1]")
        if not (0.0 < self.truncation_tail < 1e-6):
            raise LossError("truncation tail must be positive and below 1e-6")

    @property
    def loss_photons(self) -> float:
        """(1 - eta) |alpha|^2, the per-step mean lost-photon number."""
        return (1.0 - self.efficiency) * abs(self.alpha) ** 2


def effective_coherent_operator(eta: float, alpha: complex, outcome: tuple[int, int],
                                phi, mu: float) -> OperatorDescriptor:
    """Small-loss effective operator: the ideal operator with alpha -> sqrt(eta) alpha."""
    m, n = outcome
    cfg = ProtocolConfig(
        steps=1,
        coupling=mu,
        phases=(phi,),
        click_sequence=((m, n),),
        input_kind="coherent",
        alpha=math.sqrt(eta) * complex(alpha),
    )
    return measurement_operator(cfg, 1)


def single_photon_loss_effect(eta: float) -> float:
    """Per-step heralding factor for single-photon input; the state is untouched."""
    if not (0.0 <= eta <= 1.0):
        raise LossError("eta must lie in [0, 1]")
    return eta


def poisson_mixture_weights(mean: float, tail: float = POISSON_TAIL_EPS):
    """Poisson weights truncated once the remaining tail mass is below ``tail``."""
    if mean < 0:
        raise LossError("mean must be nonnegative")
    weights = []
    k = 0
    w = math.exp(-mean)
    cum = 0.0
    while True:
        weights.append(w)
        cum += w
        if 1.0 - cum < tail:
            break
        k += 1
        w *= mean / k
        if k > 10000:
            raise LossError("Poisson truncation did not converge")
    return np.array(weights)


def loss_mixture_state(n_steps: int, mu: float, nbar: float,
                       model: LossModel) -> PhaseSpaceState:
    """Coherent-input heralded state under loss: a convex mixture of cat
    states shifted by K*mu along momentum with Poisson(K; N(1-eta)|alpha|^2)
    weights, renormalized over the truncated support."""
    base = build_scs(n_steps, mu, nbar)
    mean = n_steps * model.loss_photons
    weights = poisson_mixture_weights(mean, model.truncation_tail)
    weights = weights / weights.sum()
    terms = []
    for k, w in enumerate(weights):
        shifted = base.displaced(0.0, k * mu).scaled(float(w))
        terms.extend(shifted.terms)
    return PhaseSpaceState(terms, normalized=True)


def lossy_herald_probability(config: ProtocolConfig, model: LossModel) -> float:
    """Coherent-input P_N including the lost-photon environment sum.

    The per-step sums over lost-photon counts multiply the closed form by
    sum_K (N nu)^K / K! with nu = (1 - eta)|alpha|^2 (the N-fold sum
    collapses onto the total K by the multinomial identity); the sum is
    truncated at the configured tail.  For nu -> 0 this converges to the
    closed form.

    Note: the explicit four-mode simulation (lossy_step_fock) shows the true
    success probability is the eta-dependent closed form itself, with no
    extra environment factor; the environment sums are already absorbed in
    its exp(-2 N eta |alpha|^2) prefactor.  This function evaluates the
    summed expression as published, which exceeds the simulated value by
    exp(N nu).
    """
    if config.input_kind != "coherent":
        raise LossError("lossy herald probability applies to coherent input")
    from .heralding import herald_probability

    n = config.steps
    base = herald_probability(config)
    nu = model.loss_photons
    total = 0.0
    k = 0
    term = 1.0
    while True:
        total += term
        k += 1
        term *= n * nu / k
        if term < model.truncation_tail * max(total, 1.0):
            total += term
            break
    return base * total


def mixture_weights_direct(n_steps: int, per_step_mean: float, k_max: int) -> np.ndarray:
    """Distribution of the total lost-photon number by explicit convolution
    of the N per-step count distributions (validation path for the
    single-Poisson collapse)."""
    step = np.array([per_step_mean**k / math.factorial(k) for k in range(k_max + 1)])
    step = step * math.exp(-per_step_mean)
    total = np.array([1.0])
    for _ in range(n_steps):
        total = np.convolve(total, step)
    return total[: k_max + 1]
