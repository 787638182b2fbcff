"""Multistep pulsed measurement protocol.

Each step sends a pulse (single photon or weak coherent state) through the
interferometer; an (m, n) click outcome applies the non-unitary operator

    single photon, (1,0):  (e^{i mu X} + e^{i phi}) / 2
    single photon, (0,1):  (e^{i mu X} - e^{i phi}) / 2
    coherent sqrt(2)*alpha, (m,n):
        e^{-|alpha|^2} / sqrt(m! n!) * (alpha/sqrt(2))^{m+n}
        * (e^{i mu X} + e^{i phi})^m (e^{i mu X} - e^{i phi})^n

to the mechanics.  With phases chosen as the N-th roots of unity the cross
terms of the N-step product cancel, leaving a superposition of the initial
state at P = 0 and P = N*mu: a Schrodinger cat grown along the momentum
axis.  Phases are stored as exact rational fractions of a turn whenever they
come from the named schedules and only converted to radians at operator
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .phasespace import PhaseSpaceState, WignerTerm, merge_terms, vacuum

TWO_PI = 2.0 * math.pi


class ProtocolError(ValueError):
    pass


PhaseLike = float | Fraction


def phase_radians(phase: PhaseLike) -> float:
    """Realize a stored phase in radians (Fractions are fractions of a turn)."""
    if isinstance(phase, Fraction):
        return TWO_PI * float(phase)
    return float(phase)


def cat_phase_schedule(n_steps: int, branch: str) -> tuple[Fraction, ...]:
    """Phase schedule that collapses the N-step product onto a cat state.

    branch "click01": phi_j = 2*pi*j/N; branch "click10": phi_j = 2*pi*j/N + pi.
    Returned as exact fractions of a turn, reduced mod 1.
    """
    if n_steps < 1:
        raise ProtocolError("n_steps must be >= 1")
    if branch not in ("click01", "click10"):
        raise ProtocolError(f"unknown branch {branch!r}")
    offset = Fraction(1, 2) if branch == "click10" else Fraction(0)
    return tuple((Fraction(j, n_steps) + offset) % 1 for j in range(1, n_steps + 1))


@dataclass(frozen=True)
class OperatorDescriptor:
    """Operator ``sum_k coeff_k * exp(i k mu X)`` with integer exponents k."""

    coefficients: tuple[tuple[complex, int], ...]
    mu: float

    def __post_init__(self):
        if not any(abs(c) > 0 for c, _ in self.coefficients):
            raise ProtocolError("descriptor needs at least one nonzero coefficient")

    @classmethod
    def from_dict(cls, coeffs: dict[int, complex], mu: float) -> "OperatorDescriptor":
        items = tuple(
            (complex(coeffs[k]), int(k)) for k in sorted(coeffs) if abs(coeffs[k]) > 0
        )
        return cls(items, float(mu))

    def compose(self, other: "OperatorDescriptor") -> "OperatorDescriptor":
        """Operator product (polynomial multiplication in e^{i mu X})."""
        if self.mu != other.mu:
            raise ProtocolError("cannot compose descriptors with different mu")
        out: dict[int, complex] = {}
        for c1, k1 in self.coefficients:
            for c2, k2 in other.coefficients:
                out[k1 + k2] = out.get(k1 + k2, 0.0) + c1 * c2
        return OperatorDescriptor.from_dict(out, self.mu)

    def scalar_norm(self) -> float:
        return math.fsum(abs(c) ** 2 for c, _ in self.coefficients)


def identity_descriptor(mu: float) -> OperatorDescriptor:
    return OperatorDescriptor(((1.0 + 0.0j, 0),), mu)


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything that defines one protocol run."""

    steps: int
    coupling: float                      # mu, zero-point momentum units
    initial_occupation: float = 0.0      # nbar of the starting thermal state
    phases: tuple[PhaseLike, ...] = ()
    click_sequence: tuple[tuple[int, int], ...] = ()
    input_kind: str = "single_photon"    # "single_photon" | "coherent"
    alpha: complex = 0.0
    efficiency: float = 1.0
    per_step_thermal: float = 0.0        # nbar_th added between steps

    def __post_init__(self):
        if self.steps < 1:
            raise ProtocolError("steps must be >= 1")
        if self.coupling <= 0:
            raise ProtocolError("coupling mu must be positive")
        if self.initial_occupation < 0:
            raise ProtocolError("initial_occupation must be nonnegative")
        if self.per_step_thermal < 0:
            raise ProtocolError("per_step_thermal must be nonnegative")
        if not (0.0 < self.efficiency <= 1.0):
            raise ProtocolError("efficiency must lie in (0, 1]")
        if self.input_kind not in ("single_photon", "coherent"):
            raise ProtocolError(f"unknown input_kind {self.input_kind!r}")
        if len(self.phases) != self.steps:
            raise ProtocolError("need one phase per step")
        if len(self.click_sequence) != self.steps:
            raise ProtocolError("need one click outcome per step")
        for m, n in self.click_sequence:
            if m < 0 or n < 0:
                raise ProtocolError("click counts must be nonnegative")
            if self.input_kind == "single_photon" and (m, n) not in ((0, 1), (1, 0)):
                raise ProtocolError(
                    "single-photon input only heralds (0,1) or (1,0) outcomes"
                )

    @classmethod
    def cat(cls, steps: int, coupling: float, initial_occupation: float = 0.0,
            branch: str = "click01", input_kind: str = "single_photon",
            alpha: complex = 0.0, efficiency: float = 1.0,
            per_step_thermal: float = 0.0) -> "ProtocolConfig":
        """Named preset: cat-producing schedule for either click branch."""
        click = (0, 1) if branch == "click01" else (1, 0)
        return cls(
            steps=steps,
            coupling=coupling,
            initial_occupation=initial_occupation,
            phases=cat_phase_schedule(steps, branch),
            click_sequence=tuple(click for _ in range(steps)),
            input_kind=input_kind,
            alpha=alpha,
            efficiency=efficiency,
            per_step_thermal=per_step_thermal,
        )


def measurement_operator(config: ProtocolConfig, step: int) -> OperatorDescriptor:
    """Descriptor for the operator heralded at step ``step`` (1-based)."""
    if not (1 <= step <= config.steps):
        raise ProtocolError(f"step {step} outside 1..{config.steps}")
    phi = phase_radians(config.phases[step - 1])
    m, n = config.click_sequence[step - 1]
    eiphi = np.exp(1j * phi)
    if config.input_kind == "single_photon":
        if (m, n) == (1, 0):
            return OperatorDescriptor.from_dict({1: 0.5, 0: 0.5 * eiphi}, config.coupling)
        if (m, n) == (0, 1):
            return OperatorDescriptor.from_dict({1: 0.5, 0: -0.5 * eiphi}, config.coupling)
        raise ProtocolError(f"outcome {(m, n)} invalid for single-photon input")
    alpha = complex(config.alpha)
    pref = (
        np.exp(-abs(alpha) ** 2)
        / math.sqrt(factorial(m) * factorial(n))
        * (alpha / math.sqrt(2.0)) ** (m + n)
    )
    coeffs: dict[int, complex] = {}
    for a in range(m + 1):
        for b in range(n + 1):
            k = a + b
            c = comb(m, a) * comb(n, b) * (-1) ** (n - b) * eiphi ** (m - a + n - b)
            coeffs[k] = coeffs.get(k, 0.0) + pref * c
    return OperatorDescriptor.from_dict(coeffs, config.coupling)


def apply_step(state: PhaseSpaceState, op: OperatorDescriptor) -> PhaseSpaceState:
    """Unnormalized image of rho -> M rho M^dagger in the Wigner picture.

    The trace of the output is the conditional probability weight of the
    click outcome the descriptor encodes.
    """
    parts = []
    for ck, k in op.coefficients:
        for cl, l in op.coefficients:
            shifted = state.one_sided_displacement(k * op.mu, l * op.mu)
            parts.append(shifted.scaled(ck * np.conj(cl)))
    combined = parts[0]
    for p in parts[1:]:
        combined = combined + p
    return merge_terms(combined)


def build_scs(n_steps: int, mu: float, nbar: float = 0.0) -> PhaseSpaceState:
    """Closed-form cat state: populations at P = 0 and P = N*mu, a conjugate
    fringe pair at P = N*mu/2 with wavevectors +-N*mu, all with s = 1 + 2*nbar.
    """
    nmu = n_steps * mu
    if nmu <= 0:
        raise ProtocolError("N*mu must be positive")
    s = 1.0 + 2.0 * nbar
    norm = 0.5 / (1.0 - math.exp(-(nmu**2) * s / 4.0))
    amp = norm / (math.pi * s)
    terms = [
        WignerTerm(amp, 0.0, 0.0, s, 0.0, 0.0),
        WignerTerm(amp, 0.0, nmu, s, 0.0, 0.0),
        WignerTerm(-amp, 0.0, nmu / 2.0, s, nmu, 0.0),
        WignerTerm(-amp, 0.0, nmu / 2.0, s, -nmu, 0.0),
    ]
    return PhaseSpaceState(terms, normalized=True)


def run_sequence(config: ProtocolConfig) -> tuple[PhaseSpaceState, float]:
    """Compose all N steps (with the thermal channel interleaved when
    per_step_thermal > 0) and return (normalized state, success weight).

    The success weight is the trace of the unnormalized output, i.e. the
    operator-trace probability of the click record (before any per-step
    detection-efficiency factor).
    """
    from .decoherence import thermal_channel

    state = vacuum(config.initial_occupation)
    for j in range(1, config.steps + 1):
        op = measurement_operator(config, j)
        state = apply_step(state, op)
        if config.per_step_thermal > 0.0:
            state = thermal_channel(state, config.per_step_thermal)
    weight = state.integral()
    if weight <= 0.0:
        raise ProtocolError("click sequence has zero probability; state fully cancelled")
    return state.normalize(), weight


def parity_class(n_steps: int, branch: str, plus_pi: bool | None = None) -> str:
    """Classify the heralded cat as "even_cat" or "odd_cat".

    ``plus_pi`` selects the +pi phase schedule; by default the plain
    schedule 2*pi*j/N is used.  The classification composes the step
    operators symbolically and inspects the sign of the surviving identity
    coefficient relative to the N-fold displacement.
    """
    if branch not in ("click01", "click10"):
        raise ProtocolError(f"unknown branch {branch!r}")
    if plus_pi is None:
        plus_pi = False
    total = identity_descriptor(1.0)
    for j in range(1, n_steps + 1):
        phi = TWO_PI * j / n_steps + (math.pi if plus_pi else 0.0)
        sign = 1.0 if branch == "click10" else -1.0
        step = OperatorDescriptor.from_dict({1: 1.0, 0: sign * np.exp(1j * phi)}, 1.0)
        total = total.compose(step)
    coeffs = {k: c for c, k in total.coefficients if abs(c) > 1e-9}
    if set(coeffs) != {0, n_steps}:
        raise ProtocolError("phase schedule does not collapse to a cat state")
    ratio = coeffs[0] / coeffs[n_steps]
    return "odd_cat" if ratio.real < 0 else "even_cat"
