"""Dimensionless optomechanical coupling from the optical pulse envelope.

For a single-sided cavity driven outside the resolved-sideband regime, the
momentum transferred per intracavity photon is

    mu = sqrt(8) g0 kappa  int dt e^{-2 kappa t} |A(t)|^2,
    A(t) = int_{-inf}^{t} dt' e^{kappa t'} f(t'),

where f is the normalized pulse envelope.  The inner integral is a running
cumulative, so the whole computation is O(n) on a time grid; the grid is
refined until the result is stable and the unbounded tail (where A is
constant) is added in closed form.  For the cavity-matched envelope
f(t) = sqrt(kappa) exp(-kappa |t|) the result is mu = 3 g0 / (sqrt(2) kappa).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, simpson


class PulseError(ValueError):
    pass


@dataclass(frozen=True)
class Envelope:
    """Normalized pulse envelope in dimensionless time tau = kappa * t.

    ``profile`` maps tau to the envelope value scaled so that
    int |profile|^2 dtau = 1; support is the interval outside which the
    profile is negligible (|f| < 1e-9 of the peak).
    """

    profile: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    label: str = "custom"

    def norm_squared(self, n: int = 200001) -> float:
        tau = np.linspace(self.support[0], self.support[1], n)
        f = self.profile(tau)
        return float(simpson(np.abs(f) ** 2, x=tau))

    def check_normalized(self, tol: float = 1e-8):
        nrm = self.norm_squared()
        if abs(nrm - 1.0) > tol:
            raise PulseError(f"envelope norm^2 = {nrm}, expected 1 within {tol:g}")
        return self


@dataclass(frozen=True)
class CavityParams:
    g0: float      # single-photon coupling, rad/s
    kappa: float   # cavity amplitude decay, rad/s
    envelope: Envelope

    def __post_init__(self):
        if self.kappa <= 0:
            raise PulseError("kappa must be positive")
        if self.g0 < 0:
            raise PulseError("g0 must be nonnegative")


def matched_envelope(kappa: float = 1.0) -> Envelope:
    """Cavity-matched double exponential sqrt(kappa) exp(-kappa |t|).

    In tau units the profile is exp(-|tau|); support is truncated where the
    envelope drops below 1e-9 of its peak.
    """
    if kappa <= 0:
        raise PulseError("kappa must be positive")
    cut = -math.log(1e-9)
    return Envelope(lambda tau: np.exp(-np.abs(tau)), (-cut, cut), "matched")


def square_envelope(duration_in_cavity_units: float = 4.0) -> Envelope:
    """Flat pulse of duration T = duration/kappa, centred on t = 0."""
    half = duration_in_cavity_units / 2.0
    amp = 1.0 / math.sqrt(duration_in_cavity_units)

    def profile(tau):
        return np.where(np.abs(tau) <= half, amp, 0.0)

    return Envelope(profile, (-half, half), "square")


def gaussian_envelope(sigma_in_cavity_units: float = 1.0) -> Envelope:
    """Gaussian |f|^2 with RMS width sigma/kappa."""
    sig = sigma_in_cavity_units
    amp = (math.pi * sig**2) ** -0.25
    cut = sig * math.sqrt(-math.log(1e-9) * 2.0)

    def profile(tau):
        return amp * np.exp(-(tau**2) / (2.0 * sig**2))

    return Envelope(profile, (-cut, cut), "gaussian")


def envelope_from_samples(times: np.ndarray, values: np.ndarray,
                          kappa: float) -> Envelope:
    """Tabulated envelope (linear interpolation), renormalized internally.

    The normalization is computed on the interpolated profile itself, so the
    1e-8 norm check holds regardless of how coarsely the table samples the
    pulse.
    """
    tau = np.asarray(times, dtype=float) * kappa
    vals = np.asarray(values, dtype=complex)
    if tau.ndim != 1 or tau.size < 2 or np.any(np.diff(tau) <= 0):
        raise PulseError("sample times must be strictly increasing")
    norm = math.sqrt(float(simpson(np.abs(vals) ** 2, x=tau)))
    if norm <= 0:
        raise PulseError("envelope samples are identically zero")

    def make_profile(scale):
        def profile(t):
            re = np.interp(t, tau, vals.real / scale, left=0.0, right=0.0)
            im = np.interp(t, tau, vals.imag / scale, left=0.0, right=0.0)
            return re + 1j * im

        return profile

    env = Envelope(make_profile(norm), (float(tau[0]), float(tau[-1])), "table")
    residual = math.sqrt(env.norm_squared())
    return Envelope(make_profile(norm * residual), env.support, "table")


def _dimensionless_integral(env: Envelope, n: int) -> float:
    lo, hi = env.support
    tau = np.linspace(lo, hi, n)
    f = env.profile(tau)
    g = np.exp(tau) * np.asarray(f)
    if np.iscomplexobj(g):
        inner = cumulative_simpson(g.real, x=tau, initial=0.0) + 1j * cumulative_simpson(
            g.imag, x=tau, initial=0.0
        )
    else:
        inner = cumulative_simpson(g, x=tau, initial=0.0)
    integrand = np.exp(-2.0 * tau) * np.abs(inner) ** 2
    value = float(simpson(integrand, x=tau))
    # beyond the support A(t) is constant: closed-form exponential tail
    tail = float(np.abs(inner[-1]) ** 2) * math.exp(-2.0 * hi) / 2.0
    return value + tail


def coupling_from_pulse(params: CavityParams, rel_accuracy: float = 1e-6,
                        norm_tol: float = 1e-8) -> float:
    """mu for the given cavity and envelope, by grid-doubling cumulative
    quadrature to the requested relative accuracy."""
    env = params.envelope
    env.check_normalized(norm_tol)
    if params.g0 == 0.0:
        return 0.0
    n = 8193
    prev = _dimensionless_integral(env, n)
    for _ in range(8):
        n = 2 * (n - 1) + 1
        cur = _dimensionless_integral(env, n)
        if abs(cur - prev) <= 0.25 * rel_accuracy * abs(cur):
            prev = cur
            break
        prev = cur
    if not math.isfinite(prev) or prev < 0:
        raise PulseError("pulse integral diverged; envelope lacks decay")
    return math.sqrt(8.0) * params.g0 / params.kappa * prev
