"""Non-classicality and macroscopicity measures of a Wigner function.

Four measures are computed:

* ``min_wigner``      -- global minimum of W (bounded below by -1/pi),
* ``negative_volume`` -- delta = (integral of |W| - 1) / 2,
* ``lee_jeong``       -- phase-space sharpness -(pi/2) int W (lap + 2) W,
* ``macroscopicity``  -- half the maximum classical Fisher information of
                          the quadrature marginals over directions lambda.

All functions are written against a small evaluator protocol (``value``,
``value_and_derivatives``, ``fringe_kmax_axes``, ``bounding_box``,
``marginal``) rather than a concrete class, so the analytic Gaussian-fringe
engine and the brute-force Fock-basis validator can be measured through the
identical quadrature geometry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, asdict
from typing import Any

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .quadrature import fringe_edges, integrate_1d, integrate_2d

MIN_W_BOUND = -1.0 / math.pi
CFI_ZERO_REL = 1e-13


class MeasureError(ValueError):
    pass


@dataclass
class MeasureReport:
    """All four measures for one state, with per-measure error estimates."""

    min_w: float
    min_location: tuple[float, float]
    delta: float
    lee_jeong: float
    macroscopicity: float
    optimal_lambda: float
    errors: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.min_w < MIN_W_BOUND - 1e-6:
            raise MeasureError(f"min W {self.min_w} below the -1/pi bound")
        if not (-1e-6 <= self.delta < 1.0 / math.pi + 1e-6):
            raise MeasureError(f"delta {self.delta} outside [0, 1/pi)")

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["min_location"] = list(self.min_location)
        return d

    @staticmethod
    def csv_header(prefix: str = "") -> list[str]:
        return [prefix + k for k in ("min_w", "delta", "lee_jeong", "macroscopicity",
                                     "optimal_lambda")]

    def csv_row(self) -> list[float]:
        return [self.min_w, self.delta, self.lee_jeong, self.macroscopicity,
                self.optimal_lambda]


def _sigma_of(state) -> float:
    return state.sigma_max()


def min_wigner(state, abs_accuracy: float = 1e-5) -> tuple[float, tuple[float, float]]:
    """Global minimum of W by coarse scan plus Nelder-Mead refinement."""
    grid = state.default_grid(samples_per_fringe=16, min_samples=96, max_samples=8192)
    X, P = grid.meshgrid()
    W = state.value(X, P)
    flat = np.argsort(W, axis=None)[:6]
    best_val, best_loc = np.inf, (0.0, 0.0)
    for idx in flat:
        i, j = np.unravel_index(idx, W.shape)
        res = minimize(
            lambda z: float(state.value(z[0], z[1])),
            x0=[X[i, j], P[i, j]],
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": abs_accuracy * 1e-3, "maxiter": 400},
        )
        if res.fun < best_val:
            best_val = float(res.fun)
            best_loc = (float(res.x[0]), float(res.x[1]))
    return best_val, best_loc


def _delta_edges(state, pad_sigma: float = 6.0):
    x_min, x_max, p_min, p_max = state.bounding_box(pad_sigma)
    kx, kp = state.fringe_kmax_axes()
    sig = _sigma_of(state)
    x_edges = fringe_edges(x_min, x_max, kx, max_width=sig)
    p_edges = fringe_edges(p_min, p_max, kp, max_width=sig)
    return x_edges, p_edges


def negative_volume(state, abs_accuracy: float = 1e-4, order: int = 12):
    """delta = (int |W| - int W) / 2 on a fringe-aligned adaptive tiling.

    For a normalized state int W = 1, so this equals the usual
    (int |W| - 1)/2 while cancelling the shared tail-truncation error of the
    two integrals.  Returns (delta, error_estimate).
    """
    x_edges, p_edges = _delta_edges(state)

    def f(x, p):
        w = state.value(x, p)
        return np.stack([np.abs(w), w])

    res = integrate_2d(f, x_edges, p_edges, abs_tol=abs_accuracy / 4.0, order=order)
    i_abs, i_w = res.values
    delta = 0.5 * (i_abs - i_w)
    err = 0.5 * (res.error[0] + res.error[1]) + abs(i_w - 1.0)
    return float(delta), float(err)


def scs_delta_series(n_steps: int, mu: float, nbar: float = 0.0,
                     term_cutoff: float = 1e-16) -> float:
    """Closed-form negative volume of an undamped cat, valid for N*mu >= 4.

    Evaluates the alternating Gaussian series obtained by Poisson summation
    of the absolute-cosine integral.  The series is summed in symmetric +-k
    pairs until the terms drop below ``term_cutoff``; the result tends to
    1/pi as N*mu grows, for any initial occupation.
    """
    nmu = n_steps * mu
    if nmu <= 0:
        raise MeasureError("N*mu must be positive")
    if nmu < 4.0:
        warnings.warn("scs_delta_series is derived for N*mu >= 4; value may be inaccurate",
                      stacklevel=2)
    q = nmu**2 * (1.0 + 2.0 * nbar)
    norm = 0.5 / (1.0 - math.exp(-q / 4.0))
    series = 1.0  # k = 0
    k = 1
    while True:
        gauss = math.exp(-k * k * q)
        pair = gauss * ((-1) ** k) * (1.0 / (1.0 + (-1) ** k * 2 * k)
                                      + 1.0 / (1.0 - (-1) ** k * 2 * k))
        series += pair
        if gauss < term_cutoff:
            break
        k += 1
    tail = math.exp(-q / 4.0) / (1.0 - math.exp(-q / 4.0))
    return 0.5 * (4.0 * norm / math.pi * series + tail)


def lee_jeong(state, abs_accuracy: float = 1e-4, order: int = 12):
    """Sharpness measure -(pi/2) int W (lap + 2) W with analytic derivatives.

    The integration-by-parts form (pi/2) int (|grad W|^2 - 2 W^2) is
    evaluated on the same nodes; the difference enters the error estimate.
    Returns (value, error_estimate).
    """
    x_edges, p_edges = _delta_edges(state)

    def f(x, p):
        w, wx, wp, lap = state.value_and_derivatives(x, p)
        return np.stack([w * lap + 2.0 * w * w, wx * wx + wp * wp - 2.0 * w * w])

    res = integrate_2d(f, x_edges, p_edges, abs_tol=abs_accuracy / 2.0, order=order)
    form1 = -0.5 * math.pi * res.values[0]
    form2 = 0.5 * math.pi * res.values[1]
    err = 0.5 * math.pi * (res.error[0] + res.error[1]) + abs(form1 - form2)
    return float(form1), float(err)


def cfi_quadrature(state, angle: float, abs_accuracy: float = 1e-6,
                   order: int = 16) -> float:
    """Classical Fisher information of the quadrature marginal at ``angle``.

    F = int p'(x)^2 / p(x) dx.  At marginal zeros the integrand has the
    finite limit 2 p''(x) (p ~ a x^2 gives p'^2/p -> 4a), which replaces the
    ratio wherever p < 1e-13 * max p.
    """
    marg = state.marginal(angle)
    lo, hi = marg.support(n_sigma=7.5)
    scan = marg.pdf(np.linspace(lo, hi, 4097))
    pmax = float(scan.max())
    # pdf values of nearly-cancelling term lists carry a float64 noise floor
    # proportional to the absolute term mass; thresholds and the adaptive
    # target must respect it or the refinement chases noise
    noise = np.finfo(float).eps * getattr(marg, "absolute_mass", lambda: 1.0)()
    if float(scan.min()) < -max(1e-10 * pmax, 16.0 * noise):
        raise MeasureError("marginal is negative beyond tolerance")
    thresh = max(CFI_ZERO_REL * pmax, 256.0 * noise)

    def f(x):
        p, dp, d2p = marg.pdf_and_derivatives(x)
        good = p > thresh
        integrand = np.empty_like(p)
        integrand[good] = dp[good] ** 2 / p[good]
        integrand[~good] = np.maximum(2.0 * d2p[~good], 0.0)
        return np.stack([p, integrand])

    edges = fringe_edges(lo, hi, marg.fringe_kmax(), max_width=(hi - lo) / 16.0)
    tol = max(min(abs_accuracy, 1e-9), 8.0 * noise * (hi - lo))
    res = integrate_1d(f, edges, abs_tol=tol, order=order)
    norm = res.values[0]
    if abs(norm - 1.0) > max(1e-8, 64.0 * noise):
        raise MeasureError(f"marginal integrates to {norm}, expected 1 within tolerance")
    return float(res.values[1])


def macroscopicity(state, scan_points: int = 181, abs_accuracy: float = 1e-6):
    """M = max_lambda F(lambda) / 2 over quadrature directions in [0, pi).

    Scans ``scan_points`` directions then refines the best with bounded
    scalar minimization.  Returns (M, optimal_lambda).
    """
    lams = np.linspace(0.0, math.pi, scan_points, endpoint=False)
    coarse = np.array([cfi_quadrature(state, la, abs_accuracy=1e-4) for la in lams])
    i0 = int(np.argmax(coarse))
    step = math.pi / scan_points
    lo, hi = lams[i0] - step, lams[i0] + step
    res = minimize_scalar(
        lambda la: -cfi_quadrature(state, la, abs_accuracy=abs_accuracy),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-6},
    )
    # re-evaluate both candidates at the tight tolerance so the returned
    # value never inherits the coarse-scan error
    candidates = [float(res.x) % math.pi, float(lams[i0])]
    best_lam, best_f = max(
        ((la, cfi_quadrature(state, la, abs_accuracy=abs_accuracy)) for la in candidates),
        key=lambda t: t[1],
    )
    return 0.5 * best_f, best_lam


def regime_classify(n_steps: int, mu: float, nbar: float = 0.0) -> str:
    """Regime of the heralded state by separation vs initial width.

    Thresholds N*mu = 1/sqrt(2) and 4/sqrt(2) (stated for nbar = 0) scale
    with the thermal width factor sqrt(1 + 2*nbar).
    """
    nmu = n_steps * mu
    scale = math.sqrt(1.0 + 2.0 * nbar)
    if nmu < scale / math.sqrt(2.0):
        return "fock_like"
    if nmu > 4.0 * scale / math.sqrt(2.0):
        return "cat"
    return "kitten"


def compute_report(state, delta_accuracy: float = 1e-4,
                   lee_jeong_accuracy: float = 1e-4,
                   minw_accuracy: float = 1e-5,
                   cfi_accuracy: float = 1e-6,
                   scan_points: int = 181) -> MeasureReport:
    """Evaluate all four measures of a normalized state."""
    mw, loc = min_wigner(state, abs_accuracy=minw_accuracy)
    delta, delta_err = negative_volume(state, abs_accuracy=delta_accuracy)
    lj, lj_err = lee_jeong(state, abs_accuracy=lee_jeong_accuracy)
    mac, lam = macroscopicity(state, scan_points=scan_points, abs_accuracy=cfi_accuracy)
    return MeasureReport(
        min_w=mw,
        min_location=loc,
        delta=max(delta, 0.0),
        lee_jeong=lj,
        macroscopicity=mac,
        optimal_lambda=lam,
        errors={
            "min_w": minw_accuracy,
            "delta": delta_err,
            "lee_jeong": lj_err,
            "macroscopicity": cfi_accuracy,
        },
    )
