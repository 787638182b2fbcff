"""Exact phase-space algebra for Wigner functions built from Gaussian-fringe terms.

Every state handled by this package is a finite sum of terms of the form

    w * exp[i(kx*X + kp*P)] * exp[-((X - x0)^2 + (P - p0)^2) / s]

with complex weight ``w``, real centre ``(x0, p0)``, isotropic variance
parameter ``s > 0`` (``s = 1 + 2*nbar`` for a thermal Gaussian) and real
fringe wavevector ``(kx, kp)``.  Sums of such terms are closed under every
operation the multistep protocol needs: one-sided momentum displacements,
Gaussian thermal convolution, rigid shifts, marginals and moments, all in
closed form.  Hermiticity of the underlying density operator shows up as a
pairing symmetry: each term with ``k != 0`` has a partner with conjugated
weight and negated wavevector, so the evaluated W(X, P) is exactly real.

Positions and momenta are dimensionless (zero-point units, [X, P] = i); the
vacuum state is the single term ``w = 1/pi, s = 1, k = 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

MERGE_KEY_TOL = 1e-9
WEIGHT_DROP_REL = 1e-12
IMAG_RESIDUE_REL = 1e-10


class PhaseSpaceError(ValueError):
    """Invalid state or operation in the phase-space algebra."""


@dataclass(frozen=True)
class WignerTerm:
    """One complex-weighted Gaussian-fringe term."""

    weight: complex
    x0: float = 0.0
    p0: float = 0.0
    s: float = 1.0
    kx: float = 0.0
    kp: float = 0.0

    def __post_init__(self):
        if not (self.s > 0.0) or not math.isfinite(self.s):
            raise PhaseSpaceError(f"variance parameter s must be positive, got {self.s}")
        for name in ("x0", "p0", "kx", "kp"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise PhaseSpaceError(f"term field {name} must be real and finite, got {v}")

    def integral(self) -> complex:
        """Exact integral over the whole phase plane.

        integral = w * pi * s * exp[i(kx*x0 + kp*p0)] * exp[-(kx^2 + kp^2) s / 4]
        """
        phase = 1j * (self.kx * self.x0 + self.kp * self.p0)
        damp = -(self.kx**2 + self.kp**2) * self.s / 4.0
        return self.weight * math.pi * self.s * np.exp(phase + damp)

    def conjugate_partner(self) -> "WignerTerm":
        return WignerTerm(np.conj(self.weight), self.x0, self.p0, self.s, -self.kx, -self.kp)


def term_integral(term: WignerTerm) -> complex:
    return term.integral()


@dataclass(frozen=True)
class Grid:
    """Rectangular evaluation grid (nx samples on x, np samples on p)."""

    x_min: float
    x_max: float
    p_min: float
    p_max: float
    nx: int
    np: int

    def __post_init__(self):
        if self.nx < 2 or self.np < 2:
            raise PhaseSpaceError("grid needs at least 2 samples per axis")
        if not (self.x_min < self.x_max and self.p_min < self.p_max):
            raise PhaseSpaceError("grid bounds must be ordered")

    def x_axis(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def p_axis(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np)

    def meshgrid(self):
        return np.meshgrid(self.x_axis(), self.p_axis(), indexing="ij")

    def cell_area(self) -> float:
        dx = (self.x_max - self.x_min) / (self.nx - 1)
        dp = (self.p_max - self.p_min) / (self.np - 1)
        return dx * dp


def _round_key(value: float, tol: float) -> float:
    # rounding to multiples of tol is sign-symmetric, so conjugate partners
    # land in exactly mirrored buckets
    return float(np.round(value / tol)) * tol


class PhaseSpaceState:
    """Immutable Wigner function represented as a sum of Gaussian-fringe terms."""

    __slots__ = ("terms", "normalized", "_arrays")

    def __init__(self, terms: Iterable[WignerTerm], normalized: bool = False):
        self.terms: tuple[WignerTerm, ...] = tuple(terms)
        self.normalized = bool(normalized)
        object.__setattr__(self, "_arrays", None)

    def __setattr__(self, name, value):
        if name in self.__slots__ and getattr(self, name, None) is not None and name != "_arrays":
            raise AttributeError("PhaseSpaceState is immutable")
        object.__setattr__(self, name, value)

    def __len__(self) -> int:
        return len(self.terms)

    # -- structural helpers -------------------------------------------------

    def _term_arrays(self):
        """Stacked term parameters, cached."""
        cached = self._arrays
        if cached is None:
            t = self.terms
            cached = {
                "w": np.array([tm.weight for tm in t], dtype=np.complex128),
                "x0": np.array([tm.x0 for tm in t]),
                "p0": np.array([tm.p0 for tm in t]),
                "s": np.array([tm.s for tm in t]),
                "kx": np.array([tm.kx for tm in t]),
                "kp": np.array([tm.kp for tm in t]),
            }
            object.__setattr__(self, "_arrays", cached)
        return cached

    def hermitian_pairing(self, tol: float = 1e-12):
        """Pair each fringe term with its conjugate partner.

        Returns (real_idx, rep_idx, partner_idx) where real_idx are k = 0
        terms with (numerically) real weights and rep/partner are matched
        conjugate pairs.  Returns None if the term list is not Hermitian.
        """
        a = self._term_arrays()
        n = len(self.terms)
        scale = float(np.max(np.abs(a["w"]))) if n else 0.0
        k_mag = np.hypot(a["kx"], a["kp"])
        used = np.zeros(n, dtype=bool)
        real_idx, rep_idx, partner_idx = [], [], []
        order = np.lexsort((a["kp"], a["kx"], a["p0"], a["x0"], a["s"]))
        pos = {}
        for i in order:
            pos.setdefault(
                (a["s"][i], a["x0"][i], a["p0"][i]), []
            ).append(i)
        for i in range(n):
            if used[i]:
                continue
            if k_mag[i] <= tol:
                if abs(a["w"][i].imag) > tol * max(scale, 1e-300):
                    return None
                real_idx.append(i)
                used[i] = True
                continue
            found = -1
            for j in pos.get((a["s"][i], a["x0"][i], a["p0"][i]), ()):
                if j == i or used[j]:
                    continue
                if (
                    abs(a["kx"][j] + a["kx"][i]) <= tol * (1 + abs(a["kx"][i]))
                    and abs(a["kp"][j] + a["kp"][i]) <= tol * (1 + abs(a["kp"][i]))
                    and abs(a["w"][j] - np.conj(a["w"][i])) <= tol * max(scale, 1e-300)
                ):
                    found = j
                    break
            if found < 0:
                return None
            used[i] = used[found] = True
            rep_idx.append(i)
            partner_idx.append(found)
        return real_idx, rep_idx, partner_idx

    # -- evaluation ----------------------------------------------------------

    def _eval_components(self, x: np.ndarray, p: np.ndarray, derivatives: bool = False):
        """Evaluate W (and optionally dW/dX, dW/dP, laplacian W) at points.

        Uses the Hermitian pairing so the result is computed in real
        arithmetic (exactly real).  Raises if the term list is corrupted and
        the complex evaluation leaves an imaginary residue above tolerance.
        """
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        shape = np.broadcast_shapes(x.shape, p.shape)
        xf = np.broadcast_to(x, shape).ravel()
        pf = np.broadcast_to(p, shape).ravel()
        pairing = self.hermitian_pairing()
        if pairing is None:
            return self._eval_complex_checked(xf, pf, shape, derivatives)

        real_idx, rep_idx, _ = pairing
        a = self._term_arrays()
        nout = 4 if derivatives else 1
        out = np.zeros((nout, xf.size))
        idx_factor = [(i, 1.0) for i in real_idx] + [(i, 2.0) for i in rep_idx]
        chunk = max(1, int(4e6 // max(xf.size, 1)) or 1)
        for start in range(0, len(idx_factor), chunk):
            for i, factor in idx_factor[start : start + chunk]:
                dx = xf - a["x0"][i]
                dp = pf - a["p0"][i]
                s = a["s"][i]
                env = np.exp(-(dx * dx + dp * dp) / s)
                kx, kp = a["kx"][i], a["kp"][i]
                wre, wim = a["w"][i].real, a["w"][i].imag
                if kx == 0.0 and kp == 0.0:
                    C = wre
                    S = wim
                    cval = env * C
                else:
                    th = kx * xf + kp * pf
                    cth, sth = np.cos(th), np.sin(th)
                    C = wre * cth - wim * sth
                    S = wre * sth + wim * cth
                    cval = env * C
                out[0] += factor * cval
                if derivatives:
                    ux = 2.0 * dx / s
                    up = 2.0 * dp / s
                    # d/dX Re(wE) = e^{-G} [-ux*C - kx*S], likewise P
                    out[1] += factor * env * (-(ux * C) - kx * S)
                    out[2] += factor * env * (-(up * C) - kp * S)
                    # laplacian: Re(w[(i kx - ux)^2 + (i kp - up)^2 - 4/s] E)
                    quad = ux * ux + up * up - kx * kx - kp * kp - 4.0 / s
                    out[3] += factor * env * (quad * C + 2.0 * (kx * ux + kp * up) * S)
        if derivatives:
            return tuple(o.reshape(shape) for o in out)
        return out[0].reshape(shape)

    def _eval_complex_checked(self, xf, pf, shape, derivatives):
        a = self._term_arrays()
        acc = np.zeros(xf.size, dtype=np.complex128)
        if derivatives:
            raise PhaseSpaceError("derivative evaluation requires a Hermitian term list")
        for i in range(len(self.terms)):
            dx = xf - a["x0"][i]
            dp = pf - a["p0"][i]
            expo = 1j * (a["kx"][i] * xf + a["kp"][i] * pf) - (dx * dx + dp * dp) / a["s"][i]
            acc += a["w"][i] * np.exp(expo)
        max_re = float(np.max(np.abs(acc.real))) if acc.size else 0.0
        max_im = float(np.max(np.abs(acc.imag))) if acc.size else 0.0
        if max_im > IMAG_RESIDUE_REL * max(max_re, 1e-300):
            raise PhaseSpaceError(
                f"imaginary residue {max_im:.3e} exceeds {IMAG_RESIDUE_REL:g} x max|W|; "
                "term list is not Hermitian"
            )
        return acc.real.reshape(shape)

    def value(self, x, p) -> np.ndarray:
        """W evaluated at arbitrary points (broadcasting)."""
        return self._eval_components(x, p)

    def value_and_derivatives(self, x, p):
        """(W, dW/dX, dW/dP, laplacian W) at arbitrary points."""
        return self._eval_components(x, p, derivatives=True)

    def evaluate(self, grid: Grid) -> np.ndarray:
        """Real W field on the grid, shape (nx, np)."""
        X, P = grid.meshgrid()
        return self._eval_components(X, P)

    # -- integrals and moments ------------------------------------------------

    def integral(self) -> float:
        total = sum(t.integral() for t in self.terms)
        return float(np.real(total))

    def integral_complex(self) -> complex:
        return complex(sum(t.integral() for t in self.terms))

    def second_moments(self) -> tuple[float, float]:
        """(<X^2>, <P^2>) from the closed-form Gaussian moment integrals."""
        mx = 0.0 + 0.0j
        mp = 0.0 + 0.0j
        for t in self.terms:
            jx = math.sqrt(math.pi * t.s) * np.exp(1j * t.kx * t.x0 - t.kx**2 * t.s / 4.0)
            jp = math.sqrt(math.pi * t.s) * np.exp(1j * t.kp * t.p0 - t.kp**2 * t.s / 4.0)
            x2 = (t.x0 + 1j * t.kx * t.s / 2.0) ** 2 + t.s / 2.0
            p2 = (t.p0 + 1j * t.kp * t.s / 2.0) ** 2 + t.s / 2.0
            mx += t.weight * jx * jp * x2
            mp += t.weight * jx * jp * p2
        return float(np.real(mx)), float(np.real(mp))

    # -- constructors / transforms --------------------------------------------

    def normalize(self) -> "PhaseSpaceState":
        total = self.integral_complex()
        if abs(total) < 1e-300:
            raise PhaseSpaceError("state integral is zero; cannot normalize")
        scale = 1.0 / total.real
        terms = [replace(t, weight=t.weight * scale) for t in self.terms]
        return PhaseSpaceState(terms, normalized=True)

    def scaled(self, factor: complex) -> "PhaseSpaceState":
        return PhaseSpaceState(
            [replace(t, weight=t.weight * factor) for t in self.terms], normalized=False
        )

    def __add__(self, other: "PhaseSpaceState") -> "PhaseSpaceState":
        return PhaseSpaceState(self.terms + other.terms, normalized=False)

    def one_sided_displacement(self, mu_left: float, nu_right: float) -> "PhaseSpaceState":
        """Wigner image of rho -> exp(i*mu_left*X) rho exp(-i*nu_right*X).

        Each term is shifted by (mu_left + nu_right)/2 along P and picks up
        fringe kx += mu_left - nu_right.  A term whose fringe already has a
        momentum component kp acquires the phase exp(-i*kp*shift) so the
        stored functional form is preserved exactly.
        """
        shift = 0.5 * (mu_left + nu_right)
        dk = mu_left - nu_right
        out = []
        for t in self.terms:
            w = t.weight * np.exp(-1j * t.kp * shift) if t.kp != 0.0 else t.weight
            out.append(WignerTerm(w, t.x0, t.p0 + shift, t.s, t.kx + dk, t.kp))
        return PhaseSpaceState(out, normalized=False)

    def displaced(self, dx: float, dp: float) -> "PhaseSpaceState":
        """Rigid phase-space translation W(X, P) -> W(X - dx, P - dp)."""
        out = []
        for t in self.terms:
            w = t.weight * np.exp(-1j * (t.kx * dx + t.kp * dp))
            out.append(WignerTerm(w, t.x0 + dx, t.p0 + dp, t.s, t.kx, t.kp))
        return PhaseSpaceState(out, normalized=self.normalized)

    def merged(self, key_tolerance: float = MERGE_KEY_TOL) -> "PhaseSpaceState":
        return merge_terms(self, key_tolerance)

    # -- geometry hints used by grids and quadrature ---------------------------

    def fringe_kmax(self) -> float:
        if not self.terms:
            return 0.0
        return max(math.hypot(t.kx, t.kp) for t in self.terms)

    def fringe_kmax_axes(self) -> tuple[float, float]:
        """(max |kx|, max |kp|) over all terms."""
        if not self.terms:
            return 0.0, 0.0
        return (
            max(abs(t.kx) for t in self.terms),
            max(abs(t.kp) for t in self.terms),
        )

    def sigma_max(self) -> float:
        """Largest per-quadrature Gaussian width among the terms."""
        if not self.terms:
            raise PhaseSpaceError("empty state has no width")
        return max(math.sqrt(t.s / 2.0) for t in self.terms)

    def bounding_box(self, n_sigma: float = 6.0):
        if not self.terms:
            raise PhaseSpaceError("empty state has no bounding box")
        sig = max(math.sqrt(t.s / 2.0) for t in self.terms)
        pad = n_sigma * sig
        xs = [t.x0 for t in self.terms]
        ps = [t.p0 for t in self.terms]
        return (min(xs) - pad, max(xs) + pad, min(ps) - pad, max(ps) + pad)

    def default_grid(self, samples_per_fringe: int = 8, min_samples: int = 64,
                     max_samples: int = 4096, n_sigma: float = 6.0) -> Grid:
        """Grid spanning the 6-sigma bounding box, resolving every fringe
        with at least ``samples_per_fringe`` samples per period (per axis)."""
        x_min, x_max, p_min, p_max = self.bounding_box(n_sigma)
        kx, kp = self.fringe_kmax_axes()
        sig = min(math.sqrt(t.s / 2.0) for t in self.terms)

        def n_axis(lo, hi, k):
            step = sig / 8.0
            if k > 0.0:
                step = min(step, 2.0 * math.pi / (samples_per_fringe * k))
            return int(np.clip(math.ceil((hi - lo) / step) + 1, min_samples, max_samples))

        return Grid(x_min, x_max, p_min, p_max, n_axis(x_min, x_max, kx),
                    n_axis(p_min, p_max, kp))

    # -- marginals --------------------------------------------------------------

    def marginal(self, angle: float) -> "MarginalDensity":
        """Quadrature distribution p(X_lambda) along direction ``angle``.

        Integrates W over the orthogonal quadrature in closed form; requires
        a normalized state.
        """
        if not self.normalized:
            raise PhaseSpaceError("marginal requires a normalized state")
        c, s_ = math.cos(angle), math.sin(angle)
        line_terms = []
        for t in self.terms:
            cu = c * t.x0 + s_ * t.p0
            cv = -s_ * t.x0 + c * t.p0
            ku = c * t.kx + s_ * t.kp
            kv = -s_ * t.kx + c * t.kp
            w = t.weight * math.sqrt(math.pi * t.s) * np.exp(1j * kv * cv - kv * kv * t.s / 4.0)
            line_terms.append((complex(w), float(cu), float(t.s), float(ku)))
        return MarginalDensity(line_terms, angle)


class MarginalDensity:
    """1D quadrature density as a list of Gaussian-fringe line terms.

    p(u) = sum_t Re[ w_t * exp(i k_t u) * exp(-(u - c_t)^2 / s_t) ]
    """

    def __init__(self, line_terms: Sequence[tuple[complex, float, float, float]], angle: float):
        self.line_terms = tuple(line_terms)
        self.angle = float(angle)

    def _eval(self, u: np.ndarray, n_derivatives: int = 0):
        u = np.asarray(u, dtype=float)
        outs = [np.zeros(u.shape) for _ in range(n_derivatives + 1)]
        for w, c, s, k in self.line_terms:
            du = u - c
            env = np.exp(-du * du / s)
            th = k * u
            cth, sth = np.cos(th), np.sin(th)
            C = w.real * cth - w.imag * sth
            S = w.real * sth + w.imag * cth
            outs[0] += env * C
            if n_derivatives >= 1:
                g = 2.0 * du / s
                outs[1] += env * (-(g * C) - k * S)
            if n_derivatives >= 2:
                quad = g * g - k * k - 2.0 / s
                outs[2] += env * (quad * C + 2.0 * k * g * S)
        return outs

    def pdf(self, u) -> np.ndarray:
        return self._eval(u)[0]

    def pdf_and_derivatives(self, u):
        """(p, p', p'') evaluated at u."""
        return tuple(self._eval(u, n_derivatives=2))

    def integral(self) -> float:
        total = 0.0 + 0.0j
        for w, c, s, k in self.line_terms:
            total += w * math.sqrt(math.pi * s) * np.exp(1j * k * c - k * k * s / 4.0)
        return float(np.real(total))

    def absolute_mass(self) -> float:
        """Sum of |term| integrals; the float64 cancellation noise floor of
        pdf values scales with this (large for nearly-cancelling states)."""
        return float(sum(abs(w) * math.sqrt(math.pi * s) for w, _, s, _ in self.line_terms))

    def fringe_kmax(self) -> float:
        return max((abs(k) for _, _, _, k in self.line_terms), default=0.0)

    def support(self, n_sigma: float = 6.0):
        sig = max(math.sqrt(s / 2.0) for _, _, s, _ in self.line_terms)
        cs = [c for _, c, _, _ in self.line_terms]
        return min(cs) - n_sigma * sig, max(cs) + n_sigma * sig


def merge_terms(state: PhaseSpaceState, key_tolerance: float = MERGE_KEY_TOL) -> PhaseSpaceState:
    """Combine terms whose (centre, s, wavevector) agree within key_tolerance.

    Weights below WEIGHT_DROP_REL of the largest magnitude are dropped, and
    the surviving list is re-symmetrized so conjugate fringe partners are
    exact (bitwise) mirrors; the evaluated W is unchanged to rounding error.
    """
    buckets: dict[tuple, complex] = {}
    meta: dict[tuple, WignerTerm] = {}
    for t in state.terms:
        key = (
            _round_key(t.x0, key_tolerance),
            _round_key(t.p0, key_tolerance),
            _round_key(t.s, key_tolerance),
            _round_key(t.kx, key_tolerance),
            _round_key(t.kp, key_tolerance),
        )
        if key in buckets:
            buckets[key] += t.weight
        else:
            buckets[key] = t.weight
            meta[key] = t
    if not buckets:
        return PhaseSpaceState((), normalized=False)
    wmax = max(abs(w) for w in buckets.values())
    out: list[WignerTerm] = []
    done = set()
    for key in sorted(buckets):
        if key in done:
            continue
        w = buckets[key]
        if abs(w) <= WEIGHT_DROP_REL * wmax:
            done.add(key)
            continue
        x0k, p0k, sk, kxk, kpk = key
        mirror = (x0k, p0k, sk, -kxk, -kpk)
        rep = meta[key]
        if (kxk != 0.0 or kpk != 0.0) and mirror in buckets and mirror not in done:
            # enforce exact Hermitian pairing on the surviving pair
            wsym = 0.5 * (w + np.conj(buckets[mirror]))
            out.append(WignerTerm(complex(wsym), rep.x0, rep.p0, rep.s, rep.kx, rep.kp))
            out.append(WignerTerm(complex(np.conj(wsym)), rep.x0, rep.p0, rep.s, -rep.kx, -rep.kp))
            done.add(mirror)
        elif kxk == 0.0 and kpk == 0.0:
            out.append(WignerTerm(complex(w.real), rep.x0, rep.p0, rep.s, 0.0, 0.0))
        else:
            out.append(WignerTerm(complex(w), rep.x0, rep.p0, rep.s, rep.kx, rep.kp))
        done.add(key)
    return PhaseSpaceState(out, normalized=False)


def vacuum(nbar: float = 0.0) -> PhaseSpaceState:
    """Thermal Gaussian state (vacuum for nbar = 0), normalized."""
    if nbar < 0:
        raise PhaseSpaceError("nbar must be nonnegative")
    s = 1.0 + 2.0 * nbar
    return PhaseSpaceState([WignerTerm(1.0 / (math.pi * s), s=s)], normalized=True)


# -- field export --------------------------------------------------------------


def field_to_csv(path, field: np.ndarray, grid: Grid, metadata: dict | None = None):
    """Write the field as long-format CSV with header row ``x,p,w``.

    Metadata is embedded as leading ``#`` comment lines so the numeric block
    stays machine-readable; output is byte-deterministic for fixed inputs.
    """
    x = grid.x_axis()
    p = grid.p_axis()
    lines = []
    for key in sorted((metadata or {}).keys()):
        lines.append(f"# {key}: {metadata[key]}")
    lines.append("x,p,w")
    for i in range(grid.nx):
        xi = repr(float(x[i]))
        for j in range(grid.np):
            lines.append(f"{xi},{float(p[j])!r},{float(field[i, j])!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def field_to_binary(path, field: np.ndarray, grid: Grid, metadata: dict | None = None):
    """Raw little-endian float64 matrix plus a JSON sidecar describing it."""
    arr = np.ascontiguousarray(field, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(arr.tobytes())
    sidecar = {
        "dtype": "<f8",
        "order": "C",
        "shape": [grid.nx, grid.np],
        "axes": ["x", "p"],
        "x_min": grid.x_min,
        "x_max": grid.x_max,
        "p_min": grid.p_min,
        "p_max": grid.p_max,
    }
    sidecar.update(metadata or {})
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
