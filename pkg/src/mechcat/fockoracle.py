"""Brute-force validator: truncated Fock-basis density-matrix simulation.

Everything the analytic Gaussian-fringe engine computes in closed form is
recomputed here by dense linear algebra on a truncated number basis:
displacement-operator polynomials act as matrices (built from the
diagonalized position operator), the thermal channel is evaluated by 2D
Gauss-Hermite quadrature over displacement operators, and the Wigner
function is reconstructed from the Laguerre expansion of |m><n| projectors.
The oracle is meant for small instances (N <= 4, N*mu <= 6); the analytic
engine is authoritative at scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

LEAKAGE_TOP_LEVELS = 5
LEAKAGE_TOL = 1e-8


class FockError(ValueError):
    pass


@lru_cache(maxsize=32)
def _x_eigensystem(dim: int):
    """Eigen-decomposition of X = (b + b^dag)/sqrt(2) on the truncated basis."""
    off = np.sqrt(np.arange(1, dim) / 2.0)
    vals, vecs = eigh_tridiagonal(np.zeros(dim), off)
    return vals, vecs


def position_operator(dim: int) -> np.ndarray:
    off = np.sqrt(np.arange(1, dim) / 2.0)
    x = np.zeros((dim, dim))
    x[np.arange(dim - 1), np.arange(1, dim)] = off
    x[np.arange(1, dim), np.arange(dim - 1)] = off
    return x


def displacement_exponential(dim: int, a: float) -> np.ndarray:
    """exp(i a X) as a dense matrix."""
    vals, vecs = _x_eigensystem(dim)
    return (vecs * np.exp(1j * a * vals)) @ vecs.T


def fock_dimension(n_steps: int, mu: float, nbar: float = 0.0) -> int:
    """Dimension rule: a cat at momentum N*mu has mean occupation ~ (N*mu)^2/2
    with Gaussian tails; thermal occupancy widens the floor."""
    nmu = n_steps * mu
    base = math.ceil(nmu**2 / 2.0 + 6.0 * nmu + 30.0)
    if nbar > 0:
        thermal = math.ceil(math.log(1e-10) / math.log(nbar / (1.0 + nbar))) + 5
        base = max(base, thermal)
    return int(base)


@dataclass
class FockDensity:
    """Truncated number-basis density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise FockError("density matrix must be square")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> "FockDensity":
        tr = np.trace(self.matrix)
        if abs(tr) < 1e-300:
            raise FockError("zero-trace density matrix")
        return FockDensity(self.matrix / tr)

    def leakage(self) -> float:
        """Relative population in the top truncation levels."""
        pops = np.real(np.diag(self.matrix))
        total = pops.sum()
        return float(pops[-LEAKAGE_TOP_LEVELS:].sum() / max(total, 1e-300))

    def check_leakage(self, tol: float = LEAKAGE_TOL) -> "FockDensity":
        leak = self.leakage()
        if leak > tol:
            raise FockError(f"truncation leakage {leak:.2e} exceeds {tol:g}; increase dimension")
        return self

    def validate(self):
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise FockError("density matrix is not Hermitian")
        if abs(self.trace() - 1.0) > 1e-10:
            raise FockError("density matrix trace differs from 1")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -1e-10:
            raise FockError(f"density matrix not positive semidefinite (min eig {evals.min():.2e})")
        self.check_leakage()
        return self

    def fidelity_with_number_state(self, n: int) -> float:
        return float(np.real(self.matrix[n, n]))

    def expectation_x2(self) -> float:
        x = position_operator(self.dim)
        return float(np.real(np.trace(self.matrix @ x @ x)))


def thermal_density(nbar: float, dim: int) -> FockDensity:
    """Thermal state diag(nbar^n / (1+nbar)^{n+1}); requires the geometric
    tail beyond the truncation to be below 1e-10."""
    if nbar < 0:
        raise FockError("nbar must be nonnegative")
    if nbar == 0:
        pops = np.zeros(dim)
        pops[0] = 1.0
    else:
        ratio = nbar / (1.0 + nbar)
        if ratio**dim > 1e-10:
            raise FockError(f"dimension {dim} too small for thermal tail at nbar={nbar}")
        pops = ratio ** np.arange(dim) / (1.0 + nbar)
    return FockDensity(np.diag(pops.astype(np.complex128)))


def descriptor_matrix(op, dim: int) -> np.ndarray:
    """Dense matrix of sum_k c_k exp(i k mu X)."""
    vals, vecs = _x_eigensystem(dim)
    diag = np.zeros(dim, dtype=np.complex128)
    for c, k in op.coefficients:
        diag += c * np.exp(1j * k * op.mu * vals)
    return (vecs * diag) @ vecs.T


def apply_descriptor(rho: FockDensity, op) -> FockDensity:
    """Unnormalized map rho -> M rho M^dag; raises if leakage grows past tolerance."""
    m = descriptor_matrix(op, rho.dim)
    out = FockDensity(m @ rho.matrix @ m.conj().T)
    out.check_leakage()
    return out


@lru_cache(maxsize=16)
def _gauss_hermite(order: int):
    return np.polynomial.hermite.hermgauss(order)


def thermal_channel_fock(rho: FockDensity, nbar_th: float, order: int = 40,
                         verify: bool = False) -> FockDensity:
    """Gaussian displacement average by 2D Gauss-Hermite quadrature.

    The 2D tensor rule over beta = sqrt(nbar_th)(x_i + i y_j) is applied
    via the exact splitting D(beta) = e^{-i u v} e^{i sqrt(2) v X}
    e^{-i sqrt(2) u P}: the scalar phases cancel inside D rho D^dag, so the
    double sum factorizes into an average over momentum kicks followed by an
    average over position kicks (still the identical tensor quadrature).
    With ``verify`` the result is recomputed at twice the order and the two
    must agree to 1e-8 in max matrix norm.
    """
    if nbar_th < 0:
        raise FockError("nbar_th must be nonnegative")
    if nbar_th == 0.0:
        return rho
    dim = rho.dim
    vals, vecs = _x_eigensystem(dim)
    rot = np.exp(1j * math.pi * np.arange(dim) / 2.0)

    def run(o):
        nodes, weights = _gauss_hermite(o)
        mid = rho.matrix
        for sign, conjugate_by_rot in ((-1.0, True), (1.0, False)):
            acc = np.zeros_like(mid)
            for node, w in zip(nodes, weights):
                a = sign * math.sqrt(2.0 * nbar_th) * node
                ex = (vecs * np.exp(1j * a * vals)) @ vecs.T
                if conjugate_by_rot:
                    ex = (rot[:, None] * ex) * rot.conj()[None, :]
                acc += (w / math.sqrt(math.pi)) * (ex @ mid @ ex.conj().T)
            mid = acc
        return mid

    result = run(order)
    if verify:
        result2 = run(2 * order)
        if np.max(np.abs(result - result2)) > 1e-8:
            raise FockError("thermal channel quadrature did not converge; raise the order")
        result = result2
    return FockDensity(result)


def rotated(rho: FockDensity, angle: float) -> FockDensity:
    """Phase-space rotation by ``angle`` (number-operator phase)."""
    phase = np.exp(-1j * angle * np.arange(rho.dim))
    return FockDensity(phase[:, None] * rho.matrix * phase.conj()[None, :])


# -- Wigner reconstruction ------------------------------------------------------


def wigner_points(rho: FockDensity, x, p) -> np.ndarray:
    """W(x, p) from the Laguerre expansion of the |m><n| Wigner kernels.

    W_{|m><n|} = (1/pi) (-1)^m sqrt(m!/n!) [sqrt(2)(X + iP)]^{n-m}
                 e^{-X^2-P^2} L_m^{(n-m)}(2(X^2+P^2))    for n >= m,
    summed along diagonals with the stable upward Laguerre recurrence.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    shape = np.broadcast_shapes(x.shape, p.shape)
    xf = np.broadcast_to(x, shape).ravel()
    pf = np.broadcast_to(p, shape).ravel()
    dim = rho.dim
    z = 2.0 * (xf * xf + pf * pf)
    env = np.exp(-0.5 * z)
    a_conj = math.sqrt(2.0) * (xf + 1j * pf)
    total = np.zeros(xf.size, dtype=np.complex128)
    bd = np.ones(xf.size, dtype=np.complex128)   # (sqrt(2)(X+iP))^d / sqrt(d!)
    for d in range(dim):
        diag = np.diagonal(rho.matrix, offset=d)
        if np.any(np.abs(diag) > 1e-300):
            # S_d = sum_m rho_{m,m+d} (-1)^m sqrt(m!(m+d)!)/(m+d)!... folded as
            # coefficient recurrence c_{m+1} = -c_m sqrt((m+1)/(m+1+d))
            lm_prev = np.zeros_like(total)
            lm = np.ones_like(total)            # L_0^{(d)}
            coeff = 1.0
            acc = np.zeros_like(total)
            for m in range(dim - d):
                w = diag[m] * coeff
                if abs(w) > 1e-300:
                    acc += w * lm
                lm_next = ((2 * m + d + 1 - z) * lm - (m + d) * lm_prev) / (m + 1)
                lm_prev, lm = lm, lm_next
                coeff *= -math.sqrt((m + 1) / (m + 1 + d))
            contrib = bd * acc
            total += contrib if d == 0 else 2.0 * contrib.real
        bd *= a_conj / math.sqrt(d + 1)
    w = env * np.real(total) / math.pi
    return w.reshape(shape)


class FockWigner:
    """Duck-typed Wigner evaluator over a FockDensity so the oracle can be
    measured through the same quadrature geometry as the analytic engine.

    Derivatives use 5-point central finite differences (step ``fd_step``).
    """

    def __init__(self, rho: FockDensity, kmax_axes=(0.0, 0.0), box=None,
                 sigma: float = 1.0, fd_step: float = 0.02):
        self.rho = rho.normalized().check_leakage()
        self._kmax_axes = tuple(kmax_axes)
        self._box = box
        self._sigma = float(sigma)
        self.fd_step = fd_step

    @classmethod
    def like(cls, rho: FockDensity, reference) -> "FockWigner":
        """Borrow fringe/box geometry hints from an analytic state."""
        return cls(rho, reference.fringe_kmax_axes(), reference.bounding_box(),
                   reference.sigma_max())

    def fringe_kmax_axes(self):
        return self._kmax_axes

    def sigma_max(self):
        return self._sigma

    def bounding_box(self, n_sigma: float = 6.0):
        if self._box is None:
            raise FockError("no bounding box hint provided")
        return self._box

    def default_grid(self, **kw):
        from .phasespace import Grid

        x_min, x_max, p_min, p_max = self.bounding_box()
        kx, kp = self._kmax_axes
        nx = int(min(max(96, (x_max - x_min) * max(kx, 1.0) * 16 / (2 * math.pi)), 2048))
        n_p = int(min(max(96, (p_max - p_min) * max(kp, 1.0) * 16 / (2 * math.pi)), 2048))
        return Grid(x_min, x_max, p_min, p_max, nx, n_p)

    def value(self, x, p):
        return wigner_points(self.rho, x, p)

    def value_and_derivatives(self, x, p):
        h = self.fd_step
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        w = self.value(x, p)
        # 5-point first and second differences, O(h^4)
        fx2, fx1, fx_1, fx_2 = (self.value(x + k * h, p) for k in (2, 1, -1, -2))
        fp2, fp1, fp_1, fp_2 = (self.value(x, p + k * h) for k in (2, 1, -1, -2))
        wx = (-fx2 + 8 * fx1 - 8 * fx_1 + fx_2) / (12 * h)
        wp = (-fp2 + 8 * fp1 - 8 * fp_1 + fp_2) / (12 * h)
        wxx = (-fx2 + 16 * fx1 - 30 * w + 16 * fx_1 - fx_2) / (12 * h * h)
        wpp = (-fp2 + 16 * fp1 - 30 * w + 16 * fp_1 - fp_2) / (12 * h * h)
        return w, wx, wp, wxx + wpp

    def marginal(self, angle: float) -> "FockMarginal":
        return FockMarginal(rotated(self.rho, angle), self._marginal_support(angle),
                            self._marginal_kmax(angle), self._sigma)

    def _marginal_support(self, angle: float):
        x_min, x_max, p_min, p_max = self.bounding_box()
        corners = [
            c * math.cos(angle) + s * math.sin(angle)
            for c in (x_min, x_max)
            for s in (p_min, p_max)
        ]
        return min(corners), max(corners)

    def _marginal_kmax(self, angle: float):
        kx, kp = self._kmax_axes
        return abs(kx * math.cos(angle)) + abs(kp * math.sin(angle))


class FockMarginal:
    """Quadrature marginal of a rotated Fock state via Hermite functions."""

    def __init__(self, rho: FockDensity, support, kmax, sigma: float = 1.0):
        self.rho = rho
        self._support = support   # covers the 6-sigma box of the reference
        self._kmax = kmax
        self._sigma = sigma

    def support(self, n_sigma: float = 6.0):
        lo, hi = self._support
        pad = max(0.0, n_sigma - 6.0) * self._sigma
        return lo - pad, hi + pad

    def fringe_kmax(self):
        return self._kmax

    def _psi(self, u: np.ndarray):
        """Hermite-function matrix psi_n(u) and its derivative, shape (len(u), dim)."""
        dim = self.rho.dim
        u = np.asarray(u, dtype=float)
        psi = np.zeros((u.size, dim + 1))
        psi[:, 0] = math.pi ** -0.25 * np.exp(-0.5 * u * u)
        if dim >= 1:
            psi[:, 1] = math.sqrt(2.0) * u * psi[:, 0]
        for n in range(1, dim):
            psi[:, n + 1] = math.sqrt(2.0 / (n + 1)) * u * psi[:, n] - math.sqrt(
                n / (n + 1)
            ) * psi[:, n - 1]
        # psi_n' = sqrt(n/2) psi_{n-1} - sqrt((n+1)/2) psi_{n+1}
        ns = np.arange(dim)
        dpsi = -np.sqrt((ns + 1) / 2.0) * psi[:, 1 : dim + 1]
        dpsi[:, 1:] += np.sqrt(ns[1:] / 2.0) * psi[:, : dim - 1]
        return psi[:, :dim], dpsi

    def pdf_and_derivatives(self, u):
        u = np.asarray(u, dtype=float)
        psi, dpsi = self._psi(u.ravel())
        rp = psi @ self.rho.matrix
        p = np.real(np.einsum("xn,xn->x", rp, psi.conj()))
        dp = 2.0 * np.real(np.einsum("xn,xn->x", psi @ self.rho.matrix, dpsi.conj()))
        # p'' = 2 Re(psi' rho psi'^*) + 2 Re(psi rho psi''^*); use
        # psi_n'' = (u^2 - 2n - 1) psi_n
        ns = np.arange(self.rho.dim)
        ddpsi = (u.ravel()[:, None] ** 2 - (2 * ns + 1)[None, :]) * psi
        d2p = 2.0 * np.real(np.einsum("xn,xn->x", dpsi @ self.rho.matrix, dpsi.conj()))
        d2p += 2.0 * np.real(np.einsum("xn,xn->x", psi @ self.rho.matrix, ddpsi.conj()))
        return p.reshape(u.shape), dp.reshape(u.shape), d2p.reshape(u.shape)

    def pdf(self, u):
        return self.pdf_and_derivatives(u)[0]

    def integral(self):
        return float(np.real(np.trace(self.rho.matrix)))

    def absolute_mass(self):
        return float(np.abs(self.rho.matrix).sum())


def trace_distance(a: FockDensity, b: FockDensity) -> float:
    evals = np.linalg.eigvalsh(a.matrix - b.matrix)
    return 0.5 * float(np.abs(evals).sum())


# -- one lossy step by explicit four-mode algebra --------------------------------


def _two_mode_bs(dim: int, cos_theta: float, flip_second: bool = False) -> np.ndarray:
    """Beam-splitter unitary on a (dim x dim) two-mode Fock space.

    Generated by theta (a1^dag a2 - a1 a2^dag), so in the Heisenberg picture
    a1 -> a1 cos(theta) + a2 sin(theta).  With ``flip_second`` a pi phase is
    appended on the second output, giving a2 -> (a1 - a2)/sqrt(2) at 50:50
    (the convention the interferometer uses).
    """
    from scipy.linalg import expm

    theta = math.acos(min(max(cos_theta, -1.0), 1.0))
    n = np.arange(dim)
    low = np.sqrt(np.arange(1, dim))
    a = np.zeros((dim, dim))
    a[np.arange(dim - 1), np.arange(1, dim)] = low
    a1 = np.kron(a, np.eye(dim))
    a2 = np.kron(np.eye(dim), a)
    gen = theta * (a1.T @ a2 - a1 @ a2.T)
    u = expm(gen)
    if flip_second:
        phase = np.kron(np.ones(dim), np.exp(1j * math.pi * n))
        u = phase[:, None] * u
    return u


def _apply_two_mode(psi: np.ndarray, u: np.ndarray, modes: tuple[int, int]) -> np.ndarray:
    dim = psi.shape[0]
    i, j = modes
    moved = np.moveaxis(psi, (i, j), (len(psi.shape) - 2, len(psi.shape) - 1))
    flat = moved.reshape(-1, dim * dim)
    out = flat @ u.reshape(dim * dim, dim * dim).T
    return np.moveaxis(out.reshape(moved.shape), (len(psi.shape) - 2, len(psi.shape) - 1), (i, j))


def lossy_step_descriptors(input_kind: str, eta: float, phi: float, mu: float,
                           outcome: tuple[int, int], alpha: complex = 0.0,
                           photon_cutoff: int | None = None):
    """Operators for one lossy step, one per environment outcome (k, l).

    Builds the interferometer explicitly on four optical modes (two
    interferometer arms plus one loss mode per arm), traces nothing away yet:
    the returned list carries, for each (k, l) pair of lost photon numbers,
    the mechanical operator as a displacement polynomial.  Photon cutoff
    defaults to 1 for single-photon input and to a Poisson-tail cutoff for
    coherent input.
    """
    from .protocol import OperatorDescriptor

    if photon_cutoff is None:
        if input_kind == "single_photon":
            photon_cutoff = 1
        else:
            mean = 2.0 * abs(alpha) ** 2
            photon_cutoff = 4
            tail = 1.0 - math.exp(-mean) * sum(
                mean**k / math.factorial(k) for k in range(photon_cutoff + 1)
            )
            while tail > 1e-14 and photon_cutoff < 40:
                photon_cutoff += 1
                tail -= math.exp(-mean) * mean**photon_cutoff / math.factorial(photon_cutoff)
            if tail > 1e-14:
                raise FockError("optical photon-number truncation insufficient for this alpha")
    dim = photon_cutoff + 1

    if input_kind == "single_photon":
        inp = np.zeros(dim, dtype=np.complex128)
        inp[1] = 1.0
    elif input_kind == "coherent":
        amp = math.sqrt(2.0) * complex(alpha)
        ns = np.arange(dim)
        inp = np.exp(-abs(amp) ** 2 / 2.0) * amp**ns / np.sqrt(
            [math.factorial(int(n)) for n in ns]
        )
    else:
        raise FockError(f"unknown input kind {input_kind!r}")

    psi = np.zeros((dim,) * 4, dtype=np.complex128)
    psi[(slice(None),) + (0,) * 3] = inp

    bs_50 = _two_mode_bs(dim, 1.0 / math.sqrt(2.0), flip_second=True)
    bs_loss = _two_mode_bs(dim, math.sqrt(eta))
    psi = _apply_two_mode(psi, bs_50, (0, 1))
    phase = np.exp(1j * phi * np.arange(dim))
    psi = psi * phase[None, :, None, None]

    m, n = outcome
    out = []
    for n1 in range(dim):
        sector = np.zeros_like(psi)
        sector[n1] = psi[n1]
        sector = _apply_two_mode(sector, bs_loss, (0, 2))
        sector = _apply_two_mode(sector, bs_loss, (1, 3))
        sector = _apply_two_mode(sector, bs_50, (0, 1))
        out.append(sector[m, n])
    # out[n1][k, l] -> amplitude; regroup into descriptors per (k, l)
    descriptors = []
    for k in range(dim):
        for l in range(dim):
            coeffs = {n1: out[n1][k, l] for n1 in range(dim)
                      if abs(out[n1][k, l]) > 1e-15}
            if coeffs:
                descriptors.append(((k, l), OperatorDescriptor.from_dict(coeffs, mu)))
    return descriptors


def lossy_step_fock(rho: FockDensity, eta: float, input_kind: str, phi: float,
                    mu: float, outcome: tuple[int, int],
                    alpha: complex = 0.0) -> FockDensity:
    """Unnormalized mechanical state after one lossy heralded step:
    rho -> sum over lost-photon outcomes of Y rho Y^dag for the given click."""
    descriptors = lossy_step_descriptors(input_kind, eta, phi, mu, outcome, alpha)
    total = np.zeros_like(rho.matrix)
    for _, desc in descriptors:
        mat = descriptor_matrix(desc, rho.dim)
        total += mat @ rho.matrix @ mat.conj().T
    out = FockDensity(total)
    out.check_leakage()
    return out
