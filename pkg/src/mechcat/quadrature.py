"""Adaptive tiled Gauss-Legendre quadrature for oscillatory phase-space
integrands.

Domains are tiled by caller-supplied edge lists (so fringe zeros and kinks
of |W| can be placed on tile boundaries); each tile carries an embedded
error estimate (order g vs order g - 4) and the worst tiles are bisected
until the summed estimate meets the absolute target.  Integrands are
vector-valued and evaluated in large batches across the active tile front,
which keeps both the analytic term engine and the Fock-basis evaluator in
their fast vectorized regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np


@lru_cache(maxsize=64)
def _gl_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def fringe_edges(lo: float, hi: float, kmax: float, max_width: float) -> np.ndarray:
    """Tile edges on [lo, hi]: aligned to the zeros of cos(kmax * x) (so the
    kinks of |W| fall on boundaries) and never wider than max_width."""
    cuts = [lo]
    if kmax > 0:
        half = math.pi / kmax
        start = math.floor((lo - half / 2.0) / half) * half + half / 2.0
        aligned = np.arange(start, hi, half)
        cuts.extend(float(c) for c in aligned if lo < c < hi)
    cuts.append(hi)
    edges = [lo]
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(math.ceil((b - a) / max_width)))
        edges.extend(np.linspace(a, b, n + 1)[1:])
    return np.asarray(edges)


def uniform_edges(lo: float, hi: float, width: float) -> np.ndarray:
    n = max(1, int(math.ceil((hi - lo) / width)))
    return np.linspace(lo, hi, n + 1)


@dataclass
class QuadratureResult:
    values: np.ndarray      # (m,) one value per integrand component
    error: np.ndarray       # (m,) summed tile error estimates
    n_points: int


def _tile_nodes_1d(tiles: np.ndarray, order: int):
    x, w = _gl_rule(order)
    a = tiles[:, 0][:, None]
    b = tiles[:, 1][:, None]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * x[None, :]
    weights = half * w[None, :]
    return nodes, weights


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    abs_tol: float,
    order: int = 16,
    max_rounds: int = 12,
) -> QuadratureResult:
    """Adaptive integration of vector-valued f over the tiled interval."""
    tiles = np.column_stack([edges[:-1], edges[1:]])
    total_pts = 0

    def tile_eval(tl):
        nonlocal total_pts
        nodes_hi, w_hi = _tile_nodes_1d(tl, order)
        nodes_lo, w_lo = _tile_nodes_1d(tl, max(4, order - 4))
        vals_hi = np.asarray(f(nodes_hi.ravel()))
        vals_lo = np.asarray(f(nodes_lo.ravel()))
        if vals_hi.ndim == 1:
            vals_hi = vals_hi[None, :]
            vals_lo = vals_lo[None, :]
        total_pts += nodes_hi.size + nodes_lo.size
        m = vals_hi.shape[0]
        ihi = (vals_hi.reshape(m, *nodes_hi.shape) * w_hi).sum(axis=2)
        ilo = (vals_lo.reshape(m, *nodes_lo.shape) * w_lo).sum(axis=2)
        return ihi, np.abs(ihi - ilo)

    vals, errs = tile_eval(tiles)
    for _ in range(max_rounds):
        tot_err = errs.max(axis=0)
        if tot_err.sum() <= abs_tol:
            break
        worst = np.argsort(tot_err)[::-1]
        split = worst[tot_err[worst] > abs_tol / max(len(tiles), 1)][:256]
        if split.size == 0:
            break
        keep = np.setdiff1d(np.arange(len(tiles)), split)
        old = tiles[split]
        mid = 0.5 * (old[:, 0] + old[:, 1])
        new_tiles = np.vstack(
            [np.column_stack([old[:, 0], mid]), np.column_stack([mid, old[:, 1]])]
        )
        new_vals, new_errs = tile_eval(new_tiles)
        tiles = np.vstack([tiles[keep], new_tiles])
        vals = np.concatenate([vals[:, keep], new_vals], axis=1)
        errs = np.concatenate([errs[:, keep], new_errs], axis=1)
    return QuadratureResult(vals.sum(axis=1), errs.sum(axis=1), total_pts)


def integrate_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x_edges: np.ndarray,
    p_edges: np.ndarray,
    abs_tol: float,
    order: int = 12,
    max_rounds: int = 10,
) -> QuadratureResult:
    """Adaptive tensor-tile integration of vector-valued f(x, p)."""
    xt = np.column_stack([x_edges[:-1], x_edges[1:]])
    pt = np.column_stack([p_edges[:-1], p_edges[1:]])
    ix, ip = np.meshgrid(np.arange(len(xt)), np.arange(len(pt)), indexing="ij")
    tiles = np.column_stack(
        [xt[ix.ravel(), 0], xt[ix.ravel(), 1], pt[ip.ravel(), 0], pt[ip.ravel(), 1]]
    )
    total_pts = 0

    def tile_eval(tl):
        nonlocal total_pts
        out = []
        for g in (order, max(4, order - 4)):
            gx, gw = _gl_rule(g)
            hx = 0.5 * (tl[:, 1] - tl[:, 0])
            hp = 0.5 * (tl[:, 3] - tl[:, 2])
            cx = 0.5 * (tl[:, 1] + tl[:, 0])
            cp = 0.5 * (tl[:, 3] + tl[:, 2])
            xn = cx[:, None] + hx[:, None] * gx[None, :]            # (T, g)
            pn = cp[:, None] + hp[:, None] * gx[None, :]
            X = np.repeat(xn[:, :, None], g, axis=2)                # (T, g, g)
            P = np.repeat(pn[:, None, :], g, axis=1)
            vals = np.asarray(f(X.ravel(), P.ravel()))
            if vals.ndim == 1:
                vals = vals[None, :]
            total_pts += X.size
            m = vals.shape[0]
            vt = vals.reshape(m, len(tl), g, g)
            w2 = gw[None, :, None] * gw[None, None, :] * (hx * hp)[:, None, None]
            out.append((vt * w2[None]).sum(axis=(2, 3)))
        return out[0], np.abs(out[0] - out[1])

    vals, errs = tile_eval(tiles)
    for _ in range(max_rounds):
        tot_err = errs.max(axis=0)
        if tot_err.sum() <= abs_tol:
            break
        worst = np.argsort(tot_err)[::-1]
        split = worst[tot_err[worst] > abs_tol / max(len(tiles), 1)][:512]
        if split.size == 0:
            break
        keep = np.setdiff1d(np.arange(len(tiles)), split)
        old = tiles[split]
        mx = 0.5 * (old[:, 0] + old[:, 1])
        mp = 0.5 * (old[:, 2] + old[:, 3])
        quads = []
        for xl, xh in ((old[:, 0], mx), (mx, old[:, 1])):
            for pl, ph in ((old[:, 2], mp), (mp, old[:, 3])):
                quads.append(np.column_stack([xl, xh, pl, ph]))
        new_tiles = np.vstack(quads)
        new_vals, new_errs = tile_eval(new_tiles)
        tiles = np.vstack([tiles[keep], new_tiles])
        vals = np.concatenate([vals[:, keep], new_vals], axis=1)
        errs = np.concatenate([errs[:, keep], new_errs], axis=1)
    return QuadratureResult(vals.sum(axis=1), errs.sum(axis=1), total_pts)
