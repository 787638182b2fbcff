"""Analytic-engine vs Fock-oracle equivalence checks.

Each cell of the check matrix builds the same protocol twice: once with the
closed-form Gaussian-fringe algebra and once by dense truncated-Fock
simulation, then compares the Wigner fields (sup norm) and all four
measures evaluated through the shared quadrature geometry.  The matrix
spans N <= 4, mu in {0.1, 1}, nbar in {0, 0.1, 1} and nbar_th in
{0, 1e-3, 1e-2}.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any

import numpy as np

from .fockoracle import (
    FockWigner,
    apply_descriptor,
    fock_dimension,
    thermal_channel_fock,
    thermal_density,
)
from .measures import macroscopicity, min_wigner, negative_volume, lee_jeong
from .protocol import ProtocolConfig, measurement_operator, run_sequence

SUP_NORM_TOL = 1e-7
MEASURE_TOL = 1e-4
TRACE_TOL = 1e-10

MATRIX_STEPS = (1, 2, 3, 4)
MATRIX_MU = (0.1, 1.0)
MATRIX_NBAR = (0.0, 0.1, 1.0)
MATRIX_NTH = (0.0, 1e-3, 1e-2)


def oracle_state(config: ProtocolConfig, dim: int | None = None):
    """Protocol run on the truncated Fock basis; returns (rho, trace weight).

    The dimension follows the occupation-based rule and is doubled once if
    the truncation-leakage check trips at the initial size.
    """
    from .fockoracle import FockError

    if dim is None:
        eff_nbar = config.initial_occupation + config.steps * config.per_step_thermal
        dim = fock_dimension(config.steps, config.coupling, eff_nbar)
    for attempt_dim in (dim, 2 * dim):
        try:
            rho = thermal_density(config.initial_occupation, attempt_dim)
            for j in range(1, config.steps + 1):
                rho = apply_descriptor(rho, measurement_operator(config, j))
                if config.per_step_thermal > 0:
                    rho = thermal_channel_fock(rho, config.per_step_thermal)
            weight = rho.trace()
            return rho.normalized().check_leakage(), weight
        except FockError:
            if attempt_dim != dim:
                raise
    raise AssertionError("unreachable")


def equivalence_cell(n_steps: int, mu: float, nbar: float, nth: float,
                     scan_points_oracle: int = 61) -> dict[str, Any]:
    """One cell of the matrix: field sup norm, measure differences, trace check."""
    t0 = time.time()
    config = ProtocolConfig.cat(n_steps, mu, nbar, per_step_thermal=nth)
    analytic, weight_analytic = run_sequence(config)
    rho, weight_oracle = oracle_state(config)
    oracle = FockWigner.like(rho, analytic)

    grid = analytic.default_grid(min_samples=96, max_samples=512)
    X, P = grid.meshgrid()
    sup = float(np.max(np.abs(analytic.evaluate(grid) - oracle.value(X, P))))

    mw_a, _ = min_wigner(analytic)
    mw_o, _ = min_wigner(oracle)
    d_a, _ = negative_volume(analytic)
    d_o, _ = negative_volume(oracle)
    lj_a, _ = lee_jeong(analytic)
    lj_o, _ = lee_jeong(oracle)
    m_a, _ = macroscopicity(analytic)
    m_o, _ = macroscopicity(oracle, scan_points=scan_points_oracle)

    diffs = {
        "min_w": abs(mw_a - mw_o),
        "delta": abs(d_a - d_o),
        "lee_jeong": abs(lj_a - lj_o),
        "macroscopicity": abs(m_a - m_o),
    }
    trace_diff = abs(weight_analytic - weight_oracle)
    ok = (
        sup <= SUP_NORM_TOL
        and all(v <= MEASURE_TOL for v in diffs.values())
        and trace_diff <= TRACE_TOL
    )
    return {
        "n_steps": n_steps,
        "mu": mu,
        "nbar": nbar,
        "nth": nth,
        "dim": rho.dim,
        "sup_norm": sup,
        "trace_diff": trace_diff,
        "measure_diffs": diffs,
        "measures_analytic": {"min_w": mw_a, "delta": d_a, "lee_jeong": lj_a,
                              "macroscopicity": m_a},
        "pass": bool(ok),
        "seconds": time.time() - t0,
    }


def matrix_cells(quick: bool = False):
    steps = (1, 2) if quick else MATRIX_STEPS
    nbars = (0.0, 0.1) if quick else MATRIX_NBAR
    nths = (0.0, 1e-2) if quick else MATRIX_NTH
    for n in steps:
        for mu in MATRIX_MU:
            for nbar in nbars:
                for nth in nths:
                    yield (n, mu, nbar, nth)


def _cell_worker(args):
    return equivalence_cell(*args)


def run_matrix(quick: bool = False, jobs: int | None = None,
               progress=None) -> list[dict[str, Any]]:
    """Run the whole matrix, optionally in a process pool, in a stable order."""
    cells = list(matrix_cells(quick))
    results = []
    if jobs is None or jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for res in pool.map(_cell_worker, cells):
                results.append(res)
                if progress:
                    progress(res)
    else:
        for args in cells:
            res = equivalence_cell(*args)
            results.append(res)
            if progress:
                progress(res)
    return results


def format_cell_line(res: dict[str, Any]) -> str:
    status = "PASS" if res["pass"] else "FAIL"
    d = res["measure_diffs"]
    return (
        f"[{status}] N={res['n_steps']} mu={res['mu']:g} nbar={res['nbar']:g} "
        f"nth={res['nth']:g} dim={res['dim']} sup={res['sup_norm']:.2e} "
        f"trace={res['trace_diff']:.1e} dmeas={max(d.values()):.2e} "
        f"({res['seconds']:.1f}s)"
    )
