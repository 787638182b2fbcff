"""Command-line front end.

Verbs:
  state         run a protocol config, export per-step Wigner grids
  table1        device reference table with published-value comparison
  sweep         measure sweeps over step number and decoherence settings
  herald        heralding probabilities, scalings, and time estimates
  pulse         coupling strength from a pulse envelope
  oracle-check  analytic-engine vs Fock-oracle equivalence matrix

Exit codes: 0 ok, 1 validation failure, 2 tolerance failure, 3 I/O failure.
All computations are deterministic; no random numbers are used anywhere
(the --seedless flag is accepted for scripting symmetry and is a no-op).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decoherence import decohered_protocol_state, thermal_channel
from .devices import (
    check_against_expected,
    compute_row,
    load_reference_table,
    reference_devices,
)
from .heralding import (
    TimingParams,
    herald_probability,
    operator_trace_probability,
    scheme_scaling,
    total_time,
)
from .io import ConfigError, load_protocol_config, metadata_record, write_csv, write_json
from .measures import compute_report
from .phasespace import Grid, field_to_binary, field_to_csv, vacuum
from .protocol import ProtocolConfig, apply_step, measurement_operator
from .pulse import (
    CavityParams,
    coupling_from_pulse,
    envelope_from_samples,
    gaussian_envelope,
    matched_envelope,
    square_envelope,
)
from .render import heatmap_png
from .validation import format_cell_line, run_matrix

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_TOLERANCE = 2
EXIT_IO = 3


class ToleranceFailure(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mechcat",
        description="Multistep pulsed-optomechanics cat-state simulator",
    )
    ap.add_argument("--version", action="version", version=f"mechcat {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seedless", action="store_true",
                        help="no-op; all computations are deterministic")
    common.add_argument("--format", choices=("csv", "json", "bin"), default="csv",
                        help="primary tabular output format")

    p = sub.add_parser("state", parents=[common],
                       help="run a protocol and export per-step Wigner grids")
    p.add_argument("--config", required=True, help="protocol config JSON")
    p.add_argument("--grid", default=None, metavar="NX,NP",
                   help="override grid sample counts")
    p.add_argument("--dry-run", action="store_true", help="validate config and exit")
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("table1", parents=[common],
                       help="compute the device reference table and compare")
    p.add_argument("--params", default=None, help="device table JSON (default: embedded)")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("sweep", parents=[common],
                       help="sweep measures over steps and decoherence")
    p.add_argument("--spec", default=None, help="sweep spec JSON (default: built-in grid)")
    p.add_argument("--jobs", type=int, default=os.cpu_count(), help="worker processes")
    p.add_argument("--no-plots", action="store_true", help="skip line-plot images")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("herald", parents=[common],
                       help="heralding probabilities and time estimates")
    p.add_argument("--config", default=None, help="protocol config JSON")
    p.add_argument("--device", default=None,
                   help="device label from the reference table")
    p.set_defaults(func=cmd_herald)

    p = sub.add_parser("pulse", parents=[common],
                       help="coupling strength from a pulse envelope")
    p.add_argument("--shape", default="matched",
                   help="matched | square | gaussian | csv:FILE")
    p.add_argument("--g0", type=float, required=True, help="single-photon coupling, rad/s")
    p.add_argument("--kappa", type=float, required=True, help="cavity amplitude decay, rad/s")
    p.add_argument("--duration", type=float, default=4.0,
                   help="square pulse duration in 1/kappa units")
    p.add_argument("--sigma", type=float, default=1.0,
                   help="gaussian envelope width in 1/kappa units")
    p.set_defaults(func=cmd_pulse)

    p = sub.add_parser("oracle-check", parents=[common],
                       help="run the analytic vs Fock-oracle equivalence matrix")
    p.add_argument("--quick", action="store_true", help="reduced matrix")
    p.add_argument("--jobs", type=int, default=os.cpu_count(), help="worker processes")
    p.set_defaults(func=cmd_oracle_check)

    return ap


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_grid_arg(arg: str | None):
    if arg is None:
        return None
    try:
        nx, n_p = (int(v) for v in arg.split(","))
        return nx, n_p
    except ValueError as exc:
        raise ConfigError(f"--grid expects NX,NP (got {arg!r})") from exc


# -- state ---------------------------------------------------------------------


def cmd_state(args) -> int:
    config = load_protocol_config(args.config)
    grid_override = _parse_grid_arg(args.grid)
    if args.dry_run:
        print(f"config ok: {config.steps} steps, mu={config.coupling}, "
              f"input={config.input_kind}")
        return EXIT_OK
    out = _outdir(args)

    states = [vacuum(config.initial_occupation)]
    weights = [1.0]
    for j in range(1, config.steps + 1):
        st = apply_step(states[-1].normalize(), measurement_operator(config, j))
        if config.per_step_thermal > 0:
            st = thermal_channel(st, config.per_step_thermal)
        weights.append(weights[-1] * st.integral())
        states.append(st)
    final = states[-1].normalize()

    grid = final.default_grid()
    if grid_override:
        grid = Grid(grid.x_min, grid.x_max, grid.p_min, grid.p_max, *grid_override)
    meta = metadata_record(
        config=json.loads(Path(args.config).read_text()),
        grid={"x_min": grid.x_min, "x_max": grid.x_max, "p_min": grid.p_min,
              "p_max": grid.p_max, "nx": grid.nx, "np": grid.np},
        step_weights=weights,
    )
    for j, st in enumerate(states):
        field = st.normalize().evaluate(grid)
        base = out / f"wigner_step{j}"
        field_to_csv(f"{base}.csv", field, grid, {"tool": "mechcat", "version": __version__,
                                                  "step": j})
        field_to_binary(f"{base}.bin", field, grid, {"step": j})
        heatmap_png(f"{base}.png", field)
    write_json(out / "state_run.json", meta)
    print(f"wrote {config.steps + 1} Wigner grids to {out}")
    return EXIT_OK


# -- table1 --------------------------------------------------------------------


def cmd_table1(args) -> int:
    table = load_reference_table(args.params)
    runs = table.get("protocol", {}).get("runs", 1000)
    tolerances = table.get("tolerances", {})
    out = _outdir(args)

    header = ["label", "mu", "nth", "t_tot", "min_w", "delta", "lee_jeong",
              "macroscopicity", "herald_probability",
              "herald_probability_operator_trace", "all_cells_pass"]
    rows_csv = []
    failures = 0
    results = []
    for device in reference_devices(table):
        row = compute_row(device, runs=runs)
        expected = next(r["expected"] for r in table["rows"] if r["label"] == device.label)
        cells = check_against_expected(row, expected, tolerances)
        ok = all(c["pass"] for c in cells)
        failures += sum(not c["pass"] for c in cells)
        results.append({"row": row, "cells": cells})
        rows_csv.append([row["label"], row["mu"], row["nth"], row["t_tot"],
                         row["min_w"], row["delta"], row["lee_jeong"],
                         row["macroscopicity"], row["herald_probability"],
                         row["herald_probability_operator_trace"], ok])
        print(f"{row['label']:>14}  nth={row['nth']:.3e}  T={row['t_tot']:.3g}s  "
              f"minW={row['min_w']:+.4f}  d={row['delta']:.4f}  "
              f"I={row['lee_jeong']:+.4f}  M={row['macroscopicity']:.4f}  "
              f"{'ok' if ok else 'MISMATCH'}")
        for c in cells:
            if not c["pass"]:
                print(f"                -> {c['column']}: computed {c['computed']:.6g} "
                      f"vs printed {c['printed']:.6g} (tol {c['tolerance']:.2g} "
                      f"{c['kind']})")
    write_csv(out / "table1.csv", header, rows_csv, metadata_record())
    write_json(out / "table1.json", {"meta": metadata_record(), "results": results})
    if failures:
        print(f"{failures} cell(s) outside tolerance")
        return EXIT_TOLERANCE
    return EXIT_OK


# -- sweep ---------------------------------------------------------------------

DEFAULT_SWEEP = {
    "steps": [0, 1, 2, 3, 4, 5, 6, 7],
    "mu": [0.1, 1.0],
    "nth": [1e-5, 1e-3, 1e-2],
    "nbar": [0.0, 0.1, 1.0],
}


def sweep_point(task):
    n, mu, nbar, nth = task
    if n == 0:
        state = vacuum(nbar)
    else:
        state = decohered_protocol_state(n, mu, nbar, nth)
    rep = compute_report(state)
    return {
        "n_steps": n, "mu": mu, "nbar": nbar, "nth": nth,
        "min_w": rep.min_w, "delta": rep.delta, "lee_jeong": rep.lee_jeong,
        "macroscopicity": rep.macroscopicity, "optimal_lambda": rep.optimal_lambda,
    }


def cmd_sweep(args) -> int:
    spec = dict(DEFAULT_SWEEP)
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            user = json.load(fh)
        unknown = set(user) - set(DEFAULT_SWEEP)
        if unknown:
            raise ConfigError(f"sweep spec: unknown fields {sorted(unknown)}")
        spec.update(user)
    out = _outdir(args)
    tasks = [
        (int(n), float(mu), float(nbar), float(nth))
        for n in spec["steps"]
        for mu in spec["mu"]
        for nbar in spec["nbar"]
        for nth in spec["nth"]
    ]
    from concurrent.futures import ProcessPoolExecutor

    if args.jobs and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(sweep_point, tasks))
    else:
        rows = [sweep_point(t) for t in tasks]
    rows.sort(key=lambda r: (r["mu"], r["nbar"], r["nth"], r["n_steps"]))

    header = ["n_steps", "mu", "nbar", "nth", "min_w", "delta", "lee_jeong",
              "macroscopicity", "optimal_lambda"]
    table = [[r[h] for h in header] for r in rows]
    if args.format == "json":
        write_json(out / "sweep.json", {"meta": metadata_record(spec=spec), "rows": rows})
    write_csv(out / "sweep.csv", header, table, metadata_record())
    if not args.no_plots:
        _sweep_plots(out, rows, spec)
    print(f"wrote {len(rows)} sweep points to {out / 'sweep.csv'}")
    return EXIT_OK


def _sweep_plots(out: Path, rows, spec):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for mu in spec["mu"]:
        for measure in ("min_w", "delta", "lee_jeong", "macroscopicity"):
            fig, ax = plt.subplots(figsize=(6, 4))
            for nbar in spec["nbar"]:
                for nth in spec["nth"]:
                    pts = sorted(
                        (r["n_steps"], r[measure])
                        for r in rows
                        if r["mu"] == mu and r["nbar"] == nbar and r["nth"] == nth
                    )
                    if pts:
                        ax.plot(*zip(*pts), marker="o", ms=3,
                                label=f"nbar={nbar:g}, nth={nth:g}")
            ax.set_xlabel("step number N")
            ax.set_ylabel(measure)
            ax.set_title(f"{measure} vs N (mu={mu:g})")
            ax.legend(fontsize=7)
            fig.tight_layout()
            fig.savefig(out / f"sweep_{measure}_mu{mu:g}.png", dpi=120)
            plt.close(fig)


# -- herald --------------------------------------------------------------------


def cmd_herald(args) -> int:
    out = _outdir(args)
    payload = {"meta": metadata_record()}
    if args.device:
        table = load_reference_table(args.params if hasattr(args, "params") else None)
        devices = {d.label: d for d in reference_devices(table)}
        if args.device not in devices:
            raise ConfigError(f"unknown device {args.device!r}; "
                              f"choose from {sorted(devices)}")
        device = devices[args.device]
        config = ProtocolConfig.cat(
            device.steps, device.coupling(), device.initial_occupation,
            input_kind=device.input_kind, alpha=device.alpha,
            efficiency=device.efficiency,
        )
        timing = TimingParams(1000, device.omega, device.quality_factor)
        t_tot = total_time(herald_probability(config), config.steps, timing)
        payload["t_tot_seconds"] = t_tot
        payload["relax_time_seconds"] = timing.relax_time
    elif args.config:
        config = load_protocol_config(args.config)
    else:
        raise ConfigError("herald: provide --config or --device")

    p_printed = herald_probability(config)
    p_trace = operator_trace_probability(config)
    payload.update(
        {
            "config": {"steps": config.steps, "coupling": config.coupling,
                       "initial_occupation": config.initial_occupation,
                       "input_kind": config.input_kind,
                       "efficiency": config.efficiency},
            "herald_probability": p_printed,
            "herald_probability_operator_trace": p_trace,
            "trace_to_printed_ratio": p_trace / p_printed,
            "scalings": {
                kind: scheme_scaling(kind, config.steps)
                for kind in ("coherent_multistep", "photon_multistep", "noon_multiport")
            },
        }
    )
    write_json(out / "herald.json", payload)
    print(f"P_N (closed form)      = {p_printed:.6g}")
    print(f"P_N (operator trace)   = {p_trace:.6g}")
    print(f"ratio trace/closed     = {p_trace / p_printed:.6g}  (2^-N = {2.0**-config.steps:.6g})")
    if "t_tot_seconds" in payload:
        print(f"T_tot for 1000 runs    = {payload['t_tot_seconds']:.4g} s")
    return EXIT_OK


# -- pulse ---------------------------------------------------------------------


def cmd_pulse(args) -> int:
    shape = args.shape
    if shape == "matched":
        env = matched_envelope()
    elif shape == "square":
        env = square_envelope(args.duration)
    elif shape == "gaussian":
        env = gaussian_envelope(args.sigma)
    elif shape.startswith("csv:"):
        data = np.loadtxt(shape[4:], delimiter=",", comments="#")
        values = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0.0)
        env = envelope_from_samples(data[:, 0], values, args.kappa)
    else:
        raise ConfigError(f"unknown pulse shape {shape!r}")
    mu = coupling_from_pulse(CavityParams(args.g0, args.kappa, env))
    out = _outdir(args)
    write_json(out / "pulse.json", {
        "meta": metadata_record(),
        "shape": env.label, "g0": args.g0, "kappa": args.kappa, "mu": mu,
        "matched_reference": 3.0 * args.g0 / (math.sqrt(2.0) * args.kappa),
    })
    print(f"mu = {mu:.9g}   (matched-envelope reference 3 g0 / (sqrt(2) kappa) "
          f"= {3.0 * args.g0 / (math.sqrt(2.0) * args.kappa):.9g})")
    return EXIT_OK


# -- oracle-check ---------------------------------------------------------------


def cmd_oracle_check(args) -> int:
    out = _outdir(args)
    results = run_matrix(quick=args.quick, jobs=args.jobs,
                         progress=lambda r: print(format_cell_line(r), flush=True))
    write_json(out / "oracle_check.json", {"meta": metadata_record(),
                                            "results": results})
    n_fail = sum(not r["pass"] for r in results)
    print(f"{len(results) - n_fail}/{len(results)} cells pass")
    return EXIT_TOLERANCE if n_fail else EXIT_OK


# -- entry point -----------------------------------------------------------------


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ToleranceFailure as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
