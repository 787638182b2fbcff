"""Physical device descriptions and the reference-table workflow.

A device row carries the oscillator parameters of one experimental platform;
``compute_row`` runs the full pipeline for it: added phonons per period from
the bath description, the decohered protocol state, all four measures,
heralding probabilities (both conventions) and the total experiment time.
``check_against_expected`` compares a computed row against published
reference values at per-column tolerances (one unit in the last printed
digit for the measures, 1.5% relative for nth and total time).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Any

from .decoherence import (
    ThermalEnvironment,
    bath_occupancy,
    decohered_protocol_state,
    feasibility_check,
    phonons_per_period,
)
from .heralding import TimingParams, herald_probability, operator_trace_probability, total_time
from .measures import compute_report
from .protocol import ProtocolConfig


class DeviceError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceParams:
    """One oscillator platform; exactly one of mu or (g0, kappa) is given."""

    label: str
    frequency_hz: float
    quality_factor: float
    mu: float | None = None
    g0: float | None = None
    kappa: float | None = None
    initial_occupation: float = 0.0
    bath_temperature: float | None = None       # kelvin
    bath_occupation: float | None = None
    added_phonons_per_period: float | None = None
    efficiency: float = 0.9
    input_kind: str = "single_photon"
    alpha: complex = 0.0
    steps: int = 3

    def __post_init__(self):
        has_mu = self.mu is not None
        has_cavity = self.g0 is not None and self.kappa is not None
        if has_mu == has_cavity:
            raise DeviceError(
                f"device {self.label!r}: supply exactly one of mu or (g0, kappa)"
            )
        if self.frequency_hz <= 0 or self.quality_factor <= 0:
            raise DeviceError(f"device {self.label!r}: frequency and Q must be positive")
        baths = [
            self.bath_temperature is not None,
            self.bath_occupation is not None,
            self.added_phonons_per_period is not None,
        ]
        if sum(baths) != 1:
            raise DeviceError(
                f"device {self.label!r}: supply exactly one of bath_temperature, "
                "bath_occupation, added_phonons_per_period"
            )

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency_hz

    def coupling(self) -> float:
        if self.mu is not None:
            return self.mu
        from .pulse import CavityParams, coupling_from_pulse, matched_envelope

        return coupling_from_pulse(CavityParams(self.g0, self.kappa, matched_envelope()))

    def environment(self) -> ThermalEnvironment | None:
        if self.added_phonons_per_period is not None:
            return None
        nb = (
            self.bath_occupation
            if self.bath_occupation is not None
            else bath_occupancy(self.bath_temperature, self.omega)
        )
        return ThermalEnvironment(nb, self.quality_factor, self.omega)

    def added_phonons(self) -> float:
        if self.added_phonons_per_period is not None:
            return self.added_phonons_per_period
        return phonons_per_period(self.environment())

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DeviceParams":
        bath = d.get("bath", {})
        alpha = d.get("alpha", 0.0)
        if isinstance(alpha, (list, tuple)):
            alpha = complex(alpha[0], alpha[1])
        return cls(
            label=d["label"],
            frequency_hz=float(d["frequency_hz"]),
            quality_factor=float(d["quality_factor"]),
            mu=d.get("mu"),
            g0=d.get("g0"),
            kappa=d.get("kappa"),
            initial_occupation=float(d.get("initial_occupation", 0.0)),
            bath_temperature=bath.get("temperature_K"),
            bath_occupation=bath.get("occupation"),
            added_phonons_per_period=bath.get("added_phonons_per_period"),
            efficiency=float(d.get("efficiency", 0.9)),
            input_kind=d.get("input_kind", "single_photon"),
            alpha=alpha,
            steps=int(d.get("steps", 3)),
        )


def compute_row(device: DeviceParams, runs: int = 1000) -> dict[str, Any]:
    """Full pipeline for one device: nth, state measures, P_N, T_tot."""
    mu = device.coupling()
    nth = device.added_phonons()
    state = decohered_protocol_state(
        device.steps, mu, device.initial_occupation, nth
    )
    report = compute_report(state)
    config = ProtocolConfig.cat(
        device.steps,
        mu,
        device.initial_occupation,
        input_kind=device.input_kind,
        alpha=device.alpha,
        efficiency=device.efficiency,
    )
    p_printed = herald_probability(config)
    p_trace = operator_trace_probability(config)
    timing = TimingParams(runs, device.omega, device.quality_factor)
    env = device.environment()
    feasible, margin = (
        feasibility_check(env, device.steps) if env is not None else (None, None)
    )
    return {
        "label": device.label,
        "mu": mu,
        "steps": device.steps,
        "initial_occupation": device.initial_occupation,
        "nth": nth,
        "min_w": report.min_w,
        "delta": report.delta,
        "lee_jeong": report.lee_jeong,
        "macroscopicity": report.macroscopicity,
        "optimal_lambda": report.optimal_lambda,
        "herald_probability": p_printed,
        "herald_probability_operator_trace": p_trace,
        "t_tot": total_time(p_printed, device.steps, timing),
        "relax_time": timing.relax_time,
        "feasibility_pass": feasible,
        "feasibility_margin": margin,
        "measure_errors": report.errors,
    }


def last_digit_tolerance(printed: str) -> float:
    """One unit in the last printed digit of a decimal literal like -0.047
    or 5.10e7."""
    m = re.fullmatch(r"\s*-?(\d+)(?:\.(\d+))?(?:[eE]([+-]?\d+))?\s*", printed)
    if not m:
        raise DeviceError(f"cannot parse printed value {printed!r}")
    decimals = len(m.group(2) or "")
    exponent = int(m.group(3) or 0)
    return 10.0 ** (exponent - decimals)


def check_against_expected(row: dict[str, Any], expected: dict[str, str],
                           tolerances: dict[str, Any]) -> list[dict[str, Any]]:
    """Per-cell comparison; returns a list of cell records with pass flags."""
    cells = []
    for key, printed in expected.items():
        target = float(printed)
        got = float(row[key])
        rule = tolerances.get(key, {})
        if rule.get("last_digit"):
            tol = last_digit_tolerance(printed)
            ok = abs(got - target) <= tol
            cells.append(
                {"column": key, "computed": got, "printed": target,
                 "tolerance": tol, "kind": "absolute", "pass": bool(ok)}
            )
        else:
            rel = rule.get("relative", 0.015)
            ok = abs(got - target) <= rel * abs(target)
            cells.append(
                {"column": key, "computed": got, "printed": target,
                 "tolerance": rel, "kind": "relative", "pass": bool(ok)}
            )
    return cells


def load_reference_table(path=None) -> dict[str, Any]:
    """The embedded device table (or an external file of the same schema)."""
    if path is None:
        with resources.files("mechcat.data").joinpath("table1_expected.json").open() as fh:
            return json.load(fh)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def reference_devices(table: dict[str, Any]) -> list[DeviceParams]:
    proto = table.get("protocol", {})
    out = []
    for rowdict in table["rows"]:
        merged = {
            "efficiency": proto.get("efficiency", 0.9),
            "input_kind": proto.get("input_kind", "single_photon"),
            "steps": proto.get("steps", 3),
        }
        merged.update(rowdict)
        out.append(DeviceParams.from_dict(merged))
    return out
