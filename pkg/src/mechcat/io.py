"""Config parsing and deterministic artifact writers.

Protocol runs are described by a JSON document (see README for the schema);
validation errors name the offending field.  CSV artifacts are written with
repr-formatted floats and sorted keys so identical inputs give byte-identical
files.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from . import __version__
from .constants import CONSTANTS_RECORD
from .protocol import ProtocolConfig, ProtocolError, cat_phase_schedule


class ConfigError(ValueError):
    pass


def parse_protocol_config(doc: dict[str, Any]) -> ProtocolConfig:
    """Build a ProtocolConfig from its JSON form, naming bad fields."""
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")

    def need(field, types, default=None, required=False):
        if field not in doc:
            if required:
                raise ConfigError(f"config: missing required field {field!r}")
            return default
        v = doc[field]
        if not isinstance(v, types):
            raise ConfigError(f"config: field {field!r} has wrong type {type(v).__name__}")
        return v

    steps = need("steps", int, required=True)
    coupling = need("coupling", (int, float), required=True)
    nbar = need("initial_occupation", (int, float), 0.0)
    nth = need("per_step_thermal", (int, float), 0.0)
    eta = need("efficiency", (int, float), 1.0)

    inp = need("input", dict, {"kind": "single_photon"})
    kind = inp.get("kind", "single_photon")
    alpha = inp.get("alpha", 0.0)
    if isinstance(alpha, (list, tuple)):
        if len(alpha) != 2:
            raise ConfigError("config: field 'input.alpha' must be a number or [re, im]")
        alpha = complex(alpha[0], alpha[1])
    elif isinstance(alpha, (int, float)):
        alpha = complex(alpha)
    else:
        raise ConfigError("config: field 'input.alpha' must be a number or [re, im]")

    preset = need("preset", str)
    phases: tuple
    clicks: tuple
    if preset is not None:
        if preset not in ("cat01", "cat10"):
            raise ConfigError("config: field 'preset' must be 'cat01' or 'cat10'")
        branch = "click01" if preset == "cat01" else "click10"
        phases = cat_phase_schedule(steps, branch)
        click = (0, 1) if preset == "cat01" else (1, 0)
        clicks = tuple(click for _ in range(steps))
        if "phases" in doc or "clicks" in doc:
            raise ConfigError("config: give either 'preset' or explicit 'phases'/'clicks'")
    else:
        raw_phases = need("phases", (list, dict), required=True)
        if isinstance(raw_phases, dict):
            turns = raw_phases.get("turns")
            if not isinstance(turns, list):
                raise ConfigError("config: field 'phases.turns' must be a list of [num, den]")
            phases = tuple(Fraction(int(n), int(d)) for n, d in turns)
        else:
            phases = tuple(float(p) for p in raw_phases)
        raw_clicks = need("clicks", list, required=True)
        try:
            clicks = tuple((int(m), int(n)) for m, n in raw_clicks)
        except (TypeError, ValueError) as exc:
            raise ConfigError("config: field 'clicks' must be a list of [m, n] pairs") from exc

    try:
        return ProtocolConfig(
            steps=steps,
            coupling=float(coupling),
            initial_occupation=float(nbar),
            phases=phases,
            click_sequence=clicks,
            input_kind=kind,
            alpha=alpha,
            efficiency=float(eta),
            per_step_thermal=float(nth),
        )
    except ProtocolError as exc:
        raise ConfigError(f"config: {exc}") from exc


def load_protocol_config(path) -> ProtocolConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_protocol_config(json.load(fh))


def metadata_record(**extra) -> dict[str, Any]:
    rec = {
        "tool": "mechcat",
        "version": __version__,
        "constants": CONSTANTS_RECORD,
    }
    rec.update(extra)
    return rec


def write_json(path, payload: dict[str, Any]):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_csv(path, header: list[str], rows: list[list], metadata: dict | None = None):
    """Deterministic CSV with '#'-prefixed metadata header lines."""
    lines = []
    for key in sorted((metadata or {}).keys()):
        lines.append(f"# {key}: {metadata[key]}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)
