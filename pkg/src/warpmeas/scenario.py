"""Scenario files: JSON documents describing one verification or simulation run.

A scenario has four top-level keys::

    {
      "kind": "deformation-verify",
      "seed": 0,
      "output": "report",
      "parameters": {"dims": [4, 3]}
    }

Only ``kind`` is required.  Each kind has its own parameter schema, listed
in :data:`SCHEMAS`; omitted parameters take the schema defaults and are
echoed in the report.  Unknown keys are rejected with their key path.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import SchemaError

__all__ = ["KINDS", "SCHEMAS", "Scenario", "parse_scenario", "scenario_from_dict", "emit_scenario"]

_INT = {"type": "integer"}
_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_TOL = {"type": "number", "minimum": 0}


def _range(item: dict) -> dict:
    return {"type": "array", "items": item, "minItems": 2, "maxItems": 2}


def _dim(lo: int = 1) -> dict:
    one = {"type": "integer", "minimum": lo}
    return {"oneOf": [one, _range(one)]}


def _list(item: dict, min_items: int = 1) -> dict:
    return {"type": "array", "items": item, "minItems": min_items}


_PROBE = {
    "oneOf": [
        {"enum": ["point", "mixed", "random-diagonal"]},
        {
            "type": "object",
            "properties": {"diagonal": _list({"type": "number", "minimum": 0})},
            "required": ["diagonal"],
            "additionalProperties": False,
        },
    ]
}

_PACKET = {
    "type": "object",
    "properties": {"center": _NUM, "width": _POS},
    "additionalProperties": False,
}

_GAUSS2D = {
    "type": "object",
    "properties": {"center": _range(_NUM), "widths": _range(_POS)},
    "additionalProperties": False,
}

# parameter name -> (schema, default)
_PARAMS: dict = {
    "deformation-verify": {
        "dims": (_range(_dim(2)), [[2, 8], [2, 8]]),
        "instances": ({"type": "integer", "minimum": 0}, 10),
        "kappa_range": (_range(_NUM), [-2.0, 2.0]),
        "generators": ({"type": "integer", "minimum": 1, "maximum": 4}, 1),
        "same_space_instances": ({"type": "integer", "minimum": 0}, 0),
        "tolerance": (_TOL, 1e-9),
    },
    "lemma-verify": {
        "dims": (_range(_dim(2)), [[2, 8], [2, 8]]),
        "instances": ({"type": "integer", "minimum": 0}, 20),
        "series_instances": ({"type": "integer", "minimum": 0}, 10),
        "series_norm": (_POS, 0.5),
        "series_terms": ({"type": "integer", "minimum": 1}, 40),
        "tolerance": (_TOL, 1e-10),
    },
    "measurement-simulate": {
        "n": ({"type": "integer", "minimum": 2}, 6),
        "x_values": ({"oneOf": [{"type": "null"}, _list(_INT)]}, None),
        "kappa": (_INT, 1),
        "probe": (_PROBE, "point"),
        "states": ({"type": "integer", "minimum": 1}, 20),
        "observables": ({"type": "integer", "minimum": 0}, 20),
        "tolerance": (_TOL, 1e-10),
    },
    "measured-observable": {
        "n": ({"type": "integer", "minimum": 2}, 6),
        "x_values": ({"oneOf": [{"type": "null"}, _list(_INT)]}, None),
        "kappa": (_INT, 1),
        "pointer": ({"enum": ["shift", "clock", "identity"]}, "shift"),
        "probes": ({"type": "integer", "minimum": 1}, 10),
        "tolerance": (_TOL, 1e-9),
    },
    "pointer-shift": {
        "points": ({"type": "integer", "minimum": 8}, 256),
        "length": (_POS, 40.0),
        "psi": (_PACKET, {"center": 2.0, "width": 1.5}),
        "phi": (_PACKET, {"center": -1.0, "width": 1.5}),
        "kappas": (_list(_NUM), [0.0, 0.25, 0.5, 1.0]),
        "tolerance": (_TOL, 1e-6),
    },
    "growth-bound": {
        "points": ({"type": "integer", "minimum": 8}, 512),
        "length": (_POS, 96.0),
        "powers": (_list({"type": "integer", "minimum": 1}), [1, 2, 3]),
        "samples": ({"type": "integer", "minimum": 4}, 32),
        "y_range": (_range(_POS), [0.12, 12.0]),
        "probe_width": (_POS, 2.8284271247461903),
        "probe_momentum": (_NUM, 0.8),
        "probe_centers": (_list(_NUM), [0.0, -4.0, 4.0]),
        "tolerance": (_TOL, 0.1),
    },
    "moyal-study": {
        "points": ({"type": "integer", "minimum": 16}, 256),
        "length": (_POS, 16.0),
        "hbars": (_list(_POS, 2), [0.2, 0.1, 0.05]),
        "f": (_GAUSS2D, {"center": [0.3, -0.2], "widths": [1.0, 1.0]}),
        "g": (_GAUSS2D, {"center": [-0.4, 0.1], "widths": [1.0, 0.7]}),
        "series_order": ({"type": "integer", "minimum": 0, "maximum": 8}, 4),
        "min_commutative_order": (_NUM, 0.9),
        "min_antisymmetric_order": (_NUM, 0.9),
        "min_series_order": (_NUM, 4.5),
    },
}

KINDS = tuple(_PARAMS)

SCHEMAS = {
    kind: {
        "type": "object",
        "properties": {
            "kind": {"const": kind},
            "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            "output": {"type": ["string", "null"]},
            "parameters": {
                "type": "object",
                "properties": {k: s for k, (s, _) in params.items()},
                "additionalProperties": False,
            },
        },
        "required": ["kind"],
        "additionalProperties": False,
    }
    for kind, params in _PARAMS.items()
}


@dataclass(frozen=True)
class Scenario:
    kind: str
    seed: int = 0
    parameters: dict = field(default_factory=dict)
    output: str | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "output": self.output,
            "parameters": copy.deepcopy(self.parameters),
        }


def _fill_defaults(d: dict, defaults: dict) -> dict:
    out = {}
    for key, default in defaults.items():
        if key not in d:
            out[key] = copy.deepcopy(default)
        elif isinstance(default, dict) and isinstance(d[key], dict):
            out[key] = {**copy.deepcopy(default), **d[key]}
        else:
            out[key] = d[key]
    return out


def scenario_from_dict(doc) -> Scenario:
    """Validate a decoded scenario document and fill in defaults."""
    if not isinstance(doc, dict):
        raise SchemaError("<root>: scenario must be a JSON object")
    kind = doc.get("kind")
    if kind not in SCHEMAS:
        raise SchemaError(f"kind: unknown scenario kind {kind!r}; expected one of {', '.join(KINDS)}")
    validator = jsonschema.Draft202012Validator(SCHEMAS[kind])
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"{path}: {err.message}")
    defaults = {k: d for k, (_, d) in _PARAMS[kind].items()}
    params = _fill_defaults(doc.get("parameters", {}), defaults)
    for key, value in params.items():
        if isinstance(value, list) and len(value) == 2 and key.endswith("range") and value[0] > value[1]:
            raise SchemaError(f"parameters.{key}: lower bound exceeds upper bound")
    return Scenario(kind, int(doc.get("seed", 0)), params, doc.get("output"))


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise SchemaError(f"scenario file not found: {path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"<root>: malformed JSON ({exc})") from None
    return scenario_from_dict(doc)


def emit_scenario(s: Scenario, path=None) -> str:
    """Serialize a scenario with every default spelled out; write it if ``path`` is given."""
    text = json.dumps(s.to_dict(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
