"""JSON schema for every report the command line writes."""

from __future__ import annotations

import jsonschema

from .verifier import SCHEMA_VERSION

COMMANDS = ("rules-check", "symmetries", "commutators", "reduce", "solve", "lift",
            "residual", "identity", "suite")

_CHECK = {
    "type": "object",
    "required": ["name", "pass", "detail"],
    "properties": {"name": {"type": "string"}, "pass": {"type": "boolean"}, "detail": {}},
}

_RESIDUAL = {
    "type": "object",
    "required": ["pipeline", "grid", "max_abs_residual", "mean_abs_residual", "flagged",
                 "tol", "pass", "config"],
    "properties": {
        "pipeline": {"type": "string"},
        "grid": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "max_abs_residual": {"type": ["number", "string"]},
        "mean_abs_residual": {"type": ["number", "string"]},
        "flagged": {"type": "integer", "minimum": 0},
        "tol": {"type": "number"},
        "pass": {"type": "boolean"},
        "config": {"type": "object"},
    },
}

_RESULTS = {
    "rules-check": {"type": "object", "required": ["rules", "worked_example"]},
    "symmetries": {"type": "object", "required": ["eq", "fields"],
                   "properties": {"fields": {"type": "array", "items": {
                       "type": "object", "required": ["field", "max_abs_residual", "pass"]}}}},
    "commutators": {"type": "object", "required": ["eq", "table", "mismatches",
                                                   "jacobi_defects"]},
    "reduce": {"type": "object", "required": ["reductions", "invariance"]},
    "solve": {"type": "object", "required": ["ode", "span", "blowup", "residual"]},
    "lift": {"type": "object", "required": ["residual"],
             "properties": {"residual": _RESIDUAL}},
    "residual": _RESIDUAL,
    "identity": {"type": "object", "required": ["identity", "roundtrip"]},
    "suite": {"type": "object", "required": ["checks"],
              "properties": {"checks": {"type": "array", "items": _CHECK}}},
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "confsym report",
    "type": "object",
    "required": ["schema_version", "command", "config", "pass", "result"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": list(COMMANDS)},
        "config": {"type": "object"},
        "pass": {"type": "boolean"},
        "result": {},
    },
    "allOf": [
        {"if": {"properties": {"command": {"const": cmd}}},
         "then": {"properties": {"result": sub}}}
        for cmd, sub in _RESULTS.items()
    ],
}


def validate(report: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``report`` does not conform."""
    jsonschema.validate(report, REPORT_SCHEMA)


__all__ = ["COMMANDS", "REPORT_SCHEMA", "validate"]
