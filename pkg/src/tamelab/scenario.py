"""Scenario files: JSON documents naming an alphabet, an index regime and a family."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .functions import Alphabet, DirectednessError, Family, parse_function
from .indexing import parse_order

SCHEMA = {
    "type": "object",
    "required": ["name", "alphabet", "regime", "functions"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "alphabet": {"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True},
        "regime": {
            "oneOf": [
                {"const": "omega"},
                {
                    "type": "object",
                    "required": ["elements"],
                    "additionalProperties": False,
                    "properties": {
                        "elements": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                        "lt": {
                            "type": "array",
                            "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
                        },
                    },
                },
            ]
        },
        "functions": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "prefix": {"type": "string"},
                    "period": {"type": "string", "minLength": 1},
                    "table": {"type": "object", "additionalProperties": {"type": "string"}},
                },
                "oneOf": [{"required": ["period"]}, {"required": ["table"]}],
            },
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "level_bound": {"type": "integer", "minimum": 1},
                "marker": {"type": "string"},
                "oracle": {"enum": ["zero-residue"]},
                "auto_close": {"type": "boolean"},
                "sigma_guard": {"type": "integer", "minimum": 1},
                "generic_guard": {"type": "integer", "minimum": 1},
            },
        },
    },
}

BUNDLED = ("s0", "s1", "s2", "s3", "s4", "diamond")


class ScenarioError(ValueError):
    """Input problem: unreadable file, schema mismatch or a non-directed family."""


@dataclass
class Scenario:
    name: str
    family: Family
    options: dict = field(default_factory=dict)
    closed: list = field(default_factory=list)  # names added by auto-closure
    source: str = ""

    @property
    def level_bound(self) -> int:
        return int(self.options.get("level_bound", 4))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "alphabet": list(self.family.alphabet.symbols),
            "regime": self.family.order.to_json(),
            "functions": self.family.to_json(),
            "options": dict(sorted(self.options.items())),
            "auto_closed": list(self.closed),
        }


def parse_scenario(data: dict, auto_close: bool | None = None, source: str = "") -> Scenario:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{source or 'scenario'}: {where}: {exc.message}") from None
    options = dict(data.get("options", {}))
    if auto_close is None:
        auto_close = bool(options.get("auto_close", False))
    try:
        order = parse_order(data["regime"])
        alphabet = Alphabet(tuple(data["alphabet"]))
        members = [(spec["name"], parse_function(spec, order)) for spec in data["functions"]]
        closed: list = []
        if auto_close:
            family, closed = Family(members, alphabet, check=False).closed_under_refine()
        else:
            family = Family(members, alphabet)
    except DirectednessError as exc:
        a, b = exc.pair
        raise ScenarioError(f"{source or 'scenario'}: no upper bound for ({a}, {b}); enable auto-close to add one") from None
    except ValueError as exc:
        raise ScenarioError(f"{source or 'scenario'}: {exc}") from None
    return Scenario(data["name"], family, options, closed, source)


def load_scenario(path, auto_close: bool | None = None) -> Scenario:
    """Read a scenario file, or a bundled scenario by name (``s1``, ``diamond``...)."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        text = resources.files("tamelab").joinpath("scenarios", f"{path}.json").read_text()
        source = f"bundled:{path}"
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ScenarioError(f"{path}: {exc.strerror}") from None
        source = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(data, auto_close, source)


def bundled() -> list[Scenario]:
    return [load_scenario(name) for name in BUNDLED]
