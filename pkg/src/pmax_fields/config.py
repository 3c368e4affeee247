"""JSON run configuration: schema validation and conversion to model objects."""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction

import jsonschema

from .fields import (
    COMMON_Z,
    AlphaMap,
    IndependentFrechet,
    Location,
    ModelSpec,
    Schlather,
    SchlatherTruncation,
    SpecError,
)
from .stats_core import CorrelationModel

__all__ = ["ConfigError", "CONFIG_SCHEMA", "load_config", "validate_config", "model_from_config", "spec_digest"]

_NUMBER_OR_FRACTION = {
    "oneOf": [
        {"type": "number", "minimum": 0},
        {"type": "string", "pattern": r"^\s*\d+(\.\d+)?\s*(/\s*\d+(\.\d+)?\s*)?$"},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["locations", "alpha"],
            "properties": {
                "innovation": {"enum": ["independent", "schlather"]},
                "weights": {"type": "array", "minItems": 1, "items": _NUMBER_OR_FRACTION},
                "z_coupling": {"enum": ["common", "independent"]},
                "correlation": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "c2": {"type": "number", "exclusiveMinimum": 0},
                        "nu": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
                    },
                },
                "truncation": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "max_points": {"type": "integer", "minimum": 1},
                    },
                },
                "locations": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["id"],
                        "properties": {
                            "id": {"type": "string", "minLength": 1},
                            "x1": {"type": "number"},
                            "x2": {"type": "number"},
                        },
                    },
                },
                "alpha": {
                    "type": "object",
                    "minProperties": 1,
                    "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_time": {"type": "integer", "minimum": 1},
                "r": {"type": "integer", "minimum": 0},
                "x": {"type": "string"},
                "xp": {"type": "string"},
                "input": {"type": "string"},
                "location": {"type": "string"},
                "k": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 100},
                "alphas": {"type": "array", "minItems": 1,
                           "items": {"type": "number", "exclusiveMinimum": 0}},
                "sample_sizes": {"type": "array", "minItems": 1,
                                 "items": {"type": "integer", "minimum": 1}},
                "replicates": {"type": "integer", "minimum": 2},
                "percentiles": {"type": "array", "minItems": 1,
                                "items": {"type": "number", "exclusiveMinimum": 0,
                                          "exclusiveMaximum": 100}},
                "example": {"enum": [1, 2]},
                "transform": {"enum": ["frechet", "raw"]},
                "point_cap": {"type": "integer", "minimum": 1},
                "alpha_settings": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "object",
                              "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
                },
            },
        },
    },
}


class ConfigError(ValueError):
    """Configuration rejected; the message lists every violation."""


def validate_config(doc: dict) -> dict:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [
            f"  {'/'.join(str(p) for p in err.absolute_path) or '<root>'}: {err.message}"
            for err in errors
        ]
        raise ConfigError("invalid configuration:\n" + "\n".join(lines))
    if "model" in doc:
        try:
            model_from_config(doc)
        except (SpecError, ValueError) as exc:
            raise ConfigError(f"invalid model: {exc}") from exc
    return doc


def load_config(path) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return validate_config(doc)


def _weight(value) -> float:
    if isinstance(value, str):
        return float(Fraction(value.replace(" ", "")))
    return float(value)


def model_from_config(doc: dict) -> ModelSpec:
    if "model" not in doc:
        raise ConfigError("configuration has no 'model' section")
    m = doc["model"]
    locations = tuple(
        Location(str(loc["id"]), float(loc.get("x1", 0.0)), float(loc.get("x2", 0.0)))
        for loc in m["locations"]
    )
    extra = set(m["alpha"]) - {loc.id for loc in locations}
    if extra:
        raise ConfigError(f"alpha given for unknown locations {sorted(extra)}")
    corr = CorrelationModel(**m.get("correlation", {}))
    innovation = Schlather(corr) if m.get("innovation", "independent") == "schlather" else IndependentFrechet()
    weights = tuple(_weight(w) for w in m.get("weights", ["2/3", "1/3"]))
    return ModelSpec(
        locations=locations,
        alpha=AlphaMap(m["alpha"]),
        innovation=innovation,
        temporal_weights=weights,
        z_coupling=m.get("z_coupling", COMMON_Z),
        truncation=SchlatherTruncation(**m.get("truncation", {})),
    )


def spec_digest(doc: dict) -> str:
    """Short SHA-256 of the canonical JSON form of the model section."""
    canon = json.dumps(doc.get("model", {}), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
