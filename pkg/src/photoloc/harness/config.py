"""
Experiment configuration: a flat record serialised as canonical JSON
(sorted keys, two-space indent, trailing newline) and validated against
``CONFIG_SCHEMA``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import jsonschema

from ..lattice import Boundary, LatticeSpec, SymbolVariant
from ..one_photon import ModelParams

KINDS = (
    "spectrum",
    "lemma-equivalence",
    "moments",
    "theta",
    "band",
    "sw-sum",
    "evolve",
    "diagnostics",
    "two-photon-spectrum",
    "two-photon-lemma",
    "two-photon-band",
)


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration."""


_num_list = {"type": "array", "items": {"type": "number"}}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "photoloc experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS), "description": "experiment to run"},
        "d": {"type": "integer", "minimum": 1, "description": "lattice dimension"},
        "L": {"type": "integer", "minimum": 1, "description": "box side length"},
        "boundary": {"enum": [b.value for b in Boundary], "description": "finite-volume convention"},
        "oversample": {"type": ["integer", "null"], "minimum": 4,
                       "description": "dual-grid size for the truncated kernel (null: 8 L)"},
        "variant": {"enum": [v.value for v in SymbolVariant], "description": "Laplacian symbol"},
        "g": {"type": "number", "description": "coupling constant g"},
        "rho0": {"type": "number", "exclusiveMinimum": 0, "description": "background density"},
        "Omega": {"type": "number", "description": "atomic frequency"},
        "s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1, "description": "moment exponent"},
        "energies": {**_num_list, "description": "energy grid E"},
        "mu": {"type": ["number", "null"], "description": "fixed mu; null evaluates at mu = E"},
        "epsilon": {"type": ["number", "null"], "minimum": 0,
                    "description": "imaginary regulator; null picks the default"},
        "n_realizations": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "eta": {**_num_list, "description": "eta grid for the theta table (empty: default grid)"},
        "epsilons": {**_num_list, "description": "decreasing regulators for Simon-Wolff sums"},
        "times": {**_num_list, "description": "recorded evolution times"},
        "couplings": {**_num_list, "description": "g^2 rho0 values for the two-photon band table"},
        "reduction": {"enum": ["derived", "paper"], "description": "two-photon effective-operator coefficients"},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    d: int = 1
    L: int = 32
    boundary: str = Boundary.TRUNCATED_KERNEL.value
    oversample: int | None = None
    variant: str = SymbolVariant.SIN2K.value
    g: float = 1.0
    rho0: float = 1.0
    Omega: float = 1.0
    s: float = 0.9
    energies: tuple = ()
    mu: float | None = None
    epsilon: float | None = None
    n_realizations: int = 1
    master_seed: int = 0
    output_dir: str = "out"
    eta: tuple = ()
    epsilons: tuple = (1e-2, 1e-3, 1e-4)
    times: tuple = (0.0, 1.0, 2.0, 5.0, 10.0)
    couplings: tuple = ()
    reduction: str = "derived"

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                object.__setattr__(self, f.name, tuple(v))
        validate(self.to_dict())
        try:
            self.lattice_spec()
            self.model_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # -- conversions ---------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        validate(data)
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def replace(self, **changes) -> "ExperimentConfig":
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return dataclasses.replace(self, **changes)

    # -- domain objects ------------------------------------------------------
    def lattice_spec(self, L: int | None = None) -> LatticeSpec:
        return LatticeSpec(self.d, self.L if L is None else L, Boundary(self.boundary), self.oversample)

    def model_params(self) -> ModelParams:
        return ModelParams(self.g, self.rho0, self.Omega)


def validate(data: dict[str, Any]) -> None:
    """Raise ConfigError naming the offending key on schema violations."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config key {where}: {exc.message}") from exc


def scalar_fields() -> list[str]:
    """Config fields that a sweep may vary."""
    return [f.name for f in fields(ExperimentConfig)
            if f.name not in ("kind", "output_dir") and not isinstance(f.default, tuple)]


def schema_json() -> str:
    return json.dumps(CONFIG_SCHEMA, sort_keys=True, indent=2) + "\n"
