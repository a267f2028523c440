"""Flat key-value experiment configs.

One config file describes one experiment: lines of ``key = value`` with
``#`` comments, dotted keys for grouped settings, and a ``command`` key
selecting the experiment type.  Every command declares its schema;
unknown keys are rejected by name so configs stay diff-able and honest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .coupling import (
    BoundaryCoupling,
    CouplingModel,
    dirichlet,
    neumann,
    robin,
    scale_invariant,
)
from .errors import ConfigError
from .operators import DomainSpec

COMMANDS = ("spectrum", "duality", "scale-invariance", "kernel-properties",
            "dual-kernels", "propagate", "fold-check")

_BOOL = {"true": True, "false": False, "yes": True, "no": False}


def parse_config_text(text: str) -> dict:
    """Parse the flat key = value grammar into a string map."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = value
    return out


def parse_coupling_entry(text: str) -> BoundaryCoupling:
    token = text.strip().lower()
    if token == "neumann":
        return neumann()
    if token == "dirichlet":
        return dirichlet()
    if token.startswith("robin:"):
        return robin(float(token.split(":", 1)[1]))
    if token.startswith("scale:"):
        return scale_invariant(float(token.split(":", 1)[1]))
    raise ConfigError(
        f"coupling {text!r} not understood; use robin:A, neumann, dirichlet, scale:G"
    )


@dataclass
class Field:
    kind: str  # int | float | str | bool | coupling
    default: object = None
    required: bool = False
    choices: tuple = None


def _convert(key: str, raw: str, spec: Field):
    try:
        if spec.kind == "int":
            return int(raw)
        if spec.kind == "float":
            return float(raw)
        if spec.kind == "bool":
            if raw.lower() not in _BOOL:
                raise ValueError(raw)
            return _BOOL[raw.lower()]
        if spec.kind == "coupling":
            return parse_coupling_entry(raw)
        value = raw
    except (ValueError, ConfigError) as err:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {spec.kind}") from err
    if spec.choices and value not in spec.choices:
        raise ConfigError(f"key {key!r}: must be one of {spec.choices}, got {value!r}")
    return value


_COMMON = {
    "command": Field("str", required=True, choices=COMMANDS),
    "seed": Field("int", 0),
    "n": Field("int", required=True),
}

_DOMAIN = {
    "confinement": Field("str", "box", choices=("box", "harmonic")),
    "length": Field("float", required=True),
    "omega": Field("float", 0.0),
    "offset": Field("float", 0.0),
    "points": Field("int", required=True),
}

SCHEMAS = {
    "spectrum": {
        **_COMMON, **_DOMAIN,
        "formulation": Field("str", "sector",
                             choices=("sector", "delta_bose", "epsilon_fermi")),
        "levels": Field("int", 5),
        "solver_tol": Field("float", 1e-10),
        "gate.residual": Field("float", 1e-8),
    },
    "duality": {
        **_COMMON, **_DOMAIN,
        "levels": Field("int", 5),
        "refinements": Field("int", 3),
        "solver_tol": Field("float", 1e-10),
        "gate.pairwise": Field("float", 0.005),
        "gate.order_min": Field("float", 1.7),
        "gate.order_max": Field("float", 2.3),
        "gate.overlap": Field("float", 1e-6),
    },
    "scale-invariance": {
        **_COMMON, **_DOMAIN,
        "levels": Field("int", 4),
        "dilation": Field("float", 2.0),
        "translation": Field("float", None),
        "control": Field("coupling", robin(-1.0)),
        "solver_tol": Field("float", 1e-10),
        "gate.scaled": Field("float", 0.005),
        "gate.translation": Field("float", 1e-8),
        "gate.control_min": Field("float", 0.05),
    },
    "kernel-properties": {
        **_COMMON,
        "kernel": Field("str", "free", choices=("free", "pair")),
        "coupling": Field("coupling", robin(-1.0)),
        "pairs": Field("int", 3),
        "statistics": Field("str", "none", choices=("none", "bose", "fermi")),
        "quad_tol": Field("float", 1e-9),
        "quad_order": Field("int", 8),
        "initial_depth": Field("int", 5),
        "gate.composition": Field("float", 1e-6),
        "gate.initial": Field("float", 1e-6),
        "gate.symmetry": Field("float", 1e-12),
        "gate.heat": Field("float", 1e-6),
        "gate.invariance": Field("float", 1e-12),
        "gate.boundary": Field("float", 1e-8),
        "gate.pde": Field("float", 1e-6),
    },
    "dual-kernels": {
        **_COMMON,
        "coupling": Field("coupling", dirichlet()),
        "pairs": Field("int", 3),
        "realtime": Field("bool", False),
        "realtime_points": Field("int", 12),
        "realtime_length": Field("float", 6.0),
        "realtime_time": Field("float", 0.1),
        "gate.deviation": Field("float", 1e-6),
        "gate.realtime": Field("float", 1e-8),
    },
    "propagate": {
        **_COMMON,
        "coupling": Field("coupling", robin(-1.0)),
        "tau": Field("float", 0.4),
        "quad_lo": Field("float", -7.0),
        "quad_hi": Field("float", 7.0),
        "quad_cells": Field("int", 20),
        "quad_order": Field("int", 8),
        "center1": Field("float", 1.0),
        "center2": Field("float", -1.0),
        "width": Field("float", 1.0),
        "gate.routes": Field("float", 1e-8),
        "gate.semigroup": Field("float", 1e-7),
    },
    "fold-check": {
        **_COMMON,
        "count": Field("int", 10),
        "quad_tol": Field("float", 1e-9),
        "quad_order": Field("int", 8),
        "gate.residual": Field("float", 1e-8),
    },
}


@dataclass
class ExperimentConfig:
    """Validated experiment settings plus derived objects."""

    command: str
    values: dict
    couplings: dict = field(default_factory=dict)
    text: str = ""

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def domain(self) -> DomainSpec:
        return DomainSpec(
            n=self["n"], length=self["length"], points=self["points"],
            confinement=self["confinement"], omega=self["omega"],
            offset=self["offset"],
        )

    def coupling_model(self) -> CouplingModel:
        n = self["n"]
        entries = []
        for j in range(1, n):
            if j not in self.couplings:
                raise ConfigError(f"missing coupling.{j} (faces are 1..{n - 1})")
            entries.append(self.couplings[j])
        return CouplingModel(tuple(entries))


def validate_config(text: str) -> ExperimentConfig:
    """Validate raw config text against the active command's schema."""
    raw = parse_config_text(text)
    command = raw.get("command")
    if command is None:
        raise ConfigError("missing required key 'command'")
    if command not in COMMANDS:
        raise ConfigError(f"key 'command': unknown command {command!r}")
    schema = SCHEMAS[command]

    values = {}
    couplings = {}
    for key, raw_value in raw.items():
        if key.startswith("coupling.") and command in ("spectrum", "duality",
                                                       "scale-invariance"):
            try:
                j = int(key.split(".", 1)[1])
            except ValueError:
                raise ConfigError(f"unknown key {key!r}")
            couplings[j] = parse_coupling_entry(raw_value)
            continue
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for command {command!r}")
        values[key] = _convert(key, raw_value, schema[key])

    for key, spec in schema.items():
        if key in values:
            continue
        if spec.required:
            raise ConfigError(f"missing required key {key!r}")
        values[key] = spec.default

    cfg = ExperimentConfig(command=command, values=values, couplings=couplings,
                           text=text)
    if command in ("spectrum", "duality", "scale-invariance"):
        n = values["n"]
        for j in couplings:
            if not 1 <= j <= n - 1:
                raise ConfigError(f"key 'coupling.{j}': face index outside 1..{n - 1}")
        cfg.coupling_model()  # raises on missing faces
    return cfg
