"""Run-configuration schema, validation, and builders for states and events.

A configuration is one JSON document::

    {
      "kind": "discrete",                 # optional; must match the subcommand
      "system": {...},                    # per-kind, see SYSTEM_SCHEMAS
      "requests": [{"quantity": "CE", "event": {"indices": [0, 1]}}, ...],
      "format": "json",                   # or "csv"; --format overrides
      "seed": 0,
      "tolerance_scale": 1.0
    }

Event objects take exactly one of the forms ``{"all": true}``,
``{"indices": [...]}``, ``{"values": [lo, hi]}`` (discrete eigenvalue range),
``{"intervals": [[lo, hi], ...]}``, ``{"x": [[lo, hi], ...], "y": [...]}``
(2D product; a missing axis means unrestricted),
``{"occupation": {"mode": j, "min": a, "max": b}}`` (or a list of those) and
``{"total": {"min": a, "max": b}}`` (the last two may be combined).
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .core import OMEGA, DiscreteSet, FockPredicate, IntervalUnion, ProductEvent
from .errors import ConfigError

KINDS = ("discrete", "grid1d", "grid2d", "fock", "evolve", "noncomm")

_num = {"type": "number"}
_complex = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}]}
_interval = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_intervals = {"type": "array", "items": _interval}
_occupation = {
    "type": "object",
    "properties": {"mode": {"type": "integer", "minimum": 0},
                   "min": {"type": "integer"}, "max": {"type": "integer"}},
    "required": ["mode"],
    "additionalProperties": False,
}
_range = {
    "type": "object",
    "properties": {"min": {"type": "integer"}, "max": {"type": "integer"}},
    "additionalProperties": False,
}

EVENT_SCHEMA = {
    "type": "object",
    "properties": {
        "all": {"const": True},
        "indices": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "values": _interval,
        "intervals": _intervals,
        "x": _intervals,
        "y": _intervals,
        "occupation": {"oneOf": [_occupation, {"type": "array", "items": _occupation}]},
        "total": _range,
    },
    "additionalProperties": False,
    "minProperties": 1,
}

GRID_SCHEMA = {
    "type": "object",
    "oneOf": [
        {"properties": {"lo": _num, "hi": _num, "n": {"type": "integer", "minimum": 2},
                        "layout": {"enum": ["cells", "nodes"]}},
         "required": ["lo", "hi", "n"], "additionalProperties": False},
        {"properties": {"x0": _num, "dx": {"type": "number", "exclusiveMinimum": 0},
                        "n": {"type": "integer", "minimum": 2}},
         "required": ["x0", "dx", "n"], "additionalProperties": False},
    ],
}

_request_common = {
    "quantity": {"type": "string"},
    "event": EVENT_SCHEMA,
    "given": EVENT_SCHEMA,
    "label": {"type": "string"},
}


def _request_schema(quantities, extra=None):
    props = dict(_request_common)
    props["quantity"] = {"enum": list(quantities)}
    props.update(extra or {})
    return {"type": "object", "properties": props, "required": ["quantity"],
            "additionalProperties": False}


SYSTEM_SCHEMAS = {
    "discrete": {
        "type": "object",
        "properties": {
            "eigenvalues": {"type": "array", "items": _num, "minItems": 1},
            "amplitudes": {"type": "array", "items": _complex, "minItems": 1},
            "preset": {"enum": ["harmonic-oscillator"]},
            "levels": {"type": "integer", "minimum": 1},
            "hbar_omega": {"type": "number", "exclusiveMinimum": 0},
            "recipe": {"enum": ["ground", "coherent", "thermal"]},
            "alpha": _complex,
            "beta": {"type": "number", "exclusiveMinimum": 0},
        },
        "additionalProperties": False,
        "oneOf": [{"required": ["eigenvalues", "amplitudes"]}, {"required": ["preset", "levels"]}],
    },
    "grid1d": {
        "type": "object",
        "properties": {
            "preset": {"enum": ["gaussian"]},
            "center": _num, "sigma": {"type": "number", "exclusiveMinimum": 0}, "k0": _num,
            "grid": GRID_SCHEMA,
            "file": {"type": "string"},
        },
        "additionalProperties": False,
        "oneOf": [{"required": ["preset", "grid"]}, {"required": ["file"]}],
    },
    "grid2d": {
        "type": "object",
        "properties": {
            "preset": {"enum": ["bivariate-normal", "box2d", "product-gaussian"]},
            "sigmas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                       "minItems": 2, "maxItems": 2},
            "centers": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
            "correlation": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
            "quantum_numbers": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                "minItems": 2, "maxItems": 2},
            "lengths": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                        "minItems": 2, "maxItems": 2},
            "n": {"type": "integer", "minimum": 2},
            "grid_x": GRID_SCHEMA,
            "grid_y": GRID_SCHEMA,
        },
        "required": ["preset"],
        "additionalProperties": False,
    },
    "fock": {
        "type": "object",
        "properties": {
            "mode_energies": {"type": "array", "items": _num, "minItems": 1},
            "beta": {"type": "number", "exclusiveMinimum": 0},
            "temperature": {"type": "number", "exclusiveMinimum": 0},
            "k": {"type": "number", "exclusiveMinimum": 0},
            "mu": _num,
            "statistics": {"enum": ["fermion", "boson"]},
            "n_max": {"type": "integer", "minimum": 1},
        },
        "required": ["mode_energies", "statistics"],
        "additionalProperties": False,
        "oneOf": [{"required": ["beta"]}, {"required": ["temperature"]}],
    },
    "evolve": {
        "type": "object",
        "properties": {
            "preset": {"enum": ["rabi"]},
            "coupling": _num,
            "hamiltonian": {"type": "array", "items": {"type": "array", "items": _complex}},
            "initial": {"type": "array", "items": _complex, "minItems": 1},
            "observable": {"type": "array", "items": _num},
            "hbar": {"type": "number", "exclusiveMinimum": 0},
            "times": {"oneOf": [
                {"type": "array", "items": _num, "minItems": 1},
                {"type": "object",
                 "properties": {"start": _num, "stop": _num,
                                "count": {"type": "integer", "minimum": 1}},
                 "required": ["start", "stop", "count"], "additionalProperties": False},
            ]},
            "event": EVENT_SCHEMA,
            "given": EVENT_SCHEMA,
            "ce_event": EVENT_SCHEMA,
        },
        "required": ["times"],
        "additionalProperties": False,
        "oneOf": [{"required": ["preset"]}, {"required": ["hamiltonian", "initial"]}],
    },
    "noncomm": {
        "type": "object",
        "properties": {
            "preset": {"enum": ["gaussian"]},
            "center": _num, "sigma": {"type": "number", "exclusiveMinimum": 0}, "k0": _num,
            "domain": _interval,
            "cells": {"type": "integer", "minimum": 2},
            "levels": {"type": "integer", "minimum": 2, "maximum": 8},
            "hbar": {"type": "number", "exclusiveMinimum": 0},
            "boundary": {"enum": ["zero", "periodic"]},
        },
        "required": ["preset"],
        "additionalProperties": False,
    },
}

REQUEST_SCHEMAS = {
    "discrete": _request_schema(["CE", "AP", "CP", "EXPECTATION"]),
    "grid1d": _request_schema(["CE", "AP", "CP", "EXPECTATION"]),
    "grid2d": _request_schema(
        ["CE", "AP", "CP", "INDEPENDENCE", "CE_POINT", "CP_POINT", "MARGINALS"],
        {"observable": {"enum": ["x", "y", "xy", "x2", "y2", "one"]},
         "x": _num, "y": _num, "tol": {"type": "number", "exclusiveMinimum": 0}}),
    "fock": _request_schema(
        ["CE", "AP", "CP", "PARTITION", "OCCUPATION", "MEAN"],
        {"observable": {"type": "array", "items": _num}, "mode": {"type": "integer", "minimum": 0}}),
    "evolve": _request_schema(["SERIES"]),
    "noncomm": _request_schema(
        ["DIVERGENCE", "QUASI_CP", "COMMUTATOR"],
        {"x": _num, "n": {"type": "integer", "minimum": 3}}),
}


def config_schema(kind):
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "properties": {
            "kind": {"const": kind},
            "system": SYSTEM_SCHEMAS[kind],
            "requests": {"type": "array", "items": REQUEST_SCHEMAS[kind]},
            "format": {"enum": ["json", "csv"]},
            "seed": {"type": "integer", "minimum": 0},
            "tolerance_scale": {"type": "number", "minimum": 1},
        },
        "required": ["system"],
        "additionalProperties": False,
    }


def _path(error):
    parts = []
    for p in error.absolute_path:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        else:
            parts.append(("." if parts else "") + str(p))
    return "".join(parts) or "<root>"


def load_config(path, kind):
    """Parse and validate a configuration file for subcommand ``kind``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                          str(path)) from None
    validate_config(doc, kind)
    return doc


def validate_config(doc, kind):
    if kind not in KINDS:
        raise ConfigError(f"unknown system kind {kind!r}")
    validator = jsonschema.Draft202012Validator(config_schema(kind))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = min(errors, key=lambda e: -len(list(e.absolute_path)))
        raise ConfigError(_short_message(err), _path(err))
    return doc


def _short_message(err):
    if err.validator == "additionalProperties":
        return err.message
    if err.validator in ("oneOf", "anyOf"):
        return "does not match any accepted form"
    return err.message


def config_hash(doc):
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# -- builders ------------------------------------------------------------

def to_complex(v):
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def build_event(spec, kind="discrete", state=None):
    """Turn a JSON event object into an :class:`~qprob.core.Event`."""
    if spec is None or spec.get("all"):
        return OMEGA
    if "indices" in spec:
        return DiscreteSet(tuple(spec["indices"]))
    if "values" in spec:
        from .discrete import events_by_value

        if state is None:
            raise ConfigError("value-range events need a discrete state", "event.values")
        return events_by_value(state, *spec["values"])
    if "intervals" in spec:
        return IntervalUnion(tuple(tuple(i) for i in spec["intervals"]))
    if "x" in spec or "y" in spec:
        axes = [IntervalUnion(tuple(tuple(i) for i in spec[ax])) if ax in spec else OMEGA
                for ax in ("x", "y")]
        return ProductEvent(tuple(axes))
    if "occupation" in spec or "total" in spec:
        occ = spec.get("occupation", [])
        occ = [occ] if isinstance(occ, dict) else occ
        bounds = tuple((o["mode"], o.get("min", 0), o.get("max", 2**31)) for o in occ)
        total = None
        if "total" in spec:
            total = (spec["total"].get("min", 0), spec["total"].get("max", 2**31))
        return FockPredicate(bounds, total)
    raise ConfigError("unrecognized event", "event")


def build_grid(spec):
    from .grid import UniformGrid

    if "dx" in spec:
        return UniformGrid(float(spec["x0"]), float(spec["dx"]), int(spec["n"]))
    if spec["hi"] <= spec["lo"]:
        raise ConfigError("hi must exceed lo", "grid")
    if spec.get("layout", "cells") == "nodes":
        return UniformGrid.nodes(float(spec["lo"]), float(spec["hi"]), int(spec["n"]))
    return UniformGrid.spanning(float(spec["lo"]), float(spec["hi"]), int(spec["n"]))


def harmonic_oscillator(levels, hbar_omega=1.0, recipe="ground", alpha=0.0, beta=1.0):
    """Eigenvalues ``(i + 1/2) hbar_omega`` and amplitudes for one recipe.

    ``ground``: all weight on level 0.  ``coherent``: Poisson-weighted
    ``alpha**n / sqrt(n!)`` (truncated, renormalized).  ``thermal``: the pure
    state with Boltzmann populations ``exp(-beta hbar_omega n)``.
    """
    n = np.arange(levels)
    eps = (n + 0.5) * hbar_omega
    if recipe == "ground":
        amp = (n == 0).astype(complex)
    elif recipe == "coherent":
        alpha = complex(alpha)
        log_fact = np.array([math.lgamma(k + 1) for k in n])
        mag = np.exp(-abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - log_fact / 2) if alpha else (n == 0) * 1.0
        amp = mag * np.exp(1j * n * np.angle(alpha))
    elif recipe == "thermal":
        amp = np.sqrt(np.exp(-beta * hbar_omega * n)).astype(complex)
    else:
        raise ConfigError(f"unknown recipe {recipe!r}", "system.recipe")
    return eps, amp


def build_discrete(system):
    from .discrete import DiscreteState

    if "preset" in system:
        eps, amp = harmonic_oscillator(system["levels"], system.get("hbar_omega", 1.0),
                                       system.get("recipe", "ground"),
                                       to_complex(system.get("alpha", 0.0)),
                                       system.get("beta", 1.0))
        return DiscreteState(eps, amp)
    if len(system["eigenvalues"]) != len(system["amplitudes"]):
        raise ConfigError("eigenvalues and amplitudes differ in length", "system.amplitudes")
    return DiscreteState(system["eigenvalues"], [to_complex(a) for a in system["amplitudes"]])


def build_grid1d(system, base_dir="."):
    from . import grid

    if "file" in system:
        path = Path(system["file"])
        if not path.is_absolute():
            path = Path(base_dir) / path
        try:
            return grid.load_samples(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc), "system.file") from None
    g = build_grid(system["grid"])
    return grid.gaussian(g, system.get("center", 0.0), system.get("sigma", 1.0), system.get("k0", 0.0))


def build_grid2d(system):
    from . import grid

    preset = system["preset"]
    if preset == "box2d":
        nx, ny = system.get("quantum_numbers", [1, 1])
        lx, ly = system.get("lengths", [1.0, 1.0])
        return grid.box2d(nx, ny, lx, ly, system.get("n", 128))
    default = {"lo": -8.0, "hi": 8.0, "n": 257, "layout": "nodes"}
    gx = build_grid(system.get("grid_x", default))
    gy = build_grid(system.get("grid_y", system.get("grid_x", default)))
    sx, sy = system.get("sigmas", [1.0, 1.0])
    cx, cy = system.get("centers", [0.0, 0.0])
    if preset == "bivariate-normal":
        return grid.bivariate_normal(gx, gy, sx, sy, system.get("correlation", 0.0), (cx, cy))
    return grid.GridState2D.separable(grid.gaussian(gx, cx, sx), grid.gaussian(gy, cy, sy))


def build_fock(system):
    from .fock import FockEnsemble

    beta = system["beta"] if "beta" in system else 1.0 / (system.get("k", 1.0) * system["temperature"])
    try:
        return FockEnsemble(tuple(system["mode_energies"]), beta, system.get("mu", 0.0),
                            system["statistics"], system.get("n_max"))
    except ValueError as exc:
        raise ConfigError(str(exc), "system") from None


def build_evolve(system):
    """Return ``(h, psi0, observable, times, hbar)``."""
    if "preset" in system:
        g = system.get("coupling", 1.0)
        h = np.array([[0.0, g], [g, 0.0]], dtype=complex)
        psi0 = np.array([1.0, 0.0], dtype=complex)
    else:
        h = np.array([[to_complex(v) for v in row] for row in system["hamiltonian"]])
        psi0 = np.array([to_complex(v) for v in system["initial"]])
        if h.ndim != 2 or h.shape != (psi0.size, psi0.size):
            raise ConfigError("hamiltonian must be square and match the initial state",
                              "system.hamiltonian")
    obs = np.array(system.get("observable", np.arange(psi0.size)), dtype=float)
    if obs.shape != psi0.shape:
        raise ConfigError("observable length must match the state dimension", "system.observable")
    times = system["times"]
    if isinstance(times, dict):
        times = np.linspace(times["start"], times["stop"], times["count"])
    return h, psi0, obs, np.asarray(times, dtype=float), float(system.get("hbar", 1.0))
