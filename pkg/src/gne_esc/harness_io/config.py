"""Experiment configuration: JSON schema, presets, defaults and validation.

A configuration document may start from ``"preset": "<name>"`` and override
any field. Player numbers in documents (edges, stubborn keys) are 1-based.
Resolution expands everything into a self-contained document, and
``load_config`` on a resolved document reproduces it exactly.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from ..dynamics import ParameterError, SeekerParams, SwarmState
from ..game_model import (
    COURNOT_ALPHAS,
    COURNOT_BETAS,
    COURNOT_BOUNDS,
    COURNOT_C,
    COURNOT_DEMANDS,
    COURNOT_P0,
    DEFAULT_PENALTY,
    GameError,
    GameSpec,
    QuadraticGame,
    auxiliary_costs,
    cournot_game,
    to_game_spec,
)
from ..graph import GENERATORS, CommGraph, GraphError, is_connected
from ..integrator import MIN_POINTS_PER_PERIOD, IntegratorConfig, StepSizeError

DEFAULT_POINTS_PER_PERIOD = 40


class ConfigError(ValueError):
    """Schema or semantic violation in a configuration document."""

    def __init__(self, rule: str, message: str, pointer: str = "", anchor: str = ""):
        self.rule = rule
        self.pointer = pointer
        self.anchor = anchor
        text = f"[{rule}] {message}"
        if pointer:
            text += f" (at {pointer})"
        if anchor:
            text += f"; requirement: {anchor}"
        super().__init__(text)


_num = {"type": "number"}
_vec_or_num = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 1}]}
_bounds = {
    "type": "array",
    "items": {
        "oneOf": [
            {"type": "null"},
            {"type": "array", "minItems": 2, "maxItems": 2,
             "items": {"oneOf": [_num, {"type": "null"}]}},
        ]
    },
}

SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"type": "string"},
        "name": {"type": "string"},
        "seed": {"type": "integer"},
        "game": {
            "oneOf": [
                {"type": "string"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"enum": ["cournot", "quadratic"]},
                        "alphas": {"type": "array", "items": _num},
                        "betas": {"type": "array", "items": _num},
                        "p0": _num,
                        "c": {"oneOf": [_num, {"type": "array", "items": _num}]},
                        "D": {"type": "array"},
                        "b": {"type": "array"},
                        "demands": {"type": "array", "items": _num},
                        "bounds": {"oneOf": [{"type": "null"}, _bounds]},
                        "penalties": _vec_or_num,
                    },
                },
            ]
        },
        "graph": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "n"],
            "properties": {
                "type": {"enum": ["ring", "path", "complete", "star", "edges"]},
                "n": {"type": "integer", "minimum": 1},
                "edges": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                },
            },
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": _vec_or_num,
                "b": _vec_or_num,
                "wl": _vec_or_num,
                "wh": _vec_or_num,
                "wbar": {"type": "array", "items": _num, "minItems": 1},
                "w": _num,
                "delta": _num,
                "alpha": _num,
                "m_assumed": {"oneOf": [_num, {"type": "null"}]},
                "phi": {"oneOf": [_num, {"type": "null"}]},
                "amplitude_dynamics": {"type": "boolean"},
                "amp_min": {"oneOf": [_num, {"type": "null"}]},
            },
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": _num,
                "points_per_period": {"type": "integer", "minimum": 1},
                "t_end": _num,
                "method": {"enum": ["rk4", "euler"]},
                "record_every": {"type": "integer", "minimum": 1},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "xhat": {
                    "oneOf": [
                        _vec_or_num,
                        {"type": "object", "required": ["uniform"], "additionalProperties": False,
                         "properties": {"uniform": {"type": "array", "items": _num,
                                                    "minItems": 2, "maxItems": 2}}},
                    ]
                },
                "mu": _vec_or_num,
                "z": _vec_or_num,
                "amp": _vec_or_num,
                "nlow": {"oneOf": [_vec_or_num, {"enum": ["warm"]}]},
            },
        },
        "stubborn": {
            "type": "object",
            "patternProperties": {"^[0-9]+$": _num},
            "additionalProperties": False,
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"oneOf": [{"type": "string"}, {"type": "null"}]},
                "formats": {"type": "array", "items": {"enum": ["csv", "json"]}},
            },
        },
    },
}


def cournot4_document() -> dict:
    """Four-firm Cournot network on a ring, as in the simulation study."""
    return {
        "name": "cournot4",
        "seed": 0,
        "game": {
            "type": "cournot",
            "alphas": list(COURNOT_ALPHAS),
            "betas": list(COURNOT_BETAS),
            "p0": COURNOT_P0,
            "c": COURNOT_C,
            "demands": list(COURNOT_DEMANDS),
            "bounds": [list(b) for b in COURNOT_BOUNDS],
            "penalties": DEFAULT_PENALTY,
        },
        "graph": {"type": "ring", "n": 4},
        "params": {
            "k": 3.0,
            "b": 1.0,
            "wl": 0.5,
            "wh": 5.0,
            "wbar": [100.0, 101.0, 103.0, 98.0],
            "w": 1.0,
            "delta": 0.05,
            # The consensus gain and analysis constants are not given for this
            # example; these satisfy the gain conditions at the initial amplitude.
            "alpha": 5.0,
            "m_assumed": 2.04,
            "phi": 2.5,
            "amplitude_dynamics": True,
            "amp_min": None,
        },
        "integrator": {"points_per_period": DEFAULT_POINTS_PER_PERIOD, "t_end": 300.0,
                       "method": "rk4", "record_every": 10},
        "initial": {"xhat": [1.0, 2.0, 3.0, 4.0], "mu": 0.0, "z": 0.0, "amp": 0.2, "nlow": 0.0},
        "stubborn": {},
        "outputs": {"dir": None, "formats": ["csv", "json"]},
    }


PRESETS = {"cournot4": cournot4_document}


def preset(name: str) -> dict:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError("unknown-preset", f"no preset named {name!r}; known: {sorted(PRESETS)}") from None


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "stubborn":
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def validate_schema(doc: dict) -> None:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError("schema", err.message, _pointer(err.absolute_path))


def _per_agent(value, n: int, name: str) -> list:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(n, float(arr[0]))
    if arr.size != n:
        raise ConfigError("n-mismatch", f"{name} has {arr.size} entries, expected {n}", f"/{name}")
    return [float(v) for v in arr]


@dataclass(eq=False)
class ExperimentConfig:
    """A resolved, validated experiment."""

    document: dict
    quadratic: Optional[QuadraticGame]
    game: GameSpec
    bounds: Optional[list]
    graph: CommGraph
    params: SeekerParams
    integrator: IntegratorConfig
    initial: SwarmState
    stubborn: dict
    seed: int

    @property
    def name(self) -> str:
        return self.document.get("name", "experiment")

    def to_dict(self) -> dict:
        return copy.deepcopy(self.document)


def _build_game(gdoc: dict):
    kind = gdoc["type"]
    if kind == "cournot":
        alphas = gdoc.get("alphas", list(COURNOT_ALPHAS))
        n = len(alphas)
        resolved = {
            "type": "cournot",
            "alphas": [float(v) for v in alphas],
            "betas": _per_agent(gdoc.get("betas", list(COURNOT_BETAS)), n, "game/betas"),
            "p0": float(gdoc.get("p0", COURNOT_P0)),
            "c": float(gdoc.get("c", COURNOT_C)),
            "demands": _per_agent(gdoc.get("demands", list(COURNOT_DEMANDS)), n, "game/demands"),
        }
        qg = cournot_game(resolved["alphas"], resolved["betas"], resolved["p0"], resolved["c"],
                          resolved["demands"])
    else:
        try:
            D = np.asarray(gdoc["D"], dtype=float)
            n = D.shape[0]
            resolved = {
                "type": "quadratic",
                "D": D.tolist(),
                "b": np.asarray(gdoc["b"], dtype=float).tolist(),
                "c": _per_agent(gdoc.get("c", 0.0), n, "game/c"),
                "demands": _per_agent(gdoc["demands"], n, "game/demands"),
            }
        except KeyError as exc:
            raise ConfigError("schema", f"quadratic game needs {exc.args[0]!r}", "/game") from None
        qg = QuadraticGame(D=resolved["D"], b=resolved["b"], c=resolved["c"], demands=resolved["demands"])
    n = qg.n_players
    bounds = gdoc.get("bounds")
    if bounds is not None:
        if len(bounds) != n:
            raise ConfigError("n-mismatch", f"bounds has {len(bounds)} entries, expected {n}", "/game/bounds")
        bounds = [None if b is None else [None if v is None else float(v) for v in b] for b in bounds]
    resolved["bounds"] = bounds
    penalties = _per_agent(gdoc.get("penalties", DEFAULT_PENALTY), n, "game/penalties")
    resolved["penalties"] = penalties
    spec = to_game_spec(qg, None if bounds is None else [None if b is None else tuple(b) for b in bounds],
                        penalties)
    return resolved, qg, spec, bounds


def _build_graph(gdoc: dict, n: int):
    if gdoc["n"] != n:
        raise ConfigError("n-mismatch", f"graph has {gdoc['n']} nodes, game has {n} players", "/graph/n")
    if gdoc["type"] == "edges":
        edges = gdoc.get("edges", [])
        graph = CommGraph(n, [(i - 1, j - 1) for i, j in edges])
        resolved = {"type": "edges", "n": n, "edges": [list(e) for e in edges]}
    else:
        graph = GENERATORS[gdoc["type"]](n)
        resolved = {"type": gdoc["type"], "n": n}
    return resolved, graph


def resolve(doc: dict, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Validate a configuration document and expand it into an experiment."""
    validate_schema(doc)
    if "preset" in doc:
        doc = deep_merge(preset(doc["preset"]), {k: v for k, v in doc.items() if k != "preset"})
    if isinstance(doc.get("game"), str):
        doc = deep_merge(doc, {"game": preset(doc["game"])["game"]})
    for key in ("game", "graph", "params", "initial"):
        if key not in doc:
            raise ConfigError("schema", f"missing required section {key!r}", "/")
    validate_schema(doc)
    seed = int(doc.get("seed", 0))
    rng = np.random.default_rng(seed)

    try:
        game_doc, qg, spec, bounds = _build_game(doc["game"])
    except GameError as exc:
        raise ConfigError("game", str(exc), "/game") from None
    n = qg.n_players

    try:
        graph_doc, graph = _build_graph(doc["graph"], n)
    except GraphError as exc:
        raise ConfigError("graph", str(exc), "/graph") from None

    stubborn_doc = {str(int(k)): float(v) for k, v in sorted(doc.get("stubborn", {}).items(), key=lambda kv: int(kv[0]))}
    stubborn = {int(k) - 1: v for k, v in stubborn_doc.items()}
    for i in stubborn:
        if not 0 <= i < n:
            raise ConfigError("stubborn-index", f"stubborn player {i + 1} out of range 1..{n}", "/stubborn")
    seekers = [i for i in range(n) if i not in stubborn]
    if not seekers:
        raise ConfigError("stubborn-index", "every player is stubborn; nobody runs the seeker", "/stubborn")
    if not is_connected(graph.subgraph(seekers)):
        raise ConfigError("graph-connected", "communication graph among seeking players is not connected",
                          "/graph", "players communicate over an undirected connected graph")

    pdoc = doc.get("params", {})
    if "wbar" not in pdoc:
        raise ConfigError("schema", "params.wbar is required", "/params")
    params_doc = {
        "k": _per_agent(pdoc.get("k", 1.0), n, "params/k"),
        "b": _per_agent(pdoc.get("b", 1.0), n, "params/b"),
        "wl": _per_agent(pdoc.get("wl", 0.5), n, "params/wl"),
        "wh": _per_agent(pdoc.get("wh", 5.0), n, "params/wh"),
        "wbar": _per_agent(pdoc["wbar"], n, "params/wbar"),
        "w": float(pdoc.get("w", 1.0)),
        "delta": float(pdoc.get("delta", 0.05)),
        "alpha": float(pdoc.get("alpha", 1.0)),
        "m_assumed": None if pdoc.get("m_assumed") is None else float(pdoc["m_assumed"]),
        "phi": None if pdoc.get("phi") is None else float(pdoc["phi"]),
        "amplitude_dynamics": bool(pdoc.get("amplitude_dynamics", True)),
        "amp_min": None if pdoc.get("amp_min") is None else float(pdoc["amp_min"]),
    }
    try:
        params = SeekerParams(**params_doc)
    except ParameterError as exc:
        raise ConfigError("params", str(exc), "/params") from None

    idoc = doc.get("integrator", {})
    w_max = float(params.frequencies.max())
    period = 2.0 * math.pi / w_max
    if "dt" in idoc:
        dt = float(idoc["dt"])
    else:
        dt = period / int(idoc.get("points_per_period", DEFAULT_POINTS_PER_PERIOD))
    if dt > period / MIN_POINTS_PER_PERIOD:
        raise ConfigError("step-size", f"dt={dt:.4g} resolves the fastest dither period ({period:.4g} s) "
                          f"with fewer than {MIN_POINTS_PER_PERIOD} steps", "/integrator/dt",
                          "a fixed step must resolve the dither signals")
    integ_doc = {
        "dt": dt,
        "t_end": float(idoc.get("t_end", 200.0)),
        "method": idoc.get("method", "rk4"),
        "record_every": int(idoc.get("record_every", 1)),
    }
    try:
        integ = IntegratorConfig(**integ_doc)
    except (StepSizeError, ValueError) as exc:
        raise ConfigError("integrator", str(exc), "/integrator") from None

    init = doc.get("initial", {})
    if "xhat" not in init:
        raise ConfigError("schema", "initial.xhat is required", "/initial")
    if isinstance(init["xhat"], dict):
        lo, hi = init["xhat"]["uniform"]
        xhat = [float(v) for v in rng.uniform(lo, hi, n)]
    else:
        xhat = _per_agent(init["xhat"], n, "initial/xhat")
    for i, v in stubborn.items():
        xhat[i] = v
    mu = _per_agent(init.get("mu", 0.0), n, "initial/mu")
    z = _per_agent(init.get("z", 0.0), n, "initial/z")
    amp = _per_agent(init.get("amp", 0.2), n, "initial/amp")
    for i in stubborn:
        mu[i] = z[i] = amp[i] = 0.0
    if abs(sum(z)) > 1e-12:
        raise ConfigError("z-sum-zero", f"initial z sums to {sum(z):.6g}", "/initial/z",
                          "auxiliary variables start with zero sum")
    if any(amp[i] <= 0 for i in seekers):
        raise ConfigError("amp-positive", "initial dither amplitudes must be positive", "/initial/amp",
                          "a_i(t0) > 0 for every seeking player")
    nlow_doc = init.get("nlow", "warm")
    if nlow_doc == "warm":
        nlow = [float(v) for v in auxiliary_costs(spec, np.array(xhat))]
    else:
        nlow = _per_agent(nlow_doc, n, "initial/nlow")
    for i in stubborn:
        nlow[i] = 0.0
    initial_doc = {"xhat": xhat, "mu": mu, "z": z, "amp": amp, "nlow": nlow}
    initial = SwarmState.initial(xhat, mu, z, amp, nlow)

    odoc = doc.get("outputs", {})
    outputs_doc = {"dir": odoc.get("dir"), "formats": list(odoc.get("formats", ["csv", "json"]))}

    resolved = {
        "name": doc.get("name", "experiment"),
        "seed": seed,
        "game": game_doc,
        "graph": graph_doc,
        "params": params_doc,
        "integrator": integ_doc,
        "initial": initial_doc,
        "stubborn": stubborn_doc,
        "outputs": outputs_doc,
    }
    return ExperimentConfig(
        document=resolved,
        quadratic=qg,
        game=spec,
        bounds=bounds,
        graph=graph,
        params=params,
        integrator=integ,
        initial=initial,
        stubborn=stubborn,
        seed=seed,
    )


def read_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("io", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("json", f"{path}: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise ConfigError("schema", "configuration must be a JSON object", "/")
    return doc


def load_config(path) -> ExperimentConfig:
    """Read, validate and fully resolve a JSON configuration file.

    ``path`` may also be the name of a built-in preset such as ``cournot4``.
    """
    if str(path) in PRESETS and not Path(path).exists():
        return resolve({"preset": str(path)})
    return resolve(read_document(path))


def dumps_document(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def set_path(doc: dict, dotted: str, value: Any) -> dict:
    """Return a copy of ``doc`` with a dotted-path field replaced.

    Bare parameter names such as ``w`` or ``alpha`` refer to ``params``.
    """
    if "." not in dotted:
        dotted = "params." + dotted
    out = copy.deepcopy(doc)
    node = out
    parts = dotted.split(".")
    for key in parts[:-1]:
        node = node.setdefault(key, {})
    node[parts[-1]] = value
    return out
