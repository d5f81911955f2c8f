"""Declarative JSON scenarios, the built-in catalogue, and eager validation.

Vertex indices in scenario documents are 1-based; everything built from a
scenario uses 0-based indices.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import jsonschema
import numpy as np

from .control import LAWS
from .exceptions import (
    ArgumentError,
    AssumptionError,
    RepresentationError,
    ScenarioError,
    SymmetryError,
)
from .rigidity import Framework, SymmetryContext
from .sim import IntegratorConfig
from .symmetry import (
    Graph,
    GroupAction,
    _first_bad_edge,
    check_permutation,
    cycle_notation,
    group_closure,
    orbit_spanning_trees,
    rotation_matrix,
    standard_representation,
)

SCENARIO_DIR_ENV = "SYMFORMA_SCENARIO_DIR"

_INDEX_PAIR = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2}
_POINTS = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    "minItems": 1,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "graph", "symmetry", "target", "controller"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "graph": {
            "type": "object",
            "required": ["n", "edges"],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "edges": {"type": "array", "items": _INDEX_PAIR},
            },
        },
        "symmetry": {
            "type": "object",
            "required": ["generators", "representation"],
            "additionalProperties": False,
            "properties": {
                "generators": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                },
                "representation": {
                    "type": "object",
                    "required": ["kind"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["trivial", "rotation", "reflection", "dihedral"]},
                        "params": {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {
                                "order": {"type": "integer", "minimum": 1},
                                "powers": {"type": "array", "items": {"type": "integer"}},
                                "axis_deg": {"type": "number"},
                                "rotation_power": {"type": "integer"},
                            },
                        },
                    },
                },
            },
        },
        "target": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p_star": _POINTS,
                "distances": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "prefixItems": [
                            {"type": "integer", "minimum": 1},
                            {"type": "integer", "minimum": 1},
                            {"type": "number", "exclusiveMinimum": 0},
                        ],
                        "minItems": 3,
                        "maxItems": 3,
                    },
                },
            },
            "oneOf": [{"required": ["p_star"]}, {"required": ["distances"]}],
        },
        "initial": {
            "type": "object",
            "required": ["mode"],
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["perturb", "points"]},
                "seed": {"type": "integer", "minimum": 0},
                "magnitude": {"type": "number", "minimum": 0},
                "offset": {"type": "array", "items": {"type": "number"}},
                "points": _POINTS,
            },
        },
        "controller": {"enum": list(LAWS)},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["rk4", "euler"]},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "divergence_guard": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "consensus": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "r0": {"enum": ["equal_to_p0", "zeros", "explicit"]},
                "points": _POINTS,
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _json_path(error: jsonschema.ValidationError) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path)
    return path.lstrip(".") or "<root>"


@dataclass(frozen=True)
class Setup:
    """Objects derived from a scenario, built once at load time."""

    graph: Graph
    action: GroupAction
    context: SymmetryContext
    framework: Framework
    trees: list | None
    assumption_error: str | None
    p0: np.ndarray
    r0: np.ndarray | None
    config: IntegratorConfig


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated scenario document.

    Equality compares the normalized documents; derived objects are available
    through :attr:`setup`.
    """

    document: dict = field(repr=False)

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.document == other.document

    def __hash__(self):
        return hash(self.content_hash)

    def __repr__(self):
        return f"Scenario(name={self.name!r}, n={self.n}, controller={self.controller!r})"

    @property
    def name(self) -> str:
        return self.document["name"]

    @property
    def n(self) -> int:
        return self.document["graph"]["n"]

    @property
    def controller(self) -> str:
        return self.document["controller"]

    @property
    def content_hash(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()

    @cached_property
    def setup(self) -> Setup:
        return _build(self.document)

    def with_overrides(self, *, controller=None, dt=None, T=None, seed=None) -> "Scenario":
        doc = copy.deepcopy(self.document)
        if controller is not None:
            doc["controller"] = controller
        if dt is not None:
            doc["integrator"]["dt"] = dt
        if T is not None:
            doc["integrator"]["T"] = T
        if seed is not None:
            doc["initial"]["seed"] = seed
        return parse_document(doc)


_DEFAULTS = {
    "initial": {"mode": "perturb", "seed": 0, "magnitude": 0.0},
    "integrator": {"method": "rk4", "dt": 1e-3, "T": 50.0, "divergence_guard": 1e6},
    "consensus": {"r0": "equal_to_p0"},
}


def _normalize(doc: dict) -> dict:
    doc = copy.deepcopy(doc)
    doc.setdefault("description", "")
    for key, defaults in _DEFAULTS.items():
        doc[key] = {**defaults, **doc.get(key, {})}
    doc["symmetry"]["representation"].setdefault("params", {})
    for key in ("dt", "T", "divergence_guard"):
        doc["integrator"][key] = float(doc["integrator"][key])
    return doc


def parse_document(doc: dict) -> Scenario:
    """Validate a decoded scenario document and build its derived objects eagerly."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, _json_path(err))
    scenario = Scenario(_normalize(doc))
    scenario.setup  # noqa: B018 - surface semantic errors at load
    return scenario


def parse_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", "<root>") from exc
    return parse_document(doc)


def serialize(scenario: Scenario) -> str:
    return json.dumps(scenario.document, indent=2, sort_keys=True)


def load_scenario(ref: str | os.PathLike) -> Scenario:
    """Resolve ``ref`` as a file path, a built-in name, or ``<name>.json`` under ``$SYMFORMA_SCENARIO_DIR``."""
    path = Path(ref)
    if path.suffix == ".json" and path.is_file():
        return parse_scenario(path.read_text())
    name = str(ref)
    env_dir = os.environ.get(SCENARIO_DIR_ENV)
    if env_dir:
        candidate = Path(env_dir) / f"{name}.json"
        if candidate.is_file():
            return parse_scenario(candidate.read_text())
    docs = builtin_documents()
    if name in docs:
        return parse_document(docs[name])
    raise ScenarioError(f"no scenario file or built-in named {name!r}", "<root>")


# ---------------------------------------------------------------------------
# semantic validation and construction


def _build(doc: dict) -> Setup:
    n = doc["graph"]["n"]
    edges = []
    seen = set()
    for k, (i, j) in enumerate(doc["graph"]["edges"]):
        path = f"graph.edges[{k}]"
        if i > n or j > n:
            raise ScenarioError(f"vertex index out of range 1..{n}", path)
        if i == j:
            raise ScenarioError(f"self-loop at vertex {i}", path)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ScenarioError(f"duplicate edge {{{i},{j}}}", path)
        seen.add(key)
        edges.append((i - 1, j - 1))
    graph = Graph(n, edges)

    gens = []
    for k, images in enumerate(doc["symmetry"]["generators"]):
        path = f"symmetry.generators[{k}]"
        if len(images) != n:
            raise ScenarioError(f"has {len(images)} images, expected {n}", path)
        try:
            perm = check_permutation([x - 1 for x in images], n)
        except ArgumentError as exc:
            raise ScenarioError(str(exc), path) from exc
        bad = _first_bad_edge(graph, perm)
        if bad is not None:
            (i, j), (a, b) = bad
            raise ScenarioError(
                f"{cycle_notation(perm)} is not an automorphism: edge {{{i + 1},{j + 1}}} "
                f"maps to {{{a + 1},{b + 1}}} which is not an edge",
                path,
            )
        gens.append(perm)
    group = group_closure(gens, n)
    action = GroupAction(graph, group)

    rep_doc = doc["symmetry"]["representation"]
    try:
        rep = standard_representation(group, rep_doc["kind"], gens, **rep_doc["params"])
    except (RepresentationError, ArgumentError) as exc:
        raise ScenarioError(str(exc), "symmetry.representation") from exc

    target = doc["target"]
    if "p_star" in target:
        pts = np.array(target["p_star"], dtype=float)
        if pts.shape != (n, 2):
            raise ScenarioError(f"expected {n} planar points, got shape {pts.shape}", "target.p_star")
        framework = Framework(graph, pts).with_targets_from_points()
        lengths = framework.edge_lengths()
        if np.any(lengths <= 0):
            k = int(np.flatnonzero(lengths <= 0)[0])
            i, j = graph.edges[k]
            raise ScenarioError(f"edge {{{i + 1},{j + 1}}} has zero target length", "target.p_star")
        try:
            framework.require_symmetric(action, rep)
        except SymmetryError as exc:
            raise ScenarioError(str(exc), "target.p_star") from exc
    else:
        dist = {}
        for k, (i, j, d) in enumerate(target["distances"]):
            key = (min(i, j) - 1, max(i, j) - 1)
            if key not in graph.edge_set:
                raise ScenarioError(f"{{{i},{j}}} is not an edge", f"target.distances[{k}]")
            dist[key] = float(d)
        missing = [e for e in graph.edges if e not in dist]
        if missing:
            i, j = missing[0]
            raise ScenarioError(f"no distance for edge {{{i + 1},{j + 1}}}", "target.distances")
        init = doc["initial"]
        if init["mode"] != "points":
            raise ScenarioError("distance-only targets need initial.mode = 'points'", "initial.mode")
        framework = Framework(graph, np.array(init["points"], dtype=float), dist)
        for perm in group.elements:
            for (i, j), d in dist.items():
                img = (min(perm[i], perm[j]), max(perm[i], perm[j]))
                if abs(dist[img] - d) > 1e-12 * max(1.0, d):
                    raise ScenarioError(
                        f"distances of {{{i + 1},{j + 1}}} and its image {{{img[0] + 1},{img[1] + 1}}} "
                        f"under {cycle_notation(perm)} differ",
                        "target.distances",
                    )

    context = SymmetryContext.build(action, rep)
    trees, assumption_error = None, None
    try:
        trees = orbit_spanning_trees(action, context.orbits)
    except AssumptionError as exc:
        assumption_error = str(exc)

    law = doc["controller"]
    if law in ("orbit", "orbit_consensus") and not action.free:
        raise ScenarioError("orbit laws need a free group action", "controller")

    p0 = _initial_points(doc, framework)
    r0 = None
    if law == "orbit_consensus":
        if not graph.is_connected():
            raise ScenarioError("consensus augmentation needs a connected graph", "graph")
        mode = doc["consensus"]["r0"]
        if mode == "equal_to_p0":
            r0 = p0.copy()
        elif mode == "zeros":
            r0 = np.zeros_like(p0)
        else:
            if "points" not in doc["consensus"]:
                raise ScenarioError("r0 = 'explicit' needs consensus.points", "consensus")
            r0 = np.array(doc["consensus"]["points"], dtype=float)
            if r0.shape != p0.shape:
                raise ScenarioError(f"expected shape {p0.shape}, got {r0.shape}", "consensus.points")
    try:
        config = IntegratorConfig(**doc["integrator"])
    except ArgumentError as exc:
        raise ScenarioError(str(exc), "integrator") from exc
    return Setup(graph, action, context, framework, trees, assumption_error, p0, r0, config)


def _initial_points(doc: dict, framework: Framework) -> np.ndarray:
    init = doc["initial"]
    shape = framework.points.shape
    if init["mode"] == "points":
        if "points" not in init:
            raise ScenarioError("mode 'points' needs initial.points", "initial")
        pts = np.array(init["points"], dtype=float)
        if pts.shape != shape:
            raise ScenarioError(f"expected shape {shape}, got {pts.shape}", "initial.points")
        return pts
    rng = np.random.default_rng(init["seed"])
    p0 = framework.points + init["magnitude"] * rng.uniform(-1.0, 1.0, size=shape)
    if "offset" in init:
        offset = np.array(init["offset"], dtype=float)
        if offset.shape != (shape[1],):
            raise ScenarioError(f"expected {shape[1]} components", "initial.offset")
        p0 = p0 + offset
    return p0


# ---------------------------------------------------------------------------
# built-in catalogue


def _polar(radius, deg):
    t = np.deg2rad(deg)
    return [radius * float(np.cos(t)), radius * float(np.sin(t))]


def _orbit_points(seeds, generator_matrix, images):
    """Place seeds, then fill each orbit by ``p_{g(i)} = T p_i`` along the generator cycle."""
    n = len(images)
    pts = [None] * n
    for v, xy in seeds.items():
        pts[v] = np.array(xy, dtype=float)
        u = v
        while pts[images[u] - 1] is None:
            pts[images[u] - 1] = generator_matrix @ pts[u]
            u = images[u] - 1
    return [[float(x), float(y)] for x, y in pts]


_C4_EDGES = [[1, 2], [1, 3], [2, 4], [3, 4]]


def builtin_documents() -> dict:
    docs = {}
    rot4 = rotation_matrix(1, 4)
    psi1 = [2, 4, 1, 3]
    docs["c4_rotation"] = {
        "name": "c4_rotation",
        "description": "4-cycle at a square placement with its C4 rotational symmetry.",
        "graph": {"n": 4, "edges": _C4_EDGES},
        "symmetry": {"generators": [psi1], "representation": {"kind": "rotation", "params": {"order": 4, "powers": [1]}}},
        "target": {"p_star": _orbit_points({0: [-0.8, 0.8]}, rot4, psi1)},
        "initial": {"mode": "perturb", "seed": 1, "magnitude": 0.05},
        "controller": "orbit",
        "integrator": {"method": "rk4", "dt": 1e-3, "T": 50.0},
    }
    docs["c4_mirror"] = {
        "name": "c4_mirror",
        "description": "4-cycle at a trapezoid placement with mirror symmetry in the y-axis.",
        "graph": {"n": 4, "edges": _C4_EDGES},
        "symmetry": {
            "generators": [[2, 1, 4, 3]],
            "representation": {"kind": "reflection", "params": {"axis_deg": 90.0}},
        },
        "target": {"p_star": [[-0.7, 0.8], [0.7, 0.8], [-1.6, -0.8], [1.6, -0.8]]},
        "initial": {"mode": "perturb", "seed": 2, "magnitude": 0.1},
        "controller": "symmetric",
        "integrator": {"method": "rk4", "dt": 1e-3, "T": 20.0},
    }
    docs["c4_halfturn"] = {
        "name": "c4_halfturn",
        "description": "4-cycle with half-turn symmetry; symmetrically flexible, and its vertex orbits are not adjacent.",
        "graph": {"n": 4, "edges": _C4_EDGES},
        "symmetry": {
            "generators": [[4, 3, 2, 1]],
            "representation": {"kind": "rotation", "params": {"order": 2, "powers": [1]}},
        },
        "target": {"p_star": [[-1.1, 1.25], [0.9, 0.05], [-0.9, -0.05], [1.1, -1.25]]},
        "initial": {"mode": "perturb", "seed": 3, "magnitude": 0.05},
        "controller": "classic",
        "integrator": {"method": "rk4", "dt": 1e-3, "T": 20.0},
    }
    inner = [_polar(0.5, a) for a in (90, 210, 330)]
    outer = [_polar(1.0, a) for a in (55, 125, 175, 245, 295, 5)]
    docs["fig1_c3v"] = {
        "name": "fig1_c3v",
        "description": "9-vertex triangle-in-hexagon frame at a C3v placement, analysed under its free C3 rotation subgroup.",
        "graph": {
            "n": 9,
            "edges": [[1, 2], [2, 3], [1, 3], [4, 5], [5, 6], [6, 7], [7, 8], [8, 9], [4, 9],
                      [1, 4], [1, 5], [2, 6], [2, 7], [3, 8], [3, 9]],
        },
        "symmetry": {
            "generators": [[2, 3, 1, 6, 7, 8, 9, 4, 5]],
            "representation": {"kind": "rotation", "params": {"order": 3, "powers": [1]}},
        },
        "target": {"p_star": inner + outer},
        "initial": {"mode": "perturb", "seed": 4, "magnitude": 0.02},
        "controller": "classic",
        "integrator": {"method": "rk4", "dt": 1e-3, "T": 50.0},
    }
    docs["fig5_mirror"] = {
        "name": "fig5_mirror",
        "description": "6-vertex graph with a mirror symmetry whose orbit {3,6} has no connecting edge.",
        "graph": {"n": 6, "edges": [[1, 2], [2, 3], [3, 4], [4, 5], [5, 6], [1, 6], [1, 5], [2, 4]]},
        "symmetry": {
            "generators": [[2, 1, 6, 5, 4, 3]],
            "representation": {"kind": "reflection", "params": {"axis_deg": 90.0}},
        },
        "target": {"p_star": [[-0.4, 1.1], [0.4, 1.1], [1.2, 0.5], [0.9, -0.75], [-0.9, -0.75], [-1.2, 0.5]]},
        "initial": {"mode": "perturb", "seed": 5, "magnitude": 0.05},
        "controller": "symmetric",
        "integrator": {"method": "rk4", "dt": 1e-3, "T": 20.0},
    }
    gen5 = [2, 3, 4, 5, 1, 7, 8, 9, 10, 6]
    rot5 = rotation_matrix(1, 5)
    ex8_points = _orbit_points({0: [1.0, 0.0], 5: _polar(0.55, 36.0)}, rot5, gen5)
    ex8_graph = {
        "n": 10,
        "edges": [[1, 2], [2, 3], [3, 4], [4, 5], [1, 5], [6, 7], [7, 8], [8, 9], [9, 10], [6, 10],
                  [1, 6], [2, 7], [3, 8], [4, 9], [5, 10]],
    }
    ex8_sym = {"generators": [gen5], "representation": {"kind": "rotation", "params": {"order": 5, "powers": [1]}}}
    docs["example8"] = {
        "name": "example8",
        "description": "10 agents in two C5 orbits (radii 1 and 0.55, inner orbit turned by pi/5) under the orbit law.",
        "graph": ex8_graph,
        "symmetry": ex8_sym,
        "target": {"p_star": ex8_points},
        "initial": {"mode": "perturb", "seed": 7, "magnitude": 3e-4},
        "controller": "orbit",
        "integrator": {"method": "rk4", "dt": 1e-3, "T": 50.0},
    }
    docs["example8_consensus"] = {
        "name": "example8_consensus",
        "description": "example8 started away from the origin with the centroid-consensus augmentation, r(0) = p(0).",
        "graph": ex8_graph,
        "symmetry": ex8_sym,
        "target": {"p_star": ex8_points},
        "initial": {"mode": "perturb", "seed": 7, "magnitude": 1e-3, "offset": [3.0, -2.0]},
        "controller": "orbit_consensus",
        "integrator": {"method": "rk4", "dt": 1e-3, "T": 100.0},
        "consensus": {"r0": "equal_to_p0"},
    }
    docs["example8_consensus_zeros"] = {
        **copy.deepcopy(docs["example8_consensus"]),
        "name": "example8_consensus_zeros",
        "description": "Consensus variant with r(0) = 0, which reduces to the plain orbit law.",
        "initial": {"mode": "perturb", "seed": 7, "magnitude": 3e-4},
        "integrator": {"method": "rk4", "dt": 1e-3, "T": 50.0},
        "consensus": {"r0": "zeros"},
    }
    return docs


def builtin_names() -> list:
    return list(builtin_documents())


def builtin_scenarios() -> list:
    return [parse_document(doc) for doc in builtin_documents().values()]


def builtin(name: str) -> Scenario:
    docs = builtin_documents()
    if name not in docs:
        raise ScenarioError(f"unknown built-in {name!r}; choose from {sorted(docs)}", "<root>")
    return parse_document(docs[name])
