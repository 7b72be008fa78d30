"""JSON system descriptions: schema validation, exact rationals and system building.

Three kinds of document are accepted:

``system``
    explicit graph, per-vertex state spaces and per-edge maps.
``similarity_ratios``
    a list of ratios realized as a full-shift similarity system on ``[0, 1]``.
``construction_matrix``
    a square matrix of similarity coefficients realized with one edge per
    nonzero entry.

Numbers may be JSON numbers or strings holding a decimal or a rational ``"p/q"``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .dimension import ConstructionMatrix, realize_construction_matrix
from .errors import CgdmsError
from .maps import (PROFILES, Affine1D, Ball, Conjugated1D, Interval, Perturbed1D, Similarity,
                   StateSpace)
from .symbolic import build_graph
from .system import DEFAULT_GRID, Cgdms, make_system, verify

__all__ = ["SCHEMA_VERSION", "SCHEMA", "ConfigError", "Compute", "SystemConfig",
           "parse_number", "load_config", "parse_config", "digest"]

SCHEMA_VERSION = 1

_NUM = {"oneOf": [{"type": "number"},
                  {"type": "string", "pattern": r"^\s*[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?(\s*/\s*\d+)?\s*$"}]}

_BASE_MAP = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["similarity", "affine", "perturbed"]},
        "ratio": _NUM,
        "reverse": {"type": "boolean"},
        "translation": {"oneOf": [_NUM, {"type": "array", "items": _NUM}]},
        "isometry": {"type": "array", "items": {"type": "array", "items": _NUM}},
        "slope": _NUM,
        "intercept": _NUM,
        "amplitude": _NUM,
        "profile": {"enum": sorted(PROFILES)},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["system", "similarity_ratios", "construction_matrix"]},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "graph": {
            "type": "object",
            "required": ["vertices", "edges"],
            "properties": {
                "vertices": {"type": "integer", "minimum": 1},
                "edges": {"type": "array", "minItems": 1,
                          "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                    "minItems": 2, "maxItems": 2}},
                "incidence": {"type": "array",
                              "items": {"type": "array", "items": {"enum": [0, 1]}}},
            },
            "additionalProperties": False,
        },
        "spaces": {
            "type": "array", "minItems": 1,
            "items": {"oneOf": [
                {"type": "object", "required": ["interval"], "additionalProperties": False,
                 "properties": {"interval": {"type": "array", "items": _NUM,
                                             "minItems": 2, "maxItems": 2}}},
                {"type": "object", "required": ["ball"], "additionalProperties": False,
                 "properties": {"ball": {"type": "object", "required": ["center", "radius"],
                                         "additionalProperties": False,
                                         "properties": {"center": {"type": "array", "items": _NUM,
                                                                   "minItems": 1},
                                                        "radius": _NUM}}}},
            ]},
        },
        "maps": {
            "type": "array",
            "items": {"oneOf": [
                _BASE_MAP,
                {"type": "object", "required": ["family", "base", "c_in", "c_out"],
                 "additionalProperties": False,
                 "properties": {"family": {"const": "conjugated"}, "base": _BASE_MAP,
                                "c_in": _NUM, "c_out": _NUM}},
            ]},
        },
        "ratios": {"type": "array", "minItems": 1, "items": _NUM},
        "matrix": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _NUM}},
        "compute": {
            "type": "object",
            "properties": {
                "depth": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "word_budget": {"type": "integer", "minimum": 1},
                "grid": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0},
                "require_separation": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "system"}}},
         "then": {"required": ["graph", "spaces", "maps"]}},
        {"if": {"properties": {"kind": {"const": "similarity_ratios"}}},
         "then": {"required": ["ratios"]}},
        {"if": {"properties": {"kind": {"const": "construction_matrix"}}},
         "then": {"required": ["matrix"]}},
    ],
    "additionalProperties": False,
}


class ConfigError(CgdmsError):
    """Unreadable, malformed or inconsistent configuration."""


@dataclass(frozen=True)
class Compute:
    depth: int = 10
    tol: float = 1e-8
    word_budget: int | None = None
    grid: int = DEFAULT_GRID
    seed: int | None = None
    require_separation: bool = True


@dataclass(frozen=True, eq=False)
class SystemConfig:
    path: str | None
    digest: str
    name: str
    kind: str
    raw: dict = field(repr=False)
    system: Cgdms = field(repr=False)  # built but not yet verified
    compute: Compute
    ratios: tuple[float, ...] | None = None
    matrix: ConstructionMatrix | None = None

    def verified(self) -> Cgdms:
        return verify(self.system, require_separation=self.compute.require_separation)


def parse_number(value) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(Fraction(value.replace(" ", "")))
    except (ValueError, ZeroDivisionError, AttributeError) as exc:
        raise ConfigError(f"cannot parse number {value!r}: {exc}") from None


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _where(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def _build_base(spec: dict, where: str, domain: Interval | None):
    fam = spec["family"]
    num = parse_number
    try:
        if fam == "similarity":
            if "ratio" not in spec:
                raise ConfigError(f"{where}: similarity needs 'ratio'")
            if "isometry" in spec:
                Q = [[num(x) for x in row] for row in spec["isometry"]]
                b = [num(x) for x in spec.get("translation", [0.0] * len(Q))]
                return Similarity(num(spec["ratio"]), Q, b)
            tr = spec.get("translation", 0)
            if isinstance(tr, list):
                raise ConfigError(f"{where}: vector translation needs an isometry")
            return Similarity.on_line(num(spec["ratio"]), num(tr), bool(spec.get("reverse", False)))
        missing = [k for k in ("slope", "intercept") if k not in spec]
        if fam == "perturbed":
            missing += [k for k in ("amplitude",) if k not in spec]
        if missing:
            raise ConfigError(f"{where}: {fam} map is missing {', '.join(missing)}")
        if fam == "affine":
            return Affine1D(num(spec["slope"]), num(spec["intercept"]))
        if domain is None:
            raise ConfigError(f"{where}: perturbed maps need an interval state space")
        return Perturbed1D(num(spec["slope"]), num(spec["intercept"]), num(spec["amplitude"]),
                           domain, spec.get("profile", "sin_pi"))
    except ConfigError:
        raise
    except CgdmsError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _build_space(v: int, spec: dict) -> StateSpace:
    try:
        if "interval" in spec:
            lo, hi = (parse_number(x) for x in spec["interval"])
            return StateSpace(v, Interval(lo, hi))
        b = spec["ball"]
        return StateSpace(v, Ball([parse_number(x) for x in b["center"]], parse_number(b["radius"])))
    except ConfigError:
        raise
    except CgdmsError as exc:
        raise ConfigError(f"spaces/{v}: {exc}") from None


def _explicit_system(doc: dict, grid: int) -> Cgdms:
    g = doc["graph"]
    try:
        graph = build_graph(g["vertices"], g["edges"], g.get("incidence"))
    except CgdmsError as exc:
        raise ConfigError(f"graph: {exc}") from None
    if len(doc["spaces"]) != graph.vertex_count:
        raise ConfigError(f"spaces: need {graph.vertex_count} entries, got {len(doc['spaces'])}")
    spaces = [_build_space(v, s) for v, s in enumerate(doc["spaces"])]
    maps_doc = doc["maps"]
    if len(maps_doc) != graph.edge_count:
        raise ConfigError(f"maps: edge {len(maps_doc)} has no map "
                          f"({graph.edge_count} edges, {len(maps_doc)} maps)")
    maps = []
    for e, spec in enumerate(maps_doc):
        dom = spaces[graph.terminal(e)].geometry
        cod = spaces[graph.initial(e)].geometry
        interval_dom = dom if isinstance(dom, Interval) else None
        if spec["family"] == "conjugated":
            if not (isinstance(dom, Interval) and isinstance(cod, Interval)):
                raise ConfigError(f"maps/{e}: conjugated maps need interval state spaces")
            base = _build_base(spec["base"], f"maps/{e}/base", interval_dom)
            try:
                maps.append(Conjugated1D(base, parse_number(spec["c_in"]),
                                         parse_number(spec["c_out"]), dom, cod))
            except CgdmsError as exc:
                raise ConfigError(f"maps/{e}: {exc}") from None
        else:
            maps.append(_build_base(spec, f"maps/{e}", interval_dom))
    try:
        return make_system(graph, spaces, maps, grid)
    except CgdmsError as exc:
        raise ConfigError(str(exc)) from None


def _ratio_system(ratios, grid: int) -> Cgdms:
    """Full-shift similarity system on ``[0, 1]`` with evenly spaced images."""
    p = len(ratios)
    total = sum(ratios)
    if p == 1:
        offsets = [0.0]
    elif total <= 1:
        gap = (1.0 - total) / (p - 1)
        offsets = [sum(ratios[:k]) + k * gap for k in range(p)]
    else:
        offsets = [(k / (p - 1)) * (1.0 - r) for k, r in enumerate(ratios)]
    maps = [Similarity.on_line(r, min(off, 1.0 - r)) for r, off in zip(ratios, offsets)]
    graph = build_graph(1, [(0, 0)] * p)
    return make_system(graph, [StateSpace(0, Interval(0.0, 1.0))], maps, grid)


def parse_config(data: bytes, path: str | None = None) -> SystemConfig:
    where = path or "<config>"
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{where}: field {_where(e)}: {e.message}" for e in errors[:5]]
        raise ConfigError("\n".join(lines))
    comp = doc.get("compute", {})
    compute = Compute(**comp)
    kind = doc["kind"]
    ratios = matrix = None
    if kind == "system":
        system = _explicit_system(doc, compute.grid)
    elif kind == "similarity_ratios":
        ratios = tuple(parse_number(x) for x in doc["ratios"])
        if any(not 0 < r < 1 for r in ratios):
            raise ConfigError("ratios: every ratio must lie in (0, 1)")
        try:
            system = _ratio_system(ratios, compute.grid)
        except CgdmsError as exc:
            raise ConfigError(f"ratios: {exc}") from None
    else:
        rows = [[parse_number(x) for x in row] for row in doc["matrix"]]
        if any(len(r) != len(rows) for r in rows):
            raise ConfigError("matrix: must be square")
        try:
            matrix = ConstructionMatrix.from_array(np.array(rows))
            system = realize_construction_matrix(matrix, compute.grid)
        except CgdmsError as exc:
            raise ConfigError(f"matrix: {exc}") from None
    return SystemConfig(path, digest(data), doc.get("name", Path(where).stem), kind, doc, system,
                        compute, ratios, matrix)


def load_config(path) -> SystemConfig:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(data, str(p))
