"""CGDMS assembly and the verifiers for the standing assumptions.

Derivative bounds come from a uniform grid plus an analytic slack term
``spacing * sup|phi''|``, so every reported constant is a certified bound for
the supported closed-form families.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (DegenerateDerivative, InvalidGraph, InvalidParameter,
                     NotAContraction, SeparationViolated)
from .maps import Ball, Conjugated1D, Interval, Perturbed1D, Similarity, StateSpace
from .symbolic import EdgeGraph, check_finite_primitivity, connector_length

__all__ = [
    "DEFAULT_GRID",
    "Constants",
    "Flags",
    "Cgdms",
    "make_system",
    "assemble",
    "grid_points",
    "edge_derivative_bounds",
    "verify_contraction",
    "verify_strong_separation",
    "verify_exponential_geometry",
    "estimate_holder_constants",
    "first_level_images",
    "verify",
    "connector",
]

DEFAULT_GRID = 2 ** 12  # samples per unit length


@dataclass(frozen=True)
class Constants:
    lambda_: float | None = None
    lambda_minus: float | None = None
    holder_C: float | None = None
    holder_alpha: float | None = None
    separation_a: float | None = None


@dataclass(frozen=True)
class Flags:
    strong_separation: bool = False
    exponential_geometry: bool = False
    finitely_primitive: bool = False


@dataclass(frozen=True, eq=False)
class Cgdms:
    graph: EdgeGraph
    spaces: tuple[StateSpace, ...]
    maps: tuple
    constants: Constants = field(default_factory=Constants)
    flags: Flags = field(default_factory=Flags)
    grid: int = DEFAULT_GRID

    @property
    def dim(self) -> int:
        return self.spaces[0].dim

    @property
    def is_1d(self) -> bool:
        return all(s.is_interval for s in self.spaces)

    @property
    def constant_derivative(self) -> bool:
        return all(m.constant_derivative for m in self.maps)

    def domain(self, e: int) -> StateSpace:
        return self.spaces[self.graph.terminal(e)]

    def codomain(self, e: int) -> StateSpace:
        return self.spaces[self.graph.initial(e)]

    @property
    def max_diameter(self) -> float:
        return max(s.diameter for s in self.spaces)

    @property
    def min_diameter(self) -> float:
        return min(s.diameter for s in self.spaces)

    def ratios(self) -> np.ndarray:
        """``|phi_e'|`` per edge; only defined for constant-derivative systems."""
        if not self.constant_derivative:
            raise InvalidParameter("ratios are only defined for constant-derivative maps")
        return np.array([m.ratio for m in self.maps], dtype=float)

    @property
    def distortion_constant(self) -> float:
        """``K = C * D^alpha / (1 - lambda^alpha)`` with ``D`` the largest space diameter."""
        c = self.constants
        if c.holder_C is None or c.lambda_ is None:
            raise InvalidParameter("holder constants and lambda must be verified first")
        if c.holder_C == 0:
            return 0.0
        a = c.holder_alpha
        return c.holder_C * self.max_diameter ** a / (1.0 - c.lambda_ ** a)


def _check_map_against_spaces(e, m, dom: StateSpace, cod: StateSpace):
    tol = 1e-12 * max(dom.diameter, cod.diameter)
    if isinstance(m, Similarity) and not dom.is_interval:
        if m.dim != dom.dim or m.dim != cod.dim:
            raise InvalidParameter(f"edge {e}: similarity dimension does not match its spaces")
        c = m.apply(dom.geometry.center)
        if np.linalg.norm(c - cod.geometry.center) + m.ratio * dom.geometry.radius > cod.geometry.radius + tol:
            raise InvalidParameter(f"edge {e}: image of the domain ball leaves the codomain")
        return
    if not (dom.is_interval and cod.is_interval):
        raise InvalidParameter(f"edge {e}: only similarities act on balls")
    if isinstance(m, Similarity) and m.dim != 1:
        raise InvalidParameter(f"edge {e}: similarity on an interval must be 1-dimensional")
    if isinstance(m, Perturbed1D) and m.domain != dom.geometry:
        raise InvalidParameter(f"edge {e}: perturbation domain must equal the state space")
    if isinstance(m, Conjugated1D) and (m.domain != dom.geometry or m.codomain != cod.geometry):
        raise InvalidParameter(f"edge {e}: conjugacy intervals must equal the state spaces")
    D, C = dom.geometry, cod.geometry
    a, b = float(m(D.lo)), float(m(D.hi))
    if min(a, b) < C.lo - tol or max(a, b) > C.hi + tol:
        raise InvalidParameter(f"edge {e}: image [{min(a, b)}, {max(a, b)}] leaves the codomain")


def make_system(graph: EdgeGraph, spaces: Sequence[StateSpace], maps: Sequence,
                grid: int = DEFAULT_GRID) -> Cgdms:
    """Validate shapes and image containment; no constants are populated."""
    spaces = tuple(spaces)
    maps = tuple(maps)
    if len(spaces) != graph.vertex_count:
        raise InvalidGraph(f"need {graph.vertex_count} state spaces, got {len(spaces)}")
    if len(maps) != graph.edge_count:
        raise InvalidGraph(f"need {graph.edge_count} maps, got {len(maps)}")
    if len({s.dim for s in spaces}) != 1:
        raise InvalidParameter("state spaces must share one ambient dimension")
    for v, s in enumerate(spaces):
        if s.vertex != v:
            raise InvalidParameter(f"space {v} is labelled with vertex {s.vertex}")
    for e, m in enumerate(maps):
        _check_map_against_spaces(e, m, spaces[graph.terminal(e)], spaces[graph.initial(e)])
    A = graph.incidence
    for e1, e2 in zip(*np.nonzero(A)):
        if spaces[graph.terminal(e1)].geometry != spaces[graph.initial(e2)].geometry:
            raise InvalidGraph(f"transition {e1}->{e2} composes maps between different spaces")
    return Cgdms(graph, spaces, maps, grid=grid)


def grid_points(interval: Interval, resolution: int) -> np.ndarray:
    m = max(int(math.ceil(interval.length * resolution)), 1) + 1
    return np.linspace(interval.lo, interval.hi, m)


def edge_derivative_bounds(system: Cgdms, e: int, grid: int | None = None) -> tuple[float, float]:
    """Certified ``(inf |phi_e'|, sup |phi_e'|)`` over the domain of edge ``e``."""
    m = system.maps[e]
    if m.constant_derivative:
        r = float(m.ratio)
        return r, r
    grid = grid or system.grid
    dom = system.domain(e).geometry
    xs = grid_points(dom, grid)
    h = xs[1] - xs[0]
    d = m.derivative(xs)
    if np.any(d > 0) and np.any(d < 0):
        raise DegenerateDerivative(f"edge {e}: derivative changes sign on the grid")
    slack = h * m.second_derivative_bound()
    ad = np.abs(d)
    return float(ad.min() - slack), float(ad.max() + slack)


def verify_contraction(system: Cgdms, grid: int | None = None) -> float:
    lam = 0.0
    for e in range(system.graph.edge_count):
        _, hi = edge_derivative_bounds(system, e, grid)
        if hi >= 1.0:
            raise NotAContraction(e, hi)
        lam = max(lam, hi)
    return lam


def verify_exponential_geometry(system: Cgdms, grid: int | None = None) -> float:
    lam_minus = math.inf
    for e in range(system.graph.edge_count):
        lo, _ = edge_derivative_bounds(system, e, grid)
        if lo <= 0.0:
            raise DegenerateDerivative(f"edge {e}: derivative lower bound {lo:.6g} is not > 0")
        lam_minus = min(lam_minus, lo)
    return lam_minus


def estimate_holder_constants(system: Cgdms, grid: int | None = None) -> tuple[float, float]:
    """``(C, alpha)`` for ``||phi'(x)| - |phi'(y)|| <= C * inf|phi'| * |x - y|^alpha``.

    All supported families are C^2, so ``alpha = 1`` and ``C`` is the Lipschitz
    constant of the derivative divided by the edge's certified derivative infimum.
    """
    C = 0.0
    for e, m in enumerate(system.maps):
        if m.constant_derivative:
            continue
        lo, _ = edge_derivative_bounds(system, e, grid)
        if lo <= 0:
            raise DegenerateDerivative(f"edge {e}: derivative lower bound {lo:.6g} is not > 0")
        C = max(C, m.second_derivative_bound() / lo)
    return C, 1.0


def first_level_images(system: Cgdms) -> list:
    """``Delta_e`` per edge as ``(lo, hi)`` for intervals or ``(center, radius)`` for balls."""
    out = []
    for e, m in enumerate(system.maps):
        dom = system.domain(e).geometry
        if isinstance(dom, Interval):
            a, b = float(m(dom.lo)), float(m(dom.hi))
            out.append((min(a, b), max(a, b)))
        else:
            out.append((m.apply(dom.center), m.ratio * dom.radius))
    return out


def _set_distance(system: Cgdms, A, B) -> float:
    if system.is_1d:
        return max(0.0, max(A[0], B[0]) - min(A[1], B[1]))
    return max(0.0, float(np.linalg.norm(A[0] - B[0])) - A[1] - B[1])


def verify_strong_separation(system: Cgdms) -> float:
    """Minimum gap between first-level cylinders sharing a state space.

    Cylinders in different vertex spaces live in disjoint copies and impose no
    constraint; when no vertex has two outgoing images the smallest state space
    diameter is returned.
    """
    images = first_level_images(system)
    a = math.inf
    g = system.graph
    for e1, e2 in combinations(range(g.edge_count), 2):
        if g.initial(e1) != g.initial(e2):
            continue
        dist = _set_distance(system, images[e1], images[e2])
        if dist <= 0.0:
            raise SeparationViolated((e1, e2), dist)
        a = min(a, dist)
    if math.isinf(a):
        a = system.min_diameter
    return a


def assemble(graph: EdgeGraph, spaces: Sequence[StateSpace], maps: Sequence,
             grid: int = DEFAULT_GRID, require_separation: bool = False) -> Cgdms:
    """Build a system and run every verifier.

    Contraction and exponential geometry failures always raise. A separation
    failure raises only with ``require_separation``; otherwise the system is
    returned with ``strong_separation=False`` (pressure and dimension only need
    the open set condition).
    """
    system = make_system(graph, spaces, maps, grid)
    return verify(system, require_separation=require_separation)


def verify(system: Cgdms, require_separation: bool = False) -> Cgdms:
    lam = verify_contraction(system)
    lam_minus = verify_exponential_geometry(system)
    C, alpha = estimate_holder_constants(system)
    try:
        a = verify_strong_separation(system)
        separated = True
    except SeparationViolated:
        if require_separation:
            raise
        a, separated = 0.0, False
    E = system.graph.edge_count
    primitive = check_finite_primitivity(system.graph, (E - 1) ** 2 + 2) is not None
    constants = Constants(lam, lam_minus, C, alpha, a)
    flags = Flags(strong_separation=separated, exponential_geometry=lam_minus > 0,
                  finitely_primitive=primitive)
    return replace(system, constants=constants, flags=flags)


def connector(system: Cgdms) -> int | None:
    return connector_length(system.graph, (system.graph.edge_count - 1) ** 2 + 2)
