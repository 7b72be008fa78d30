"""Dimension solvers: Bowen's equation, Moran's formula and the spectral-radius equation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (InvalidInput, InvalidParameter, MissingAssumption, NoRoot,
                     NotIrreducible, NumericalFailure)
from .maps import Interval, Similarity, StateSpace
from .pressure import DEFAULT_EXTENSION, _envelope, word_weights
from .symbolic import build_graph, is_irreducible
from .system import Cgdms, assemble

__all__ = [
    "DimensionResult",
    "ConstructionMatrix",
    "ConsistencyReport",
    "bisect",
    "newton_bisect",
    "perron_root",
    "bowen_dimension",
    "moran_dimension",
    "spectral_dimension",
    "realize_construction_matrix",
    "consistency_report",
    "MATRIX_DEPTH",
]

MATRIX_DEPTH = 2 ** 24


@dataclass(frozen=True)
class DimensionResult:
    estimate: float
    method: str
    bracket: tuple[float, float]
    residual: float
    tol: float
    depth: int | None = None
    enclosure: tuple[float, float] | None = None
    values: tuple[float, float] | None = None  # objective at the bracket ends
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True, eq=False)
class ConstructionMatrix:
    matrix: np.ndarray
    irreducible: bool

    @classmethod
    def from_array(cls, matrix) -> "ConstructionMatrix":
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.size == 0:
            raise InvalidInput("construction matrix must be square and nonempty")
        if np.any(M < 0) or np.any(M >= 1):
            raise InvalidInput("construction matrix entries must lie in [0, 1)")
        return cls(M, is_irreducible(M))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ConsistencyReport:
    bowen: DimensionResult
    spectral: DimensionResult
    difference: float
    tolerance: float
    agree: bool


def bisect(f, lo: float, hi: float, tol: float, f_lo: float | None = None,
           f_hi: float | None = None, max_iter: int = 200):
    """Root of a decreasing ``f`` with ``f(lo) > 0 > f(hi)``; returns the final bracket."""
    f_lo = f(lo) if f_lo is None else f_lo
    f_hi = f(hi) if f_hi is None else f_hi
    if not (f_lo > 0 > f_hi):
        raise NoRoot(lo, hi, f_lo, f_hi)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid, mid, fm, fm
        if fm > 0:
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
    return lo, hi, f_lo, f_hi


def newton_bisect(f, df, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Safeguarded Newton on a decreasing ``f`` bracketed by ``[lo, hi]``."""
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo > 0 > f_hi):
        raise NoRoot(lo, hi, f_lo, f_hi)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        if fx == 0:
            return x, x
        if fx > 0:
            lo = x
        else:
            hi = x
        if hi - lo <= tol:
            break
        d = df(x)
        step = x - fx / d if d != 0 else None
        x = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
    return lo, hi


def _root_of(g, lo: float, hi: float, tol: float) -> float:
    g_lo, g_hi = g(lo), g(hi)
    if g_lo <= 0:
        return lo
    if g_hi >= 0:
        return hi
    a, b, _, _ = bisect(g, lo, hi, tol, g_lo, g_hi)
    return 0.5 * (a + b)


def bowen_dimension(system: Cgdms, method: str = "partition", depth: int = 10,
                    tol: float = 1e-8, strategy: str = "enumerate", workers: int = 1,
                    budget: int | None = None,
                    extension: int = DEFAULT_EXTENSION) -> DimensionResult:
    """Zero of the depth-``n`` pressure estimate on ``[0, d]`` by bisection.

    ``enclosure`` holds the zeros of the lower and upper envelope curves, an
    interval that contains the zero of the true pressure.
    """
    if tol <= 0:
        raise InvalidParameter("tol must be > 0")
    W = word_weights(system, depth, method, strategy, workers, budget, extension)
    d = float(system.dim)
    P = W.value
    tag = f"bowen-{method}"

    def env(t):
        return _envelope(system, method, t, depth, P(t))

    p0, pd = P(0.0), P(d)
    if not p0 > pd:
        raise NoRoot(0.0, d, p0, pd)
    if p0 <= 0:
        return DimensionResult(0.0, tag, (0.0, 0.0), abs(p0), tol, depth, (0.0, 0.0), (p0, p0))
    if pd > 0:
        raise NoRoot(0.0, d, p0, pd)
    if pd == 0:
        return DimensionResult(d, tag, (d, d), 0.0, tol, depth, (d, d), (pd, pd))
    lo, hi, f_lo, f_hi = bisect(P, 0.0, d, tol, p0, pd)
    est = 0.5 * (lo + hi)
    encl = (_root_of(lambda t: env(t)[0], 0.0, d, tol), _root_of(lambda t: env(t)[1], 0.0, d, tol))
    encl = (min(encl[0], lo), max(encl[1], hi))
    return DimensionResult(est, tag, (lo, hi), abs(P(est)), tol, depth, encl, (f_lo, f_hi),
                           {"strategy": strategy})


def moran_dimension(ratios, tol: float = 1e-13) -> DimensionResult:
    """Root of ``sum_e lambda_e^t = 1``."""
    lam = np.asarray(list(ratios), dtype=float)
    if lam.size == 0:
        raise InvalidInput("ratio list is empty")
    if np.any(lam <= 0) or np.any(lam >= 1):
        raise InvalidInput("ratios must lie in (0, 1)")
    logs = np.log(lam)
    p = lam.size
    if p == 1:
        return DimensionResult(0.0, "moran", (0.0, 0.0), 0.0, tol, diagnostics={"closed_form": 0.0})
    if np.all(lam == lam[0]):
        t = math.log(p) / -float(logs[0])
        return DimensionResult(t, "moran", (t, t), 0.0, tol, diagnostics={"closed_form": t})

    def g(t):
        return float(logsumexp(t * logs))

    def dg(t):
        w = np.exp(t * logs - logsumexp(t * logs))
        return float(w @ logs)

    # sum lambda^t = 1 lies between the equal-ratio roots for the extreme ratios
    lo = math.log(p) / -float(logs.min())
    hi = math.log(p) / -float(logs.max())
    # rounding can put a nearly-equal-ratio root just outside; widen until the signs are strict
    if g(lo) <= 0:
        lo = 0.0
    step = 1e-12
    while g(hi) >= 0:
        hi += step
        step *= 2.0
    a, b = newton_bisect(g, dg, lo, hi, tol)
    t = 0.5 * (a + b)
    return DimensionResult(t, "moran", (a, b), abs(g(t)), tol)


def perron_root(M: np.ndarray, tol: float = 1e-14, max_iter: int = 100000):
    """Spectral radius of a nonnegative irreducible matrix by power iteration.

    Iterates ``M + I`` from the all-ones vector (the shift makes the iteration
    converge for periodic matrices) and stops when the Collatz-Wielandt bounds
    ``min (Bx)_i/x_i <= rho(B) <= max (Bx)_i/x_i`` agree to ``tol`` relative.
    Returns ``(rho, iterations, (lower, upper))`` for ``M``.
    """
    M = np.asarray(M, dtype=float)
    p = M.shape[0]
    B = M + np.eye(p)
    x = np.ones(p)
    for it in range(1, max_iter + 1):
        y = B @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * hi:
            rho = 0.5 * (lo + hi) - 1.0
            return rho, it, (lo - 1.0, hi - 1.0)
        x = y / y.max()
    raise NumericalFailure(f"power iteration did not converge in {max_iter} steps")


def spectral_dimension(matrix, tol: float = 1e-13, max_iter: int = 100000) -> DimensionResult:
    """Zero of ``log Phi(t)``, ``Phi(t)`` the spectral radius of the entrywise power ``A_t``."""
    if not isinstance(matrix, ConstructionMatrix):
        matrix = ConstructionMatrix.from_array(matrix)
    if not matrix.irreducible:
        raise NotIrreducible("support digraph is not strongly connected")
    M = matrix.matrix
    mask = M > 0
    logs = np.where(mask, np.log(np.where(mask, M, 1.0)), 0.0)
    iters = []

    def phi(t):
        rho, it, _ = perron_root(np.where(mask, np.exp(t * logs), 0.0), max_iter=max_iter)
        iters.append(it)
        return rho

    p0 = phi(0.0)
    if matrix.size == 1 or p0 <= 1.0:
        # a single cycle: Phi(t) = (product of ratios)^(t/len) = 1 only at t = 0
        return DimensionResult(0.0, "spectral", (0.0, 0.0), abs(math.log(p0)), tol,
                               diagnostics={"phi0": p0, "iterations": iters})
    # Phi(t) <= rho(support) * max^t bounds the root from above
    hi = 1.0
    while math.log(phi(hi)) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise NumericalFailure("could not bracket the spectral root")
    lo, hi, f_lo, f_hi = bisect(lambda t: math.log(phi(t)), 0.0, hi, tol)
    est = 0.5 * (lo + hi)
    return DimensionResult(est, "spectral", (lo, hi), abs(math.log(phi(est))), tol, None, None,
                           (f_lo, f_hi),
                           {"phi0": p0, "iterations": iters, "max_iterations": max(iters)})


def realize_construction_matrix(matrix, grid: int | None = None) -> Cgdms:
    """Similarity system on copies of ``[0, 1]`` with one edge per nonzero ``(i, j)``.

    Edge ``(i, j)`` maps ``X_j`` into ``X_i`` with ratio ``lambda_{i,j}``; images
    inside one vertex are spaced evenly, overlapping only when the ratios sum to
    more than one.
    """
    if not isinstance(matrix, ConstructionMatrix):
        matrix = ConstructionMatrix.from_array(matrix)
    M = matrix.matrix
    p = matrix.size
    edges = [(int(i), int(j)) for i, j in zip(*np.nonzero(M))]
    graph = build_graph(p, edges)
    maps = [None] * len(edges)
    for i in range(p):
        out = [k for k, (a, _) in enumerate(edges) if a == i]
        lam = [float(M[edges[k]]) for k in out]
        total = sum(lam)
        if len(out) == 1:
            offsets = [0.0]
        elif total <= 1.0:
            gap = (1.0 - total) / (len(out) - 1)
            offsets = list(np.concatenate([[0.0], np.cumsum(np.array(lam[:-1]) + gap)]))
        else:
            offsets = [(m / (len(out) - 1)) * (1.0 - lam[m]) for m in range(len(out))]
        for k, r, off in zip(out, lam, offsets):
            maps[k] = Similarity.on_line(r, min(float(off), 1.0 - r))
    spaces = [StateSpace(v, Interval(0.0, 1.0)) for v in range(p)]
    kwargs = {} if grid is None else {"grid": grid}
    return assemble(graph, spaces, maps, **kwargs)


def consistency_report(matrix, depth: int = MATRIX_DEPTH, tol: float = 1e-10) -> ConsistencyReport:
    """Bowen (on the realized system) versus spectral dimension for a construction matrix.

    The Bowen side uses the matrix strategy so that large depths are cheap; the
    agreement tolerance is the Bowen enclosure half-width plus both solver tolerances.
    """
    if not isinstance(matrix, ConstructionMatrix):
        matrix = ConstructionMatrix.from_array(matrix)
    system = realize_construction_matrix(matrix)
    if not system.flags.finitely_primitive:
        raise MissingAssumption("realized system is not finitely primitive")
    spec = spectral_dimension(matrix, tol=tol)
    bowen = bowen_dimension(system, "partition", depth, tol=tol, strategy="matrix")
    diff = abs(bowen.estimate - spec.estimate)
    lo, hi = bowen.enclosure
    tolerance = max(hi - bowen.estimate, bowen.estimate - lo) + 2 * tol
    return ConsistencyReport(bowen, spec, diff, tolerance, diff <= tolerance)
