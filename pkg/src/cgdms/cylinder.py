"""Compositions along words, cylinder sets and the finite-depth coding map.

Words are handled through their left-to-right written sequence; for both a
forward word ``(w_1, ..., w_n)`` and a dual word ``(w_n, ..., w_1)`` the composed
map applies the rightmost written letter first. Batch routines take an int
array of written sequences (one word per row).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Inadmissible, MissingAssumption
from .maps import Ball, Interval
from .symbolic import DualWord, Word
from .system import Cgdms, grid_points

__all__ = [
    "CylinderSet",
    "ComposedMap",
    "written_sequence",
    "compose",
    "cylinder",
    "cylinder_diameters",
    "propagate_intervals",
    "sup_inf_derivative_norm",
    "log_derivative_extrema",
    "grid_log_slack",
    "code_point",
    "cylinder_distance",
]

# rows * grid points processed per numpy pass in the grid routines
_CHUNK_CELLS = 1 << 22


def written_sequence(word, orientation: str | None = None) -> tuple[int, ...]:
    if isinstance(word, (Word, DualWord)):
        return word.sequence
    seq = tuple(int(x) for x in word)
    if orientation not in (None, "forward", "dual"):
        raise ValueError(f"orientation must be 'forward' or 'dual', got {orientation!r}")
    return seq


def _check_admissible(system: Cgdms, seq) -> None:
    A = system.graph.incidence
    if not seq:
        raise Inadmissible("empty word")
    for a, b in zip(seq, seq[1:]):
        if not A[a, b]:
            raise Inadmissible(f"transition {a}->{b} is not allowed")


def _check_batch(system: Cgdms, words: np.ndarray) -> None:
    if words.ndim != 2 or words.shape[1] == 0:
        raise Inadmissible("expected a 2-D array of words")
    if words.shape[1] > 1:
        ok = system.graph.incidence[words[:, :-1], words[:, 1:]]
        if not ok.all():
            row = int(np.argmin(ok.all(axis=1)))
            raise Inadmissible(f"word {words[row].tolist()} is not admissible")


@dataclass(frozen=True, eq=False)
class ComposedMap:
    system: Cgdms
    word: tuple[int, ...]  # written sequence

    def _orbit(self, x):
        """Points visited by the composition, innermost map first."""
        pts = [np.asarray(x, dtype=float)]
        for e in reversed(self.word):
            m = self.system.maps[e]
            pts.append(m.apply(pts[-1]) if not self.system.is_1d else m(pts[-1]))
        return pts

    def evaluate(self, x):
        return self._orbit(x)[-1]

    __call__ = evaluate

    def log_derivative_norm(self, x):
        if self.system.constant_derivative:
            val = math.fsum(math.log(self.system.maps[e].ratio) for e in self.word)
            x = np.asarray(x, dtype=float)
            shape = x.shape if self.system.is_1d else x.shape[:-1]
            return np.full(shape, val) if shape else val
        pts = self._orbit(x)
        total = 0.0
        for p, e in zip(pts, reversed(self.word)):
            total = total + np.log(np.abs(self.system.maps[e].derivative(p)))
        return total

    def derivative_norm(self, x):
        return np.exp(self.log_derivative_norm(x))


def compose(system: Cgdms, word, orientation: str | None = None) -> ComposedMap:
    seq = written_sequence(word, orientation)
    _check_admissible(system, seq)
    return ComposedMap(system, seq)


@dataclass(frozen=True, eq=False)
class CylinderSet:
    word: Word | DualWord
    geometry: Interval | Ball
    diameter: float
    log_diameter: float

    @property
    def depth(self) -> int:
        return len(self.word)


def propagate_intervals(system: Cgdms, words: np.ndarray):
    """Images of the state-space endpoints under each row's composition.

    Returns ``(a, b, d)`` with ``a``/``b`` the images of the low/high endpoint of
    ``X_{t(last letter)}`` and ``d = b - a`` propagated through ``diff``.
    """
    words = np.asarray(words, dtype=np.int64)
    g = system.graph
    term = np.array([g.terminal(e) for e in range(g.edge_count)])
    lo = np.array([s.geometry.lo for s in system.spaces])
    hi = np.array([s.geometry.hi for s in system.spaces])
    v0 = term[words[:, -1]]
    a, b = lo[v0].copy(), hi[v0].copy()
    d = b - a
    for j in range(words.shape[1] - 1, -1, -1):
        col = words[:, j]
        na, nb, nd = a.copy(), b.copy(), d.copy()
        for e in np.unique(col):
            m = system.maps[e]
            k = col == e
            na[k] = m(a[k])
            nb[k] = m(b[k])
            nd[k] = m.diff(a[k], b[k], d[k])
        a, b, d = na, nb, nd
    return a, b, d


def _propagate_balls(system: Cgdms, words: np.ndarray):
    words = np.asarray(words, dtype=np.int64)
    g = system.graph
    v0 = np.array([g.terminal(e) for e in words[:, -1]])
    centers = np.array([system.spaces[v].geometry.center for v in v0])
    logr = np.array([math.log(system.spaces[v].geometry.radius) for v in v0])
    for j in range(words.shape[1] - 1, -1, -1):
        col = words[:, j]
        for e in np.unique(col):
            m = system.maps[e]
            k = col == e
            centers[k] = m.apply(centers[k])
            logr[k] = logr[k] + math.log(m.ratio)
    return centers, logr


def cylinder_diameters(system: Cgdms, words: np.ndarray) -> np.ndarray:
    """Log-diameters of ``Delta_w`` for each row of written sequences."""
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    _check_batch(system, words)
    if system.constant_derivative:
        logs = np.log(system.ratios())
        g = system.graph
        logd = np.array([math.log(system.spaces[g.terminal(e)].diameter) for e in range(g.edge_count)])
        return np.array([math.fsum(logs[row]) for row in words]) + logd[words[:, -1]]
    _, _, d = propagate_intervals(system, words)
    return np.log(np.abs(d))


def cylinder(system: Cgdms, word, orientation: str | None = None) -> CylinderSet:
    seq = written_sequence(word, orientation)
    _check_admissible(system, seq)
    if not isinstance(word, (Word, DualWord)):
        word = DualWord.from_sequence(seq) if orientation == "dual" else Word(seq)
    arr = np.array([seq], dtype=np.int64)
    if system.is_1d:
        a, b, d = propagate_intervals(system, arr)
        a, b, d = float(a[0]), float(b[0]), float(d[0])
        lo, hi = min(a, b), max(a, b)
        if system.constant_derivative:
            logd = float(cylinder_diameters(system, arr)[0])
            diam = math.exp(logd)
        else:
            diam = abs(d)
            logd = math.log(diam)
        geom = Interval(lo, hi)  # may collapse to a point once diam is below one ulp
        return CylinderSet(word, geom, diam, logd)
    c, logr = _propagate_balls(system, arr)
    r = math.exp(float(logr[0]))
    return CylinderSet(word, Ball(c[0], r), 2.0 * r, float(logr[0]) + math.log(2.0))


def cylinder_distance(system: Cgdms, A: CylinderSet, B: CylinderSet) -> float:
    """Distance between two cylinders; ``inf`` when they lie in different vertex spaces."""
    g = system.graph
    if g.initial(A.word.sequence[0]) != g.initial(B.word.sequence[0]):
        return math.inf
    if system.is_1d:
        ga, gb = A.geometry, B.geometry
        return max(0.0, max(ga.lo, gb.lo) - min(ga.hi, gb.hi))
    ga, gb = A.geometry, B.geometry
    return max(0.0, float(np.linalg.norm(ga.center - gb.center)) - ga.radius - gb.radius)


def grid_log_slack(system: Cgdms) -> float:
    """Bound on how much ``log|D phi_w|`` can exceed its value at the nearest grid point."""
    c = system.constants
    if system.constant_derivative:
        return 0.0
    if c.holder_C is None or c.lambda_ is None:
        raise MissingAssumption("system constants are not verified")
    h = 1.0 / system.grid
    a = c.holder_alpha
    return c.holder_C * (0.5 * h) ** a / (1.0 - c.lambda_ ** a)


def log_derivative_extrema(system: Cgdms, words: np.ndarray):
    """Grid ``(max, min)`` of ``log|D phi_w|`` over ``X_{t(last letter)}`` per row.

    The true extrema lie within :func:`grid_log_slack` of these values.
    """
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    _check_batch(system, words)
    if system.constant_derivative:
        logs = np.log(system.ratios())
        vals = np.array([math.fsum(logs[row]) for row in words])
        return vals, vals.copy()
    g = system.graph
    last_v = np.array([g.terminal(e) for e in words[:, -1]])
    vmax = np.empty(len(words))
    vmin = np.empty(len(words))
    for v in np.unique(last_v):
        rows = np.flatnonzero(last_v == v)
        xs = grid_points(system.spaces[v].geometry, system.grid)
        step = max(1, _CHUNK_CELLS // xs.size)
        for s in range(0, rows.size, step):
            idx = rows[s:s + step]
            total = _suffix_tree_logs(system, words[idx], xs)
            vmax[idx] = total.max(axis=1)
            vmin[idx] = total.min(axis=1)
    return vmax, vmin


def _suffix_tree_logs(system: Cgdms, W: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """``log|D phi_w|`` on the grid for each row, sharing work between common suffixes."""
    n = W.shape[1]
    x = xs[None, :]
    total = np.zeros_like(x)
    inv = np.zeros(len(W), dtype=np.int64)
    for j in range(1, n + 1):
        uniq, first, new_inv = np.unique(W[:, n - j:], axis=0, return_index=True, return_inverse=True)
        parent = inv[first]
        px, pt = x[parent], total[parent]
        nx, nt = np.empty_like(px), np.empty_like(pt)
        col = uniq[:, 0]
        for e in np.unique(col):
            m = system.maps[e]
            k = col == e
            nt[k] = pt[k] + np.log(np.abs(m.derivative(px[k])))
            nx[k] = m(px[k])
        x, total, inv = nx, nt, new_inv.reshape(-1)
    return total[inv]


def sup_inf_derivative_norm(system: Cgdms, word, orientation: str | None = None):
    """Certified ``(sup |D phi_w|, inf |D phi_w|)`` bracketing the true extrema."""
    seq = written_sequence(word, orientation)
    _check_admissible(system, seq)
    hi, lo = log_derivative_extrema(system, np.array([seq]))
    slack = grid_log_slack(system)
    return math.exp(float(hi[0]) + slack), math.exp(float(lo[0]) - slack)


def code_point(system: Cgdms, word):
    """A point of ``Delta_{w|n}`` (its midpoint) and the diameter as error radius."""
    if isinstance(word, DualWord):
        raise ValueError("the coding map is defined on forward words")
    if not system.flags.strong_separation:
        raise MissingAssumption("code_point needs the strong separation condition")
    cyl = cylinder(system, word, "forward")
    geom = cyl.geometry
    point = 0.5 * (geom.lo + geom.hi) if isinstance(geom, Interval) else geom.center
    return point, cyl.diameter
