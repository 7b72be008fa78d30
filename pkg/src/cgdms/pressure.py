"""Topological pressure from partition sums and from scaling-function products.

Both estimators reduce to ``(1/n) logsumexp(t * w)`` over per-word log weights
``w`` listed in lexicographic word order, so the reduction order never depends
on how the weights were computed or on the worker count.

Envelopes (``q`` the connector length, ``K`` the distortion constant)::

    partition:  P <= P_n + t*slack/n,           P >= (n P_n + log M) / (n + q)
    scaling:    P <= Q_n + t*(log B + K + rho)/n, P >= (n Q_n - t*(log B + rho) + log M) / (n + q)

with ``log M = -t K + q t log(lambda_minus)``, ``log B = K sum_k lambda^{k alpha}``,
``rho = log(max diam / min diam)`` and ``slack`` the grid slack of the
derivative maxima.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .cylinder import grid_log_slack, log_derivative_extrema
from .errors import BudgetExceeded, InvalidDepth, InvalidParameter, MissingAssumption
from .scaling import left_extension, scaling_log_estimates
from .symbolic import count_words, word_array
from .system import Cgdms, connector

__all__ = [
    "BUDGET_ENV",
    "DEFAULT_BUDGET",
    "DEFAULT_EXTENSION",
    "THETA",
    "PressureEstimate",
    "PressureCurve",
    "WordWeights",
    "word_budget",
    "word_weights",
    "partition_pressure",
    "scaling_pressure",
    "pressure_curve",
]

BUDGET_ENV = "CGDMS_WORD_BUDGET"
DEFAULT_BUDGET = 10 ** 7
DEFAULT_EXTENSION = 8
CHUNK_ROWS = 128
THETA = 0.0  # finite alphabets: every partition sum is finite

METHODS = ("partition", "scaling")
STRATEGIES = ("enumerate", "matrix")


@dataclass(frozen=True)
class PressureEstimate:
    t: float
    value: float
    lower: float
    upper: float
    depth: int
    method: str

    @property
    def envelope(self) -> float:
        return max(self.value - self.lower, self.upper - self.value)


@dataclass(frozen=True, eq=False)
class PressureCurve:
    t: np.ndarray
    estimates: tuple[PressureEstimate, ...]
    depth: int
    method: str
    monotone: bool
    convex: bool
    theta: float = THETA

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.estimates])

    @property
    def envelopes(self) -> np.ndarray:
        return np.array([e.envelope for e in self.estimates])


def word_budget(budget: int | None = None) -> int:
    if budget is not None:
        return int(budget)
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_BUDGET


def _check(system: Cgdms, method: str, n: int, strategy: str):
    if method not in METHODS:
        raise InvalidParameter(f"method must be one of {METHODS}, got {method!r}")
    if strategy not in STRATEGIES:
        raise InvalidParameter(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if n < 1:
        raise InvalidDepth("depth must be >= 1")
    if not system.flags.finitely_primitive:
        raise MissingAssumption("pressure needs a finitely primitive system")
    if method == "scaling" and not system.flags.exponential_geometry:
        raise MissingAssumption("scaling pressure needs exponential geometry")
    if strategy == "matrix" and not system.constant_derivative:
        raise InvalidParameter("the matrix strategy needs constant-derivative maps")


def _map_chunks(fn, chunks, workers: int):
    if workers <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


class _PartitionChunk:
    def __init__(self, system):
        self.system = system

    def __call__(self, words):
        return log_derivative_extrema(self.system, words)[0]


class _ScalingChunk:
    def __init__(self, system):
        self.system = system

    def __call__(self, words):
        return scaling_log_estimates(self.system, words)


def _row_fsum(table: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in table.tolist()])


def _edge_logs(system: Cgdms, method: str) -> np.ndarray:
    logs = np.log(system.ratios())
    if method == "scaling":
        g = system.graph
        dr = np.array([system.spaces[g.terminal(e)].diameter / system.spaces[g.initial(e)].diameter
                       for e in range(g.edge_count)])
        logs = np.log(system.ratios() * dr)
    return logs


@dataclass(frozen=True, eq=False)
class WordWeights:
    """Per-word log weights for one method and depth, or a matrix representation."""

    system: Cgdms
    method: str
    depth: int
    weights: np.ndarray | None  # lexicographic order; None for the matrix strategy
    edge_logs: np.ndarray | None = None

    def log_sum(self, t: float) -> float:
        if self.weights is not None:
            return float(logsumexp(t * self.weights))
        return _log_path_sum(self.system.graph.incidence, self.edge_logs, t, self.depth)

    def value(self, t: float) -> float:
        return self.log_sum(t) / self.depth


def word_weights(system: Cgdms, n: int, method: str = "partition", strategy: str = "enumerate",
                 workers: int = 1, budget: int | None = None,
                 extension: int = DEFAULT_EXTENSION) -> WordWeights:
    """Log weights of all length-``n`` words.

    ``partition``: grid maximum of ``log|D phi_w|``. ``scaling``: sum of
    ``log r`` over the dual sub-words ``(w_1..w_j)``, each extended to the left
    by ``extension`` letters of a cycle through ``w_1``.
    """
    _check(system, method, n, strategy)
    if strategy == "matrix":
        return WordWeights(system, method, n, None, _edge_logs(system, method))
    budget = word_budget(budget)
    count = count_words(system.graph, n)
    if count > budget:
        raise BudgetExceeded(n, count, budget)
    words = word_array(system.graph, n)
    if system.constant_derivative:
        return WordWeights(system, method, n, _row_fsum(_edge_logs(system, method)[words]))
    if method == "partition":
        chunks = [words[s:s + CHUNK_ROWS] for s in range(0, len(words), CHUNK_ROWS)]
        parts = _map_chunks(_PartitionChunk(system), chunks, workers)
        return WordWeights(system, method, n, np.concatenate(parts))
    return WordWeights(system, method, n, _scaling_weights(system, words, extension, workers))


def _scaling_weights(system: Cgdms, words: np.ndarray, extension: int, workers: int) -> np.ndarray:
    n = words.shape[1]
    ext = {e: left_extension(system, e, extension) for e in range(system.graph.edge_count)}
    table = np.empty(words.shape)
    for j in range(1, n + 1):
        # distinct prefixes of length j, in lexicographic order, each with its extension
        prefixes, inverse = np.unique(words[:, :j], axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        groups = {}
        for row, pref in enumerate(prefixes):
            groups.setdefault(len(ext[int(pref[0])]), []).append(row)
        logs = np.empty(len(prefixes))
        for L, rows in sorted(groups.items()):
            rows = np.array(rows)
            lead = np.array([ext[int(prefixes[r, 0])] for r in rows], dtype=np.int64).reshape(len(rows), L)
            full = np.hstack([lead, prefixes[rows]])
            chunks = [full[s:s + CHUNK_ROWS] for s in range(0, len(full), CHUNK_ROWS)]
            logs[rows] = np.concatenate(_map_chunks(_ScalingChunk(system), chunks, workers))
        table[:, j - 1] = logs[inverse]
    return _row_fsum(table)


def _log_path_sum(A: np.ndarray, edge_logs: np.ndarray, t: float, n: int) -> float:
    """``log sum_w exp(t * sum_j l_{w_j})`` over admissible words of length ``n``.

    Uses repeated squaring of the weighted incidence matrix with renormalisation.
    """
    v = np.exp(t * (edge_logs - edge_logs.max()))
    shift = n * t * float(edge_logs.max())
    W = A.astype(float) * v[None, :]
    scale = 0.0
    R = None
    k = n - 1
    base, bscale = W, 0.0
    while k:
        if k & 1:
            if R is None:
                R, scale = base.copy(), bscale
            else:
                R = R @ base
                s = R.max()
                R /= s
                scale += bscale + math.log(s)
        k >>= 1
        if k:
            base = base @ base
            s = base.max()
            base = base / s
            bscale = 2.0 * bscale + math.log(s)
    total = v.sum() if R is None else float(v @ R.sum(axis=1))
    return math.log(total) + scale + shift


def _envelope(system: Cgdms, method: str, t: float, n: int, value: float) -> tuple[float, float]:
    c = system.constants
    q = connector(system)
    if q is None:
        raise MissingAssumption("no connector length found for this graph")
    K = system.distortion_constant
    log_M = -t * K + q * t * math.log(c.lambda_minus)
    if method == "partition":
        slack = grid_log_slack(system)
        return (n * value + log_M) / (n + q), value + t * slack / n
    a = c.holder_alpha
    log_B = K * sum(c.lambda_ ** (k * a) for k in range(1, n + 1))
    rho = math.log(system.max_diameter / system.min_diameter)
    upper = value + t * (log_B + K + rho) / n
    lower = (n * value - t * (log_B + rho) + log_M) / (n + q)
    return lower, upper


def _estimate(weights: WordWeights, t: float) -> PressureEstimate:
    if t < 0:
        raise InvalidParameter("t must be >= 0")
    n = weights.depth
    value = weights.value(t)
    lower, upper = _envelope(weights.system, weights.method, t, n, value)
    return PressureEstimate(float(t), value, min(lower, value), max(upper, value), n, weights.method)


def partition_pressure(system: Cgdms, t: float, n: int = 10, strategy: str = "enumerate",
                       workers: int = 1, budget: int | None = None) -> PressureEstimate:
    """``(1/n) log sum_w ||D phi_w||^t`` with its envelope."""
    return _estimate(word_weights(system, n, "partition", strategy, workers, budget), t)


def scaling_pressure(system: Cgdms, t: float, n: int = 10, strategy: str = "enumerate",
                     workers: int = 1, budget: int | None = None,
                     extension: int = DEFAULT_EXTENSION) -> PressureEstimate:
    """``(1/n) log sum_w prod_k r(extension of (w_1..w_{n-k}))^t`` with its envelope."""
    return _estimate(word_weights(system, n, "scaling", strategy, workers, budget, extension), t)


def pressure_curve(system: Cgdms, t_grid, n: int = 10, method: str = "partition",
                   strategy: str = "enumerate", workers: int = 1,
                   budget: int | None = None) -> PressureCurve:
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise InvalidParameter("t grid must be a nonempty 1-D sequence")
    if np.any(np.diff(ts) < 0):
        raise InvalidParameter("t grid must be sorted ascending")
    weights = word_weights(system, n, method, strategy, workers, budget)
    est = tuple(_estimate(weights, float(t)) for t in ts)
    vals = np.array([e.value for e in est])
    env = np.array([e.envelope for e in est])
    monotone = bool(np.all(np.diff(vals) <= env[1:] + env[:-1]))
    convex = True
    for i in range(len(ts)):
        for j in range(i + 2, len(ts)):
            mid = 0.5 * (ts[i] + ts[j])
            mid_val = weights.value(mid)
            slack = env[i] + env[j] + 1e-12 * max(1.0, abs(mid_val))
            if mid_val > 0.5 * (vals[i] + vals[j]) + slack:
                convex = False
    return PressureCurve(ts, est, n, method, monotone, convex)
