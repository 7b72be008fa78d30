"""Ratio geometry, the scaling function and the geometric-equivalence tester.

Dual ratios along ``(..., w_2, w_1)``::

    r_1 = diam(phi_{w_1}(X)) / diam(X),   r_n = diam(Delta_{w_n..w_1}) / diam(Delta_{w_n..w_2})

Forward ratios along ``(w_1, w_2, ...)``::

    r_n = diam(Delta_{w_1..w_n}) / diam(Delta_{w_1..w_{n-1}}),   with Delta of the empty word = X_{i(w_1)}

Error envelopes use the distortion constant ``K = C D^alpha / (1 - lambda^alpha)``
of the verified system: ``|log r_{n+m} - log r_n| <= K lambda^{n alpha}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .cylinder import propagate_intervals
from .errors import (GraphMismatch, Inadmissible, InvalidDepth, InvalidParameter,
                     MissingAssumption)
from .symbolic import DualWord, Word, common_prefix_length, random_word
from .system import Cgdms

__all__ = [
    "RatioSequence",
    "ScalingEstimate",
    "EquivalenceReport",
    "HolderDiagnostic",
    "dual_ratios",
    "forward_ratios",
    "ratio_geometry",
    "scaling_function",
    "scaling_log_estimates",
    "distortion_check",
    "holder_quotient",
    "holder_diagnostic",
    "random_dual_word",
    "left_extension",
    "geometric_equivalence",
    "NOISE_FLOOR",
]

NOISE_FLOOR = 1e-13
SLOPE_MAX = -0.05
R2_MIN = 0.8
OFFSET_MIN = 1e-3


@dataclass(frozen=True, eq=False)
class RatioSequence:
    word: Word | DualWord
    orientation: str
    values: np.ndarray
    error_bounds: np.ndarray  # log-envelope K lambda^{k alpha} at index k


@dataclass(frozen=True)
class ScalingEstimate:
    word: DualWord
    estimate: float
    depth: int
    error_bound: float


@dataclass(frozen=True, eq=False)
class HolderDiagnostic:
    K_hat: float
    K_hat_upper: float
    K_theory: float
    pairs: list = field(repr=False)


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    quotients: np.ndarray  # (words, depth) of r_n / s_n
    envelope: np.ndarray  # max over words of |q_n - 1|
    tail: tuple[int, int]
    slope: float | None
    slope_upper: float | None
    rate: float | None
    amplitude: float | None
    r_squared: float | None
    verdict: str
    words: np.ndarray
    assumptions_met: bool


def _distortion(system: Cgdms) -> tuple[float, float, float]:
    c = system.constants
    if c.lambda_ is None or c.holder_alpha is None:
        raise MissingAssumption("system constants are not verified")
    return system.distortion_constant, c.lambda_, c.holder_alpha


def _log_envelopes(system: Cgdms, n: int) -> np.ndarray:
    K, lam, a = _distortion(system)
    k = np.arange(1, n + 1, dtype=float)
    return K * lam ** (k * a)


def _require_flag(system: Cgdms, flag: str):
    if not getattr(system.flags, flag):
        raise MissingAssumption(f"{flag} is not established for this system")


def _diam_ratio_table(system: Cgdms) -> np.ndarray:
    g = system.graph
    return np.array([system.spaces[g.terminal(e)].diameter / system.spaces[g.initial(e)].diameter
                     for e in range(g.edge_count)])


def dual_ratios(system: Cgdms, words: np.ndarray) -> np.ndarray:
    """Dual ratio sequences ``r_1..r_n`` for rows of written sequences ``(w_n, ..., w_1)``.

    Column ``k-1`` of the result holds ``r_k`` of the dual truncation of length
    ``k``, i.e. of the written suffix of length ``k``.
    """
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    m, n = words.shape
    if n > 1 and not system.graph.incidence[words[:, :-1], words[:, 1:]].all():
        raise Inadmissible("dual word violates the transposed incidence")
    first = words[:, -1]
    if system.constant_derivative:
        ratios = system.ratios()
        out = np.empty((m, n))
        out[:, 0] = ratios[first]
        if n > 1:
            dr = _diam_ratio_table(system)
            out[:, 1:] = (ratios[first] * dr[first])[:, None]
        return out
    g = system.graph
    lo = np.array([s.geometry.lo for s in system.spaces])
    hi = np.array([s.geometry.hi for s in system.spaces])
    term = np.array([g.terminal(e) for e in range(g.edge_count)])
    init = np.array([g.initial(e) for e in range(g.edge_count)])
    # I tracks Delta_{w_k..w_1}, J tracks Delta_{w_k..w_2}
    vI, vJ = term[first], init[first]
    Ia, Ib = lo[vI].copy(), hi[vI].copy()
    Id = Ib - Ia
    Ja, Jb = lo[vJ].copy(), hi[vJ].copy()
    Jd = Jb - Ja
    base = Id.copy()
    out = np.empty((m, n))
    for k in range(n):
        col = words[:, n - 1 - k]
        nIa, nIb, nId = Ia.copy(), Ib.copy(), Id.copy()
        for e in np.unique(col):
            mp = system.maps[e]
            sel = col == e
            nIa[sel], nIb[sel] = mp(Ia[sel]), mp(Ib[sel])
            nId[sel] = mp.diff(Ia[sel], Ib[sel], Id[sel])
        if k == 0:
            out[:, 0] = np.abs(nId) / np.abs(base)
        else:
            nJa, nJb, nJd = Ja.copy(), Jb.copy(), Jd.copy()
            for e in np.unique(col):
                mp = system.maps[e]
                sel = col == e
                nJa[sel], nJb[sel] = mp(Ja[sel]), mp(Jb[sel])
                nJd[sel] = mp.diff(Ja[sel], Jb[sel], Jd[sel])
            Ja, Jb, Jd = nJa, nJb, nJd
            out[:, k] = np.abs(nId) / np.abs(Jd)
        Ia, Ib, Id = nIa, nIb, nId
    return out


def forward_ratios(system: Cgdms, words: np.ndarray) -> np.ndarray:
    """Forward ratio sequences ``r_1..r_n`` for rows of forward words."""
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    m, n = words.shape
    if n > 1 and not system.graph.incidence[words[:, :-1], words[:, 1:]].all():
        raise Inadmissible("forward word is not admissible")
    if system.constant_derivative:
        return (system.ratios() * _diam_ratio_table(system))[words]
    g = system.graph
    init_diam = np.array([system.spaces[g.initial(e)].diameter for e in words[:, 0]])
    diams = np.empty((m, n))
    for k in range(1, n + 1):
        _, _, d = propagate_intervals(system, words[:, :k])
        diams[:, k - 1] = np.abs(d)
    out = np.empty((m, n))
    out[:, 0] = diams[:, 0] / init_diam
    out[:, 1:] = diams[:, 1:] / diams[:, :-1]
    return out


def _as_word(word, orientation):
    if isinstance(word, (Word, DualWord)):
        return word, ("dual" if isinstance(word, DualWord) else "forward")
    if orientation == "dual":
        return DualWord.from_sequence(word), "dual"
    return Word(tuple(word)), "forward"


def ratio_geometry(system: Cgdms, word, orientation: str | None = None,
                   n: int | None = None) -> RatioSequence:
    word, orientation = _as_word(word, orientation)
    n = len(word) if n is None else n
    if not 1 <= n <= len(word):
        raise InvalidDepth(f"depth {n} exceeds word length {len(word)}")
    if not word.is_admissible(system.graph):
        raise Inadmissible(f"{word} is not admissible")
    word = word.truncate(n)
    seq = np.array([word.sequence])
    values = dual_ratios(system, seq)[0] if orientation == "dual" else forward_ratios(system, seq)[0]
    return RatioSequence(word, orientation, values, _log_envelopes(system, n))


def scaling_log_estimates(system: Cgdms, words: np.ndarray) -> np.ndarray:
    """``log r_n`` at full depth for rows of written dual sequences."""
    return np.log(dual_ratios(system, words)[:, -1])


def scaling_function(system: Cgdms, word, n: int | None = None) -> ScalingEstimate:
    """Estimate ``r(omega)`` by ``r_n(omega|n)`` with its exponential error bound."""
    _require_flag(system, "exponential_geometry")
    _require_flag(system, "strong_separation")
    if not isinstance(word, DualWord):
        word = DualWord.from_sequence(word)
    n = len(word) if n is None else n
    if not 1 <= n <= len(word):
        raise InvalidDepth(f"depth {n} exceeds word length {len(word)}")
    word = word.truncate(n)
    if not word.is_admissible(system.graph):
        raise Inadmissible(f"{word} is not admissible")
    r = float(dual_ratios(system, np.array([word.sequence]))[0, -1])
    K, lam, a = _distortion(system)
    return ScalingEstimate(word, r, n, r * math.expm1(K * lam ** (n * a)))


def distortion_check(system: Cgdms, word, n: int, m: int) -> tuple[float, float]:
    """Observed ``r_{n+m} / r_n`` along a dual word and the bound ``exp(K lambda^{n alpha})``."""
    if n < 1 or m < 1:
        raise InvalidDepth("n and m must be >= 1")
    seq = ratio_geometry(system, word, "dual", n + m)
    K, lam, a = _distortion(system)
    return float(seq.values[n + m - 1] / seq.values[n - 1]), math.exp(K * lam ** (n * a))


def random_dual_word(system: Cgdms, n: int, rng: np.random.Generator,
                     start: tuple[int, ...] = ()) -> DualWord:
    """Random dual word of length ``n`` whose rightmost letters are ``start``."""
    from .symbolic import build_graph  # local: transposed presentation only

    g = system.graph
    gt = build_graph(1, [(0, 0)] * g.edge_count, incidence=g.incidence.T.copy())
    return DualWord(random_word(gt, n, rng, start))


def holder_quotient(system: Cgdms, a: DualWord, b: DualWord) -> tuple[float, int]:
    """``|log(r(a) / r(b))| / lambda^{N alpha}`` and ``N`` for two dual truncations."""
    _, lam, alpha = _distortion(system)
    N = common_prefix_length(a, b)
    la = scaling_log_estimates(system, np.array([a.sequence]))[0]
    lb = scaling_log_estimates(system, np.array([b.sequence]))[0]
    return abs(float(la - lb)) / lam ** (N * alpha), N


def holder_diagnostic(system: Cgdms, sample_pairs: int, depth: int, seed) -> HolderDiagnostic:
    """Largest sampled Hölder quotient of ``log r`` against ``lambda^{N alpha}``.

    Pairs share a uniformly drawn number ``N < depth`` of rightmost letters and
    differ in letter ``N + 1``. ``K_hat_upper`` adds the truncation error of both
    estimates to each numerator.
    """
    if sample_pairs < 1:
        raise InvalidParameter("sample_pairs must be >= 1")
    _require_flag(system, "exponential_geometry")
    _require_flag(system, "strong_separation")
    K, lam, alpha = _distortion(system)
    rng = np.random.default_rng(seed)
    A = system.graph.incidence
    pairs = []
    while len(pairs) < sample_pairs:
        a = random_dual_word(system, depth, rng)
        N = int(rng.integers(depth))
        prev = a.letters[N - 1] if N > 0 else None
        options = [e for e in range(system.graph.edge_count)
                   if e != a.letters[N] and (prev is None or A[e, prev])]
        if not options:
            continue
        fork = int(rng.choice(options))
        b = random_dual_word(system, depth, rng, a.letters[:N] + (fork,))
        pairs.append((a, b))
    seq_a = np.array([p[0].sequence for p in pairs])
    seq_b = np.array([p[1].sequence for p in pairs])
    la = scaling_log_estimates(system, seq_a)
    lb = scaling_log_estimates(system, seq_b)
    Ns = np.array([common_prefix_length(p[0], p[1]) for p in pairs])
    denom = lam ** (Ns * alpha)
    num = np.abs(la - lb)
    trunc = 2.0 * K * lam ** (depth * alpha)
    records = [(p[0], p[1], int(N), float(q)) for p, N, q in zip(pairs, Ns, num / denom)]
    return HolderDiagnostic(float((num / denom).max()), float(((num + trunc) / denom).max()),
                            K, records)


def left_extension(system: Cgdms, letter: int, length: int) -> tuple[int, ...]:
    """Written letters placed to the left of ``letter`` by repeating a cycle through it.

    The cycle is the shortest closed path through ``letter``, ties broken
    lexicographically; without one the greedy smallest admissible predecessor
    chain is used and may stop early.
    """
    if length <= 0:
        return ()
    A = system.graph.incidence
    cycle = _shortest_cycle(A, letter)
    if cycle is None:
        out = []
        cur = letter
        for _ in range(length):
            preds = np.flatnonzero(A[:, cur])
            if preds.size == 0:
                break
            cur = int(preds[0])
            out.append(cur)
        return tuple(reversed(out))
    reps = -(-length // len(cycle))
    return tuple((cycle * reps)[-length:])


def _shortest_cycle(A: np.ndarray, start: int):
    # BFS over successors in ascending order gives the lexicographically least shortest path
    from collections import deque

    parent = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(A[u]):
            v = int(v)
            if v == start:
                path = [u]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return list(reversed(path))  # start, x_1, ..., u
            if v not in parent:
                parent[v] = u
                queue.append(v)
    return None


def _forward_sample(system: Cgdms, samples: int, depth: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.array([random_word(system.graph, depth, rng) for _ in range(samples)])


def geometric_equivalence(S: Cgdms, T: Cgdms, words=None, depth: int = 24,
                          samples: int = 32, seed=0,
                          require_separation: bool = True) -> EquivalenceReport:
    """Compare forward ratio geometries of two systems on one graph.

    The verdict regresses ``log max_w |r_n/s_n - 1|`` on ``n`` over the tail
    ``ceil(depth/3)..depth``, dropping points under the noise floor.
    """
    if not S.graph.same_incidence(T.graph):
        raise GraphMismatch("systems must share the incidence matrix")
    for sys_ in (S, T):
        _require_flag(sys_, "exponential_geometry")
    separated = S.flags.strong_separation and T.flags.strong_separation
    if require_separation and not separated:
        raise MissingAssumption("both systems need the strong separation condition")
    if words is None:
        words = _forward_sample(S, samples, depth, seed)
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    depth = words.shape[1]
    q = forward_ratios(S, words) / forward_ratios(T, words)
    env = np.abs(q - 1.0).max(axis=0)
    lo = math.ceil(depth / 3)
    idx = np.arange(max(lo, 1), depth + 1)
    tail = env[idx - 1]
    keep = tail >= NOISE_FLOOR
    slope = slope_upper = rate = amp = r2 = None
    if env.max() < NOISE_FLOOR:
        verdict = "equivalent"
    else:
        if keep.sum() >= 3:
            fit = stats.linregress(idx[keep], np.log(tail[keep]))
            slope, r2 = float(fit.slope), float(fit.rvalue ** 2)
            tcrit = stats.t.ppf(0.975, keep.sum() - 2)
            slope_upper = slope + float(tcrit * fit.stderr)
            rate, amp = -slope, float(math.exp(fit.intercept))
        if slope is not None and slope <= SLOPE_MAX and r2 >= R2_MIN and slope_upper < 0:
            verdict = "equivalent"
        elif tail.min() >= OFFSET_MIN:
            verdict = "not-equivalent"
        else:
            verdict = "inconclusive"
    return EquivalenceReport(q, env, (int(idx[0]), depth), slope, slope_upper, rate, amp, r2,
                             verdict, words, separated)
