"""Directed multigraphs, admissible words and their duals.

Forward words ``(w_1, ..., w_n)`` are admissible when ``A[w_j, w_{j+1}] = 1``.
Dual words are written right to left, ``(..., w_2, w_1)``; a :class:`DualWord`
stores its letters starting from the rightmost one, so ``letters[0]`` is
``w_1`` and admissibility reads ``A[letters[j+1], letters[j]] = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidGraph, InvalidLength, InvalidParameter

__all__ = [
    "EdgeGraph",
    "Word",
    "DualWord",
    "build_graph",
    "enumerate_words",
    "word_array",
    "count_words",
    "common_prefix_length",
    "word_metric",
    "check_finite_primitivity",
    "connector_length",
    "is_irreducible",
    "random_word",
]


@dataclass(frozen=True, eq=False)
class EdgeGraph:
    vertex_count: int
    edges: tuple[tuple[int, int, int], ...]
    incidence: np.ndarray = field(repr=False)
    overridden: bool = False
    synthetic: bool = False

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def initial(self, e: int) -> int:
        return self.edges[e][1]

    def terminal(self, e: int) -> int:
        return self.edges[e][2]

    def successors(self, e: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.incidence[e])]

    def predecessors(self, e: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.incidence[:, e])]

    def same_incidence(self, other: "EdgeGraph") -> bool:
        return (self.incidence.shape == other.incidence.shape
                and bool(np.array_equal(self.incidence, other.incidence)))


def _check_letters(letters) -> tuple[int, ...]:
    letters = tuple(int(x) for x in letters)
    if not letters:
        raise InvalidLength("words have length >= 1")
    return letters


@dataclass(frozen=True)
class Word:
    letters: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "letters", _check_letters(self.letters))

    def __len__(self):
        return len(self.letters)

    @property
    def sequence(self) -> tuple[int, ...]:
        """Letters as read left to right."""
        return self.letters

    def truncate(self, n: int) -> "Word":
        return Word(self.letters[:n])

    def is_admissible(self, graph: EdgeGraph) -> bool:
        A = graph.incidence
        return all(A[a, b] for a, b in zip(self.letters, self.letters[1:]))


@dataclass(frozen=True)
class DualWord:
    letters: tuple[int, ...]  # letters[0] is the rightmost letter

    def __post_init__(self):
        object.__setattr__(self, "letters", _check_letters(self.letters))

    def __len__(self):
        return len(self.letters)

    @classmethod
    def from_sequence(cls, seq: Sequence[int]) -> "DualWord":
        """Build from the left-to-right reading ``(w_n, ..., w_1)``."""
        return cls(tuple(reversed(tuple(seq))))

    @property
    def sequence(self) -> tuple[int, ...]:
        return tuple(reversed(self.letters))

    def truncate(self, n: int) -> "DualWord":
        return DualWord(self.letters[:n])

    def is_admissible(self, graph: EdgeGraph) -> bool:
        A = graph.incidence
        return all(A[b, a] for a, b in zip(self.letters, self.letters[1:]))


def build_graph(vertex_count: int, edge_list: Iterable[Sequence[int]],
                incidence=None) -> EdgeGraph:
    """Build an :class:`EdgeGraph` from edge endpoints ``(initial, terminal)``.

    ``incidence`` optionally overrides the endpoint-derived matrix. When the
    override is not entrywise below the derived one, the vertex structure is
    marked synthetic.
    """
    if vertex_count < 1:
        raise InvalidGraph("vertex_count must be >= 1")
    edges = []
    for k, pair in enumerate(edge_list):
        if len(pair) != 2:
            raise InvalidGraph(f"edge {k}: expected (initial, terminal)")
        i, t = (int(v) for v in pair)
        if not (0 <= i < vertex_count and 0 <= t < vertex_count):
            raise InvalidGraph(f"edge {k}: endpoint out of range 0..{vertex_count - 1}")
        edges.append((k, i, t))
    if not edges:
        raise InvalidGraph("graph has no edges")
    terminals = np.array([t for _, _, t in edges])
    initials = np.array([i for _, i, _ in edges])
    derived = (terminals[:, None] == initials[None, :]).astype(np.int64)

    if incidence is None:
        return EdgeGraph(vertex_count, tuple(edges), derived)

    override = np.asarray(incidence)
    if override.shape != derived.shape:
        raise InvalidGraph(f"incidence override must be {derived.shape}, got {override.shape}")
    if not np.all((override == 0) | (override == 1)):
        raise InvalidGraph("incidence override must be a 0/1 matrix")
    override = override.astype(np.int64)
    synthetic = bool(np.any(override > derived))
    return EdgeGraph(vertex_count, tuple(edges), override, overridden=True,
                     synthetic=synthetic)


def count_words(graph: EdgeGraph, n: int) -> int:
    """``|Sigma^n|`` as the entry sum of ``A^(n-1)`` (exact integer arithmetic)."""
    if n < 1:
        raise InvalidLength("n must be >= 1")
    A = graph.incidence.astype(object)
    v = np.ones(graph.edge_count, dtype=object)
    for _ in range(n - 1):
        v = A.dot(v)
    return int(sum(v))


def word_array(graph: EdgeGraph, n: int) -> np.ndarray:
    """All admissible words of length ``n`` as rows of an int array, lexicographic."""
    if n < 1:
        raise InvalidLength("n must be >= 1")
    A = graph.incidence.astype(bool)
    words = np.arange(graph.edge_count, dtype=np.int64)[:, None]
    for _ in range(n - 1):
        rows, cols = np.nonzero(A[words[:, -1]])
        words = np.column_stack([words[rows], cols])
    return words


def enumerate_words(graph: EdgeGraph, n: int) -> list[Word]:
    return [Word(tuple(row)) for row in word_array(graph, n).tolist()]


def common_prefix_length(a, b) -> int:
    """Length of the longest common initial subword.

    For dual words the comparison starts from the right, which is the start of
    the stored letter tuple.
    """
    if type(a) is not type(b) and (isinstance(a, (Word, DualWord)) or isinstance(b, (Word, DualWord))):
        raise InvalidParameter("cannot compare a Word with a DualWord")
    la = a.letters if isinstance(a, (Word, DualWord)) else tuple(a)
    lb = b.letters if isinstance(b, (Word, DualWord)) else tuple(b)
    n = 0
    for x, y in zip(la, lb):
        if x != y:
            break
        n += 1
    return n


def word_metric(a, b, base: float) -> float:
    if not 0.0 < base < 1.0:
        raise InvalidParameter(f"metric base must lie in (0, 1), got {base}")
    return base ** common_prefix_length(a, b)


def _positive_power_reach(A: np.ndarray, q: int) -> np.ndarray:
    """Boolean matrix of pairs joined by a connector of exactly ``q`` letters."""
    B = A.astype(bool)
    R = B.copy()
    for _ in range(q):
        R = (R.astype(np.int64) @ B.astype(np.int64)) > 0
    return R


def connector_length(graph: EdgeGraph, q_max: int = 64) -> int | None:
    """Smallest ``q >= 0`` such that every edge pair is joined by a length-``q`` word.

    ``q = 0`` means every concatenation is admissible.
    """
    for q in range(q_max + 1):
        if _positive_power_reach(graph.incidence, q).all():
            return q
    return None


def check_finite_primitivity(graph: EdgeGraph, n_max: int):
    """Return ``(n, witnesses)`` for the smallest workable ``n <= n_max``, else None.

    ``witnesses`` maps each ordered edge pair to one connecting word of length n.
    """
    if n_max < 1:
        raise InvalidParameter("n_max must be >= 1")
    A = graph.incidence.astype(bool)
    E = graph.edge_count
    for n in range(1, n_max + 1):
        if not _positive_power_reach(A, n).all():
            continue
        words = word_array(graph, n)
        firsts, lasts = words[:, 0], words[:, -1]
        witnesses = {}
        for e1, e2 in product(range(E), repeat=2):
            ok = A[e1, firsts] & A[lasts, e2]
            witnesses[(e1, e2)] = Word(tuple(words[int(np.argmax(ok))]))
        return n, witnesses
    return None


def is_irreducible(support: np.ndarray) -> bool:
    """Strong connectivity of the digraph with adjacency ``support != 0``."""
    B = (np.asarray(support) != 0).astype(np.int64)
    p = B.shape[0]
    R = np.eye(p, dtype=np.int64) | B
    for _ in range(max(p.bit_length(), 1) + 1):
        R = ((R @ R) > 0).astype(np.int64)
    return bool((R > 0).all()) and bool(B.any(axis=1).all())


def random_word(graph: EdgeGraph, n: int, rng: np.random.Generator,
                start: Sequence[int] = ()) -> tuple[int, ...]:
    """A forward-admissible word of length ``n`` extending ``start``.

    Letters are drawn uniformly among admissible successors; words that reach a
    dead end are redrawn.
    """
    for _ in range(1000):
        letters = list(start)
        if not letters:
            letters.append(int(rng.integers(graph.edge_count)))
        while len(letters) < n:
            succ = np.flatnonzero(graph.incidence[letters[-1]])
            if succ.size == 0:
                break
            letters.append(int(rng.choice(succ)))
        if len(letters) == n:
            return tuple(letters)
    raise InvalidGraph("could not sample an admissible word; graph has dead ends")
