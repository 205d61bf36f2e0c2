"""Matroids given by independence oracles, with memoised rank functions."""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .graph import Graph
from .matching import max_matching

__all__ = [
    "Matroid",
    "MatroidAxiomError",
    "InfeasibleMatroidError",
    "TransversalInstance",
    "uniform_matroid",
    "transversal_matroid",
    "controllability_matroid",
    "check_axioms",
]


class MatroidAxiomError(AssertionError):
    pass


class InfeasibleMatroidError(ValueError):
    pass


class Matroid:
    """A matroid on ``ground`` defined by an independence oracle.

    ``rank_fn`` may be supplied when a faster exact rank is known; otherwise the
    rank is found greedily, which is exact for matroids.
    """

    def __init__(self, ground: Iterable[int], oracle: Callable[[frozenset], bool],
                 rank_fn: Callable[[frozenset], int] | None = None, name: str = "matroid",
                 cache: bool = True, advisory: bool = False):
        self.ground = tuple(sorted(ground))
        self._oracle = oracle
        self._rank_fn = rank_fn
        self.name = name
        self.advisory = advisory
        self._cache_enabled = cache
        self._indep: dict[frozenset, bool] = {}
        self._rank: dict[frozenset, int] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"<{self.name} on {len(self.ground)} elements>"

    def is_independent(self, x: Iterable[int]) -> bool:
        key = frozenset(x)
        if self._cache_enabled:
            with self._lock:
                hit = self._indep.get(key)
            if hit is not None:
                return hit
        ans = bool(self._oracle(key))
        if self._cache_enabled:
            with self._lock:
                self._indep[key] = ans
        return ans

    def rank(self, x: Iterable[int]) -> int:
        key = frozenset(x)
        if self._cache_enabled:
            with self._lock:
                hit = self._rank.get(key)
            if hit is not None:
                return hit
        if self._rank_fn is not None:
            r = int(self._rank_fn(key))
        else:
            cur: set = set()
            for e in sorted(key):
                if self.is_independent(cur | {e}):
                    cur.add(e)
            r = len(cur)
        if self._cache_enabled:
            with self._lock:
                self._rank[key] = r
        return r

    @property
    def full_rank(self) -> int:
        return self.rank(self.ground)


def uniform_matroid(ground: Iterable[int], k: int) -> Matroid:
    if k < 0:
        raise ValueError("k must be nonnegative")
    return Matroid(ground, lambda x: len(x) <= k, lambda x: min(len(x), k), name=f"U({k})")


@dataclass(frozen=True)
class TransversalInstance:
    """Right elements ``j`` of the ground set, each with its admissible left set ``W_j``."""

    sets: Mapping[Hashable, Sequence[Hashable]]

    @property
    def ground(self) -> tuple:
        return tuple(self.sets)


def transversal_matroid(inst: TransversalInstance) -> Matroid:
    sets = {j: list(ws) for j, ws in inst.sets.items()}

    def rank(x: frozenset) -> int:
        return len(max_matching({j: sets[j] for j in sorted(x)}))

    return Matroid(inst.ground, lambda x: rank(x) == len(x), rank, name="transversal")


def controllability_matroid(g: Graph, k: int) -> Matroid:
    """Input sets of size <= k that extend to a structurally controllable input set.

    ``X`` is independent iff ``|X| + need(X) <= k`` where ``need(X)`` counts the
    followers left unmatched by a maximum matching of V minus X (at least one
    input is needed when X is empty). For non-strongly-connected graphs the
    oracle ignores accessibility; the matroid is flagged ``advisory`` and
    selections must be re-verified with ``structural_report``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    nbrs = g.in_neighbors()
    n = g.n

    def need(x: frozenset) -> int:
        followers = [v for v in range(n) if v not in x]
        matched = len(max_matching({z: nbrs[z] for z in followers}))
        d = len(followers) - matched
        return max(d, 1 if not x and n else 0)

    if need(frozenset()) > k:
        raise InfeasibleMatroidError(
            f"at least {need(frozenset())} inputs are needed for structural controllability, k={k}"
        )
    strong = g.is_strongly_connected()
    return Matroid(range(n), lambda x: len(x) + need(x) <= k,
                   name=f"controllability(k={k})", advisory=not strong)


def check_axioms(m: Matroid, max_ground: int = 10) -> None:
    """Exhaustively verify M1-M3; raises MatroidAxiomError with a witness."""
    ground = m.ground
    if len(ground) > max_ground:
        raise ValueError(f"ground set too large for exhaustive check ({len(ground)} > {max_ground})")
    if not m.is_independent(()):
        raise MatroidAxiomError("M1 violated: empty set is dependent")
    indep = [frozenset(c) for r in range(len(ground) + 1)
             for c in itertools.combinations(ground, r) if m.is_independent(c)]
    indep_set = set(indep)
    for y in indep:
        for e in y:
            if y - {e} not in indep_set:
                raise MatroidAxiomError(f"M2 violated: {sorted(y)} independent but {sorted(y - {e})} is not")
    for x in indep:
        for y in indep:
            if len(x) < len(y) and not any((x | {e}) in indep_set for e in y - x):
                raise MatroidAxiomError(f"M3 violated: X={sorted(x)}, Y={sorted(y)}")
