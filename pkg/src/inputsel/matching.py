"""Maximum bipartite matching (Hopcroft-Karp) and Hall-violator extraction."""
from __future__ import annotations

from collections import deque
from typing import Hashable, Iterable, Mapping, Sequence

__all__ = ["max_matching", "hall_violator"]

_INF = float("inf")


def max_matching(adj: Mapping[Hashable, Sequence[Hashable]]) -> dict:
    """Maximum matching of a bipartite graph given as ``right -> [left, ...]``.

    Returns a dict mapping each matched right vertex to its left partner.
    Right vertices are processed in the iteration order of ``adj`` and
    neighbour lists in their given order, so results are deterministic.
    """
    right = list(adj)
    pair_r: dict = {}
    pair_l: dict = {}
    dist: dict = {}

    def bfs() -> bool:
        q = deque()
        for r in right:
            if r not in pair_r:
                dist[r] = 0
                q.append(r)
            else:
                dist[r] = _INF
        found = _INF
        while q:
            r = q.popleft()
            if dist[r] >= found:
                continue
            for l in adj[r]:
                r2 = pair_l.get(l)
                if r2 is None:
                    found = min(found, dist[r] + 1)
                elif dist[r2] == _INF:
                    dist[r2] = dist[r] + 1
                    q.append(r2)
        return found != _INF

    def dfs(r) -> bool:
        # iterative DFS along the BFS layering
        stack = [(r, iter(adj[r]))]
        path = []
        while stack:
            node, it = stack[-1]
            advanced = False
            for l in it:
                r2 = pair_l.get(l)
                if r2 is None:
                    path.append((node, l))
                    for rr, ll in path:
                        pair_r[rr] = ll
                        pair_l[ll] = rr
                    return True
                if dist[r2] == dist[node] + 1:
                    path.append((node, l))
                    stack.append((r2, iter(adj[r2])))
                    advanced = True
                    break
            if not advanced:
                dist[node] = _INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        for r in right:
            if r not in pair_r:
                dfs(r)
    return pair_r


def hall_violator(adj: Mapping[Hashable, Sequence[Hashable]], matching: Mapping) -> tuple[set, set] | None:
    """Return ``(A, N(A))`` with ``|N(A)| < |A|`` if some right vertex is unmatched.

    Grown from one unmatched right vertex along alternating paths; every left
    vertex reached is matched (the matching is maximum), so
    ``|N(A)| = |A| - 1``.
    """
    unmatched = [r for r in adj if r not in matching]
    if not unmatched:
        return None
    pair_l = {l: r for r, l in matching.items()}
    start = unmatched[0]
    a_set = {start}
    n_set: set = set()
    q = deque([start])
    while q:
        r = q.popleft()
        for l in adj[r]:
            if l in n_set:
                continue
            n_set.add(l)
            r2 = pair_l.get(l)
            if r2 is None:
                raise RuntimeError("matching is not maximum: augmenting path found")
            if r2 not in a_set:
                a_set.add(r2)
                q.append(r2)
    return a_set, n_set


def matching_size_bruteforce(adj: Mapping[Hashable, Sequence[Hashable]]) -> int:
    """Simple augmenting-path (Kuhn) matching size; an independent check."""
    match_l: dict = {}

    def try_r(r, seen) -> bool:
        for l in adj[r]:
            if l in seen:
                continue
            seen.add(l)
            if l not in match_l or try_r(match_l[l], seen):
                match_l[l] = r
                return True
        return False

    return sum(try_r(r, set()) for r in adj)


def bipartite_from_sets(sets: Iterable[Iterable[Hashable]]) -> dict:
    return {j: list(s) for j, s in enumerate(sets)}
