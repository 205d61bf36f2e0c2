"""Graph data model, grounded Laplacians and seeded random-graph generators.

Node ids are dense integers ``0..n-1``. An edge ``(i, j, w)`` means node ``i``
influences node ``j`` with weight ``w``; undirected graphs store each edge
once with ``i < j``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Graph",
    "GroundedLaplacian",
    "TopologySet",
    "grounded_laplacian",
    "geometric_graph",
    "erdos_renyi",
    "named_graph",
    "load_graph",
    "save_graph",
]


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int, float], ...] = ()
    directed: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise GraphError(f"node count must be nonnegative, got {self.n}")
        canon = []
        seen = set()
        for e in self.edges:
            if len(e) == 2:
                i, j, w = int(e[0]), int(e[1]), 1.0
            else:
                i, j, w = int(e[0]), int(e[1]), float(e[2])
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) references a node outside 0..{self.n - 1}")
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if w == 0.0 or not np.isfinite(w):
                raise GraphError(f"edge ({i}, {j}) has invalid weight {w}")
            if not self.directed and i > j:
                i, j = j, i
            if (i, j) in seen:
                raise GraphError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            canon.append((i, j, w))
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Dense weight matrix ``W`` with ``W[i, j]`` the weight of edge i -> j.

        Symmetric for undirected graphs.
        """
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = w
            if not self.directed:
                a[j, i] = w
        return a

    def laplacian(self) -> np.ndarray:
        """In-neighbour Laplacian: ``L[i, i]`` is the weighted in-degree of i and
        ``L[i, j] = -w`` for every edge j -> i."""
        a = self.adjacency()
        return np.diag(a.sum(axis=0)) - a.T

    def degrees(self) -> np.ndarray:
        """Unweighted degree (in + out for directed graphs)."""
        deg = np.zeros(self.n, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def in_neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            nbrs[j].append(i)
            if not self.directed:
                nbrs[i].append(j)
        return [sorted(x) for x in nbrs]

    def out_neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            nbrs[i].append(j)
            if not self.directed:
                nbrs[j].append(i)
        return [sorted(x) for x in nbrs]

    def _sparse(self) -> csr_matrix:
        a = self.adjacency() != 0
        return csr_matrix(a.astype(np.int8))

    def is_connected(self) -> bool:
        """Weak connectivity (plain connectivity for undirected graphs)."""
        if self.n == 0:
            return True
        k, _ = connected_components(self._sparse(), directed=self.directed, connection="weak")
        return k == 1

    def is_strongly_connected(self) -> bool:
        if self.n == 0:
            return True
        k, _ = connected_components(self._sparse(), directed=True, connection="strong")
        return k == 1

    def components(self, strong: bool = False) -> np.ndarray:
        _, labels = connected_components(
            self._sparse(), directed=True, connection="strong" if strong else "weak"
        )
        return labels

    def to_directed(self) -> "Graph":
        if self.directed:
            return self
        edges = [(i, j, w) for i, j, w in self.edges] + [(j, i, w) for i, j, w in self.edges]
        return Graph(self.n, tuple(sorted(edges)), directed=True)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "directed": self.directed,
            "edges": [[i, j, _num(w)] for i, j, w in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        return cls(int(d["n"]), tuple(tuple(e) for e in d.get("edges", [])), bool(d.get("directed", False)))


def _num(w: float):
    return int(w) if float(w).is_integer() and abs(w) < 2**53 else w


@dataclass(frozen=True)
class GroundedLaplacian:
    input_set: tuple[int, ...]
    followers: tuple[int, ...]
    L_ff: np.ndarray
    L_fl: np.ndarray
    index: dict[int, int] = field(default_factory=dict)

    def row_of(self, node: int) -> int:
        try:
            return self.index[node]
        except KeyError:
            raise GraphError(f"node {node} is an input node, not a follower") from None


def _check_set(g: Graph, s: Iterable[int]) -> tuple[int, ...]:
    s = tuple(sorted({int(v) for v in s}))
    for v in s:
        if not 0 <= v < g.n:
            raise GraphError(f"unknown node id {v} (graph has {g.n} nodes)")
    return s


def grounded_laplacian(g: Graph, s: Iterable[int]) -> GroundedLaplacian:
    s = _check_set(g, s)
    sset = set(s)
    followers = tuple(v for v in range(g.n) if v not in sset)
    L = g.laplacian()
    f = np.asarray(followers, dtype=int)
    l = np.asarray(s, dtype=int)
    return GroundedLaplacian(
        input_set=s,
        followers=followers,
        L_ff=L[np.ix_(f, f)],
        L_fl=L[np.ix_(f, l)],
        index={v: r for r, v in enumerate(followers)},
    )


def full_grounded_laplacian(g: Graph, s: Iterable[int]) -> np.ndarray:
    """n x n Laplacian with the input rows zeroed (inputs hold their state)."""
    s = _check_set(g, s)
    L = g.laplacian()
    L[list(s), :] = 0.0
    return L


@dataclass(frozen=True)
class TopologySet:
    topologies: tuple[Graph, ...]
    mode: str = "average"
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.topologies:
            raise GraphError("topology set is empty")
        n = self.topologies[0].n
        if any(t.n != n for t in self.topologies):
            raise GraphError("all topologies must share the same node set")
        if self.mode not in ("average", "worst_case", "sampled"):
            raise GraphError(f"unknown topology mode {self.mode!r}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if len(w) != len(self.topologies) or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
                raise GraphError("topology weights must be nonnegative, one per topology, and sum to 1")

    @property
    def n(self) -> int:
        return self.topologies[0].n


# -- generators ---------------------------------------------------------------

def geometric_graph(n: int, width: float, radius: float, seed=None) -> Graph:
    """Random geometric graph on a hard-boundary square of side ``width``."""
    if n < 1 or width <= 0 or radius <= 0:
        raise GraphError("geometric graph needs n >= 1, width > 0, radius > 0")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, width, size=(n, 2))
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    iu, ju = np.triu_indices(n, 1)
    mask = d2[iu, ju] <= radius * radius
    edges = tuple((int(i), int(j), 1.0) for i, j in zip(iu[mask], ju[mask]))
    return Graph(n, edges, directed=False)


def geometric_positions(n: int, width: float, seed=None) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, width, size=(n, 2))


def erdos_renyi(n: int, q: float, seed=None, directed: bool = False) -> Graph:
    if not 0.0 <= q <= 1.0:
        raise GraphError(f"edge probability must lie in [0, 1], got {q}")
    rng = np.random.default_rng(seed)
    if directed:
        keep = rng.random((n, n)) < q
        np.fill_diagonal(keep, False)
        ii, jj = np.nonzero(keep)
    else:
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < q
        ii, jj = iu[keep], ju[keep]
    return Graph(n, tuple((int(i), int(j), 1.0) for i, j in zip(ii, jj)), directed=directed)


def named_graph(kind: str, n: int = 0, edges: Sequence | None = None, directed: bool = False) -> Graph:
    """Canonical unweighted topologies: ``ring``, ``path``, ``star`` (node 0 is the
    centre) or ``custom`` from an explicit edge list."""
    if kind == "custom":
        if edges is None:
            raise GraphError("custom graph needs an edge list")
        if n <= 0:
            n = 1 + max((max(int(e[0]), int(e[1])) for e in edges), default=-1)
        return Graph(n, tuple(tuple(e) for e in edges), directed=directed)
    if n < 1:
        raise GraphError("named graphs need n >= 1")
    if kind == "path":
        pairs = [(i, i + 1) for i in range(n - 1)]
    elif kind == "ring":
        pairs = [(i, i + 1) for i in range(n - 1)]
        if n >= 3 or (directed and n == 2):
            pairs.append((n - 1, 0))
    elif kind == "star":
        pairs = [(0, i) for i in range(1, n)]
    else:
        raise GraphError(f"unknown graph kind {kind!r}")
    return Graph(n, tuple((i, j, 1.0) for i, j in pairs), directed=directed)


# -- file formats ---------------------------------------------------------------

def save_graph(g: Graph, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "edgelist")
    if fmt == "json":
        path.write_text(json.dumps(g.to_dict()) + "\n")
    else:
        lines = [f"# n={g.n} directed={int(g.directed)}"]
        lines += [f"{i} {j} {_fmt_weight(w)}" for i, j, w in g.edges]
        path.write_text("\n".join(lines) + "\n")


def _fmt_weight(w: float) -> str:
    return str(_num(w)) if float(w).is_integer() else repr(float(w))


def load_graph(path) -> Graph:
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        return Graph.from_dict(json.loads(text))
    return parse_edgelist(text)


def parse_edgelist(text: str) -> Graph:
    """Parse ``i j [w]`` lines. Non-integer labels are mapped to dense ids in
    order of first appearance; an optional ``# n=.. directed=..`` header is honoured."""
    n_decl, directed = None, False
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("n="):
                    n_decl = int(tok[2:])
                elif tok.startswith("directed="):
                    directed = tok[9:].lower() in ("1", "true", "yes")
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"malformed edge line: {raw!r}")
        rows.append((parts[0], parts[1], float(parts[2]) if len(parts) == 3 else 1.0))
    labels = [x for r in rows for x in r[:2]]
    if all(_is_int(x) for x in labels):
        ids = {x: int(x) for x in labels}
        n = max([int(x) + 1 for x in labels], default=0)
    else:
        ids = {}
        for x in labels:
            ids.setdefault(x, len(ids))
        n = len(ids)
    if n_decl is not None:
        n = max(n, n_decl)
    return Graph(n, tuple((ids[a], ids[b], w) for a, b, w in rows), directed=directed)


def _is_int(s: str) -> bool:
    try:
        return int(s) >= 0 and str(int(s)) == s
    except ValueError:
        return False
