"""Controllability metrics: Kalman rank, Gramian energy metrics, the regularised
minimum-energy function, and structural controllability via matchings.

Weight-matrix convention: ``w[i, j]`` is the coefficient of ``x_j`` in
``dx_i/dt``, so a graph edge j -> i populates ``w[i, j]``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg as sla

from .graph import Graph
from .matching import hall_violator, max_matching
from .numerics import expm, finite_horizon_gramian, gramian, numerical_rank

__all__ = [
    "LinearSystem",
    "EnergyTarget",
    "StructuralReport",
    "DriverNodes",
    "GramianSingularError",
    "system_from_graph",
    "ctrb_matrix",
    "ctrb_rank",
    "gramian_metrics",
    "min_energy_metric",
    "structural_report",
    "follower_rank",
    "gci",
    "min_input_set_structural",
]


class GramianSingularError(np.linalg.LinAlgError):
    """The Gramian is singular: (A, B) is not controllable."""


@dataclass(frozen=True)
class LinearSystem:
    """``dx/dt = W x`` with inputs chosen per ``variant``.

    actuated: A = W, B = identity columns indexed by S.
    grounded: A = W[F, F], B = W[F, S] with F = V minus S.
    """

    w: np.ndarray
    variant: str = "actuated"
    horizon: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        if w.shape[0] != w.shape[1]:
            raise ValueError("system matrix must be square")
        if self.variant not in ("actuated", "grounded"):
            raise ValueError(f"unknown variant {self.variant!r}")
        t0, t1 = self.horizon
        if not t1 > t0:
            raise ValueError("horizon needs t1 > t0")
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def matrices(self, s: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
        s = sorted(set(int(v) for v in s))
        if any(not 0 <= v < self.n for v in s):
            raise ValueError("input index out of range")
        if self.variant == "actuated":
            return self.w, np.eye(self.n)[:, s]
        f = [v for v in range(self.n) if v not in set(s)]
        return self.w[np.ix_(f, f)], self.w[np.ix_(f, s)]


def system_from_graph(g: Graph, weights: str = "laplacian", rng=None, low=0.5, high=1.5,
                      variant: str = "grounded", **kw) -> LinearSystem:
    """Build a LinearSystem from a graph.

    ``laplacian``: W = -L (consensus dynamics). ``random``: W[j, i] drawn
    uniformly from [low, high] for every edge i -> j, zero diagonal.
    """
    if weights == "laplacian":
        w = -g.laplacian()
    elif weights == "random":
        rng = np.random.default_rng(rng)
        mask = g.adjacency().T != 0
        w = np.where(mask, rng.uniform(low, high, size=mask.shape), 0.0)
    else:
        raise ValueError(f"unknown weight model {weights!r}")
    return LinearSystem(w, variant=variant, **kw)


def ctrb_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Krylov matrix (B, AB, ..., A^{n-1}B) with each block's columns unit-normalised."""
    n = a.shape[0]
    if b.size == 0 or n == 0:
        return np.zeros((n, 0))
    blocks = []
    cur = b
    for _ in range(n):
        norms = np.linalg.norm(cur, axis=0)
        norms[norms == 0] = 1.0
        cur = cur / norms
        blocks.append(cur)
        cur = a @ cur
    return np.hstack(blocks)


def ctrb_rank(sys: LinearSystem, s: Iterable[int], tol: float | None = None) -> int:
    a, b = sys.matrices(s)
    return numerical_rank(ctrb_matrix(a, b), tol)


def _trace_inverse(w: np.ndarray) -> float:
    if w.shape[0] == 0:
        return 0.0
    ev = np.linalg.eigvalsh(w)
    if ev.min() <= max(w.shape[0] * np.finfo(float).eps * ev.max(), 1e-300):
        raise GramianSingularError("Gramian is singular: the input set does not control the system")
    try:
        c = sla.cho_factor(w, lower=True)
    except np.linalg.LinAlgError:
        raise GramianSingularError("Gramian is not positive definite") from None
    return float(np.trace(sla.cho_solve(c, np.eye(w.shape[0]))))


def system_gramian(sys: LinearSystem, s: Iterable[int], finite: bool = False) -> np.ndarray:
    a, b = sys.matrices(s)
    return gramian(a, b, sys.horizon, finite=finite)


def gramian_metrics(sys: LinearSystem, s: Iterable[int], x: np.ndarray | None = None,
                    finite: bool = False) -> tuple[float, float]:
    """Return ``(h2, avg_energy)`` = ``(tr(X W X^T), tr(W^{-1}))``.

    Raises GramianSingularError when W is singular (only the energy term needs
    the inverse; use :func:`h2_norm` for the H2 term alone).
    """
    w = system_gramian(sys, s, finite)
    x = np.eye(w.shape[0]) if x is None else np.asarray(x, dtype=float)
    h2 = float(np.trace(x @ w @ x.T))
    return h2, _trace_inverse(w)


def h2_norm(sys: LinearSystem, s: Iterable[int], x: np.ndarray | None = None, finite: bool = False) -> float:
    w = system_gramian(sys, s, finite)
    x = np.eye(w.shape[0]) if x is None else np.asarray(x, dtype=float)
    return float(np.trace(x @ w @ x.T))


def avg_energy(sys: LinearSystem, s: Iterable[int], finite: bool = False) -> float:
    return _trace_inverse(system_gramian(sys, s, finite))


# -- minimum energy ----------------------------------------------------------------

@dataclass(frozen=True)
class EnergyTarget:
    x0: np.ndarray
    x1: np.ndarray
    epsilon: float = 1e-3

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).ravel()
        x1 = np.asarray(self.x1, dtype=float).ravel()
        if x0.shape != x1.shape:
            raise ValueError("x0 and x1 must have the same dimension")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x1", x1)


class EnergyModel:
    """Precomputes the per-node Gramians Gamma_i and the target split for f_eps.

    Diagonal actuation: each selected node receives its own input, so
    Gamma(S) = sum_{i in S} Gamma_i.
    """

    def __init__(self, sys: LinearSystem, target: EnergyTarget, basis: np.ndarray | None = None):
        a = sys.w
        n = sys.n
        if target.x0.shape != (n,):
            raise ValueError("target dimension does not match the system")
        t0, t1 = sys.horizon
        eye = np.eye(n)
        self.n = n
        self.eps = target.epsilon
        self.gammas = [finite_horizon_gramian(a, eye[:, [i]], t0, t1) for i in range(n)]
        self.v = target.x1 - expm(a * (t1 - t0)) @ target.x0
        if basis is None:
            if np.linalg.norm(self.v) == 0.0:
                basis = eye[:, 1:]
            else:
                basis = sla.null_space(self.v[None, :])
        self.basis = np.asarray(basis, dtype=float).reshape(n, -1)

    def gamma(self, s: Iterable[int]) -> np.ndarray:
        g = np.zeros((self.n, self.n))
        for i in s:
            g += self.gammas[i]
        return g

    def __call__(self, s: Iterable[int]) -> float:
        g = self.gamma(s)
        eye = np.eye(self.n)
        eps = self.eps
        first = float(self.v @ np.linalg.solve(g + eps * eye, self.v))
        vb = self.basis
        second = float(np.trace(vb.T @ np.linalg.solve(g + eps * eps * eye, vb)))
        return first + eps * second


def min_energy_metric(sys: LinearSystem, s: Iterable[int], target: EnergyTarget,
                      basis: np.ndarray | None = None) -> float:
    """f_eps(S) = v^T (Gamma + eps I)^{-1} v + eps * sum_i vb_i^T (Gamma + eps^2 I)^{-1} vb_i."""
    return EnergyModel(sys, target, basis)(s)


# -- structural controllability ------------------------------------------------------

@dataclass
class StructuralReport:
    accessible: bool
    inaccessible: list[int]
    dilation_free: bool
    dilation: list[int] | None
    dilation_neighbors: list[int] | None
    controllable: bool
    max_matching: list[tuple[int, int]]
    gci: int
    inputs: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_matching"] = [list(e) for e in self.max_matching]
        return d


def _bipartite(g: Graph, followers: Iterable[int]) -> dict:
    nbrs = g.in_neighbors()
    return {z: nbrs[z] for z in followers}


def follower_matching(g: Graph, s: Iterable[int]) -> tuple[dict, dict]:
    """Matching of followers z (right) to in-neighbours u (left): edge (u, z) iff u -> z."""
    s = set(s)
    adj = _bipartite(g, [v for v in range(g.n) if v not in s])
    return adj, max_matching(adj)


def follower_rank(g: Graph, followers: Iterable[int]) -> int:
    """Transversal-matroid rank of a follower set: its maximum matched size."""
    return len(max_matching(_bipartite(g, sorted(set(followers)))))


def reachable_from(g: Graph, s: Iterable[int]) -> np.ndarray:
    out = g.out_neighbors()
    seen = np.zeros(g.n, dtype=bool)
    q = deque()
    for v in s:
        if not seen[v]:
            seen[v] = True
            q.append(v)
    while q:
        v = q.popleft()
        for w in out[v]:
            if not seen[w]:
                seen[w] = True
                q.append(w)
    return seen


def structural_report(g: Graph, s: Iterable[int]) -> StructuralReport:
    s = sorted(set(int(v) for v in s))
    seen = reachable_from(g, s)
    inaccessible = [int(v) for v in np.flatnonzero(~seen)]
    adj, m = follower_matching(g, s)
    violator = hall_violator(adj, m)
    dilation_free = violator is None
    return StructuralReport(
        accessible=not inaccessible,
        inaccessible=inaccessible,
        dilation_free=dilation_free,
        dilation=None if dilation_free else sorted(violator[0]),
        dilation_neighbors=None if dilation_free else sorted(violator[1]),
        controllable=(not inaccessible) and dilation_free,
        max_matching=sorted((int(u), int(z)) for z, u in m.items()),
        gci=len(m) + len(s),
        inputs=s,
    )


def gci(g: Graph, s: Iterable[int]) -> int:
    """GCI(S) = r(V minus S) + |S| for the transversal (matching) matroid."""
    s = set(s)
    return follower_rank(g, [v for v in range(g.n) if v not in s]) + len(s)


@dataclass(frozen=True)
class DriverNodes:
    inputs: tuple[int, ...]
    advisory: bool
    report: StructuralReport


def min_input_set_structural(g: Graph) -> DriverNodes:
    """Unmatched nodes of a maximum matching on the bipartite doubling of V.

    Exact minimum for strongly connected graphs. Otherwise the set is topped
    up with the lowest-id node of every source strongly connected component
    that remains unreachable, and flagged ``advisory``.
    """
    adj = _bipartite(g, range(g.n))
    m = max_matching(adj)
    inputs = {z for z in range(g.n) if z not in m}
    strong = g.is_strongly_connected()
    if not inputs and g.n:
        inputs = {0}
    if not strong:
        labels = g.components(strong=True)
        nbrs = g.in_neighbors()
        seen = reachable_from(g, inputs)
        while not seen.all():
            # an unreached component fed by no other unreached component
            for v in np.flatnonzero(~seen):
                comp = labels[v]
                members = np.flatnonzero(labels == comp)
                if not any(labels[u] != comp and not seen[u] for w in members for u in nbrs[w]):
                    inputs.add(int(members.min()))
                    break
            seen = reachable_from(g, inputs)
    inputs_t = tuple(sorted(inputs))
    return DriverNodes(inputs_t, advisory=not strong, report=structural_report(g, inputs_t))
