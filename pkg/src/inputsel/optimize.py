"""Greedy set-function optimisation with approximation certificates.

Every selector returns a :class:`SelectionResult`. Minimisation of a
decreasing supermodular function is handled through the shift
``g(S) = c - f(S)`` with ``c = f(empty)``; the shift is recorded in the
certificate so bounds refer to ``g``.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .graph import Graph
from .matroids import Matroid

__all__ = [
    "MAXIMIZE",
    "MINIMIZE",
    "SetFunction",
    "SelectionResult",
    "InfeasibleTargetError",
    "InstanceTooLargeError",
    "greedy_max",
    "greedy_cover",
    "matroid_greedy",
    "expected_objective",
    "worst_case_cover",
    "multi_constraint_cover",
    "baseline_order",
    "baseline_select",
    "brute_force_opt",
]

MAXIMIZE = "maximize_submodular"
MINIMIZE = "minimize_supermodular"
TIE_RTOL = 1e-10


class InfeasibleTargetError(ValueError):
    pass


class InstanceTooLargeError(ValueError):
    pass


class SetFunction:
    """A deterministic set function ``f: 2^ground -> R`` with declared structure."""

    def __init__(self, ground: Iterable[int], evaluate: Callable[[frozenset], float],
                 orientation: str = MAXIMIZE, monotone: bool = True, description: str = "",
                 memo: bool = False):
        if orientation not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"unknown orientation {orientation!r}")
        self.ground = tuple(sorted(ground))
        self._evaluate = evaluate
        self.orientation = orientation
        self.monotone = monotone
        self.description = description
        self.calls = 0
        self._memo: dict | None = {} if memo else None

    def __call__(self, s: Iterable[int]) -> float:
        key = frozenset(s)
        if self._memo is not None and key in self._memo:
            return self._memo[key]
        self.calls += 1
        val = float(self._evaluate(key))
        if self._memo is not None:
            self._memo[key] = val
        return val

    def __repr__(self):
        return f"SetFunction({self.description or self.orientation}, |V|={len(self.ground)})"

    @property
    def maximize(self) -> bool:
        return self.orientation == MAXIMIZE


@dataclass
class SelectionResult:
    selected: list[int]
    trace: list[tuple[int, float]]
    certificate: dict
    initial_value: float | None = None
    seed: int | None = None
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def value(self) -> float | None:
        return self.trace[-1][1] if self.trace else self.initial_value

    def to_dict(self, include_time: bool = True) -> dict:
        d = {
            "selected": [int(v) for v in self.selected],
            "selected_sorted": sorted(int(v) for v in self.selected),
            "trace": [{"element": int(e), "value": _jsonable(v)} for e, v in self.trace],
            "initial_value": _jsonable(self.initial_value),
            "value": _jsonable(self.value),
            "certificate": {k: _jsonable(v) for k, v in self.certificate.items()},
            "seed": self.seed,
            "meta": {k: _jsonable(v) for k, v in self.meta.items()},
        }
        if include_time:
            d["wall_time"] = self.wall_time
        return d


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


# -- helpers -------------------------------------------------------------------------

class _Oriented:
    """Maximisation view of a SetFunction: ``g = f`` or ``g = c - f``."""

    def __init__(self, f: SetFunction):
        self.f = f
        self.sign = 1.0 if f.maximize else -1.0
        self.baseline = 0.0
        self.baseline_kind = "none"
        self.empty_value: float | None = None

    def setup(self) -> float:
        """Evaluate f(empty) once and fix the shift; returns f(empty)."""
        f0 = self.f(())
        self.empty_value = f0
        if not self.f.maximize:
            if math.isfinite(f0):
                self.baseline, self.baseline_kind = f0, "f(empty)"
            else:
                single = [self.f({v}) for v in self.f.ground]
                finite = [x for x in single if math.isfinite(x)]
                worst = max(finite) if finite else 0.0
                self.baseline, self.baseline_kind = worst, "worst-finite-singleton"
        return f0

    def g_of(self, fval: float, empty: bool = False) -> float:
        if self.f.maximize:
            return fval
        if empty and not math.isfinite(fval):
            return 0.0
        return self.baseline - fval


def _pick(values: dict[int, float]) -> int:
    """Lowest id among the (near-)maximisers."""
    best = max(values.values())
    tol = TIE_RTOL * max(1.0, abs(best)) if math.isfinite(best) else 0.0
    return min(v for v, x in values.items() if x >= best - tol)


def _certificate_meta(o: _Oriented) -> dict:
    if o.f.maximize:
        return {}
    return {"shift": "c - f", "baseline": o.baseline, "baseline_kind": o.baseline_kind}


# -- greedy maximisation ---------------------------------------------------------------

def greedy_max(f: SetFunction, k: int, lazy: bool = False, seed: int | None = None) -> SelectionResult:
    """Pick ``k`` elements, each maximising g(S + v); ties go to the lowest id."""
    if k > len(f.ground):
        raise ValueError(f"k={k} exceeds the ground set size {len(f.ground)}")
    t0 = time.perf_counter()
    o = _Oriented(f)
    f0 = o.setup()
    selected: list[int] = []
    trace: list[tuple[int, float]] = []
    cur_g = o.g_of(f0, empty=True)
    if lazy:
        bounds = {v: math.inf for v in f.ground}
        fresh: dict[int, float] = {}
        fvals: dict[int, float] = {}
        for _ in range(k):
            fresh.clear()
            while True:
                m = max(fresh.values()) if fresh else -math.inf
                tol = TIE_RTOL * max(1.0, abs(m)) if math.isfinite(m) else 0.0
                stale = [v for v in bounds if v not in fresh and cur_g + bounds[v] >= m - tol]
                if not stale:
                    break
                for v in stale:
                    fv = f(selected + [v])
                    fvals[v] = fv
                    gv = o.g_of(fv)
                    fresh[v] = gv
                    bounds[v] = gv - cur_g
            v = _pick(fresh)
            selected.append(v)
            cur_g = fresh[v]
            trace.append((v, fvals[v]))
            del bounds[v]
    else:
        for _ in range(k):
            fvals = {v: f(selected + [v]) for v in f.ground if v not in selected}
            gvals = {v: o.g_of(x) for v, x in fvals.items()}
            v = _pick(gvals)
            selected.append(v)
            trace.append((v, fvals[v]))
    cert = {"type": "1-1/e", "value": 1.0 - 1.0 / math.e} if f.monotone else {"type": "none", "value": None}
    cert.update(_certificate_meta(o))
    return SelectionResult(selected, trace, cert, f0, seed, time.perf_counter() - t0,
                           {"evaluations": f.calls})


# -- greedy cover ----------------------------------------------------------------------

def _meets(o: _Oriented, fval: float, alpha: float) -> bool:
    return fval >= alpha if o.f.maximize else fval <= alpha


def greedy_cover(f: SetFunction, alpha: float, seed: int | None = None) -> SelectionResult:
    """Smallest greedy prefix with f(S) >= alpha (f(S) <= alpha when minimising)."""
    t0 = time.perf_counter()
    o = _Oriented(f)
    f0 = o.setup()
    f_all = f(f.ground)
    if not _meets(o, f_all, alpha):
        raise InfeasibleTargetError(f"target {alpha} is unreachable: f(V) = {f_all}")
    selected: list[int] = []
    trace: list[tuple[int, float]] = []
    g_prev = g_cur = o.g_of(f0, empty=True)
    fcur = f0
    while not _meets(o, fcur, alpha):
        fvals = {v: f(selected + [v]) for v in f.ground if v not in selected}
        v = _pick({u: o.g_of(x) for u, x in fvals.items()})
        selected.append(v)
        fcur = fvals[v]
        trace.append((v, fcur))
        g_prev, g_cur = g_cur, o.g_of(fcur)
    cert = {"type": "ln-cover", "value": 1.0}
    if selected:
        num = o.g_of(f_all) - o.g_of(f0, empty=True)
        den = g_cur - g_prev
        cert["value"] = 1.0 + math.log(num / den) if den > 0 and math.isfinite(num) else math.inf
    cert.update(_certificate_meta(o))
    cert["target"] = alpha
    return SelectionResult(selected, trace, cert, f0, seed, time.perf_counter() - t0,
                           {"evaluations": f.calls})


# -- matroid-constrained greedy -----------------------------------------------------------

def matroid_greedy(f: SetFunction, m: Matroid, seed: int | None = None) -> SelectionResult:
    """Greedy over independence-preserving additions; stops at a basis."""
    t0 = time.perf_counter()
    o = _Oriented(f)
    f0 = o.setup()
    selected: list[int] = []
    trace: list[tuple[int, float]] = []
    while True:
        cand = [v for v in f.ground if v not in selected and m.is_independent(selected + [v])]
        if not cand:
            break
        fvals = {v: f(selected + [v]) for v in cand}
        v = _pick({u: o.g_of(x) for u, x in fvals.items()})
        selected.append(v)
        trace.append((v, fvals[v]))
    cert = {"type": "half-matroid", "value": 0.5}
    cert.update(_certificate_meta(o))
    meta = {"evaluations": f.calls, "matroid": m.name}
    if m.advisory:
        meta["advisory"] = True
    return SelectionResult(selected, trace, cert, f0, seed, time.perf_counter() - t0, meta)


# -- dynamic topologies -----------------------------------------------------------------

def expected_objective(fs: Sequence[SetFunction], weights: Sequence[float] | None = None,
                       samples: int | None = None, seed=None) -> SetFunction:
    """Average of per-topology functions: uniform, weighted, or a frozen Monte-Carlo
    sample of ``samples`` topology draws from ``weights``."""
    if not fs:
        raise ValueError("need at least one function")
    orient = {f.orientation for f in fs}
    if len(orient) != 1:
        raise ValueError("per-topology functions must share an orientation")
    m = len(fs)
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
    if len(w) != m or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
        raise ValueError("weights must be nonnegative, one per function, and sum to 1")
    if samples is not None:
        draws = np.random.default_rng(seed).choice(m, size=samples, p=w)
        w = np.bincount(draws, minlength=m) / samples
    active = [(float(wi), f) for wi, f in zip(w, fs) if wi > 0]

    def evaluate(s):
        return sum(wi * f(s) for wi, f in active)

    return SetFunction(fs[0].ground, evaluate, fs[0].orientation,
                       all(f.monotone for f in fs), "expected(" + ", ".join(f.description for f in fs) + ")")


def worst_case_cover(fs: Sequence[SetFunction], alpha: float, seed: int | None = None) -> SelectionResult:
    """Cover max_i f_i(S) <= alpha via the mean of max{f_i(S), alpha}."""
    if any(f.maximize for f in fs):
        raise ValueError("worst-case cover expects decreasing (minimise) functions")
    m = len(fs)

    def gbar(s):
        return sum(max(f(s), alpha) for f in fs) / m

    h = SetFunction(fs[0].ground, gbar, MINIMIZE, True, "worst-case truncation")
    res = greedy_cover(h, alpha, seed)
    per = [f(res.selected) for f in fs]
    res.meta["per_topology"] = per
    res.meta["max_value"] = max(per)
    res.meta["satisfied"] = max(per) <= alpha
    return res


def multi_constraint_cover(constraints: Sequence[tuple[SetFunction, float]],
                           seed: int | None = None) -> SelectionResult:
    """Cover sum_i min{f_i(S), alpha_i} >= sum_i alpha_i (every f_i nondecreasing)."""
    if not constraints:
        raise ValueError("need at least one constraint")
    ground = constraints[0][0].ground
    views = []
    for i, (f, a) in enumerate(constraints):
        o = _Oriented(f)
        o.setup()
        target = a if f.maximize else o.baseline - a
        if not _meets(o, f(ground), a):
            raise InfeasibleTargetError(f"constraint {i} ({f.description}) is unreachable")
        views.append((o, target))

    def total(s):
        out = 0.0
        for o, t in views:
            fv = o.f(s)
            out += min(o.g_of(fv, empty=not s), t)
        return out

    big = sum(t for _, t in views)
    res = greedy_cover(SetFunction(ground, total, MAXIMIZE, True, "sum of truncations"), big, seed)
    sat = []
    for (f, a), (o, _) in zip(constraints, views):
        fv = f(res.selected)
        sat.append({"description": f.description, "value": fv, "target": a, "satisfied": _meets(o, fv, a)})
    res.meta["constraints"] = sat
    return res


# -- baselines ---------------------------------------------------------------------------

def baseline_order(g: Graph, kind: str, seed=None) -> list[int]:
    """Full node ordering for a degree or random heuristic; prefixes are the selections."""
    deg = g.degrees()
    ids = np.arange(g.n)
    if kind == "max_degree":
        return [int(v) for v in np.lexsort((ids, -deg))]
    if kind == "avg_degree":
        dev = np.abs(deg - deg.mean())
        return [int(v) for v in np.lexsort((ids, dev))]
    if kind == "random":
        return [int(v) for v in np.random.default_rng(seed).permutation(g.n)]
    raise ValueError(f"unknown baseline {kind!r}")


def baseline_select(g: Graph, k: int, kind: str, seed=None) -> list[int]:
    if k > g.n:
        raise ValueError("k exceeds the node count")
    return baseline_order(g, kind, seed)[:k]


# -- exhaustive oracle -----------------------------------------------------------------------

def _check_size(n: int, kmax: int | None):
    if n <= 12:
        return
    if n <= 20 and kmax is not None and kmax <= 4:
        return
    raise InstanceTooLargeError(f"brute force refused: |V|={n}, k={kmax}")


def brute_force_opt(f: SetFunction, k: int | None = None, matroid: Matroid | None = None,
                    alpha: float | None = None) -> SelectionResult:
    """Exact optimum by enumeration under a cardinality, matroid or target constraint."""
    if sum(x is not None for x in (k, matroid, alpha)) != 1:
        raise ValueError("give exactly one of k, matroid, alpha")
    t0 = time.perf_counter()
    ground = f.ground
    n = len(ground)
    o = _Oriented(f)
    f0 = o.setup()
    best_set: tuple = ()
    if alpha is not None:
        _check_size(n, None if n > 12 else n)
        for r in range(n + 1):
            if n > 12 and r > 4:
                raise InstanceTooLargeError("no cover of size <= 4 and instance too large to continue")
            for c in itertools.combinations(ground, r):
                fv = f0 if not c else f(c)
                if _meets(o, fv, alpha):
                    return SelectionResult(list(c), [(c[-1], fv)] if c else [], {"type": "exact", "value": 1.0,
                                           "target": alpha}, f0, None, time.perf_counter() - t0,
                                           {"evaluations": f.calls})
        raise InfeasibleTargetError(f"target {alpha} is unreachable")
    kmax = k if k is not None else matroid.full_rank
    _check_size(n, kmax)
    best_g, best_f = o.g_of(f0, empty=True), f0
    for r in range(1, kmax + 1):
        for c in itertools.combinations(ground, r):
            if matroid is not None and not matroid.is_independent(c):
                continue
            fv = f(c)
            gv = o.g_of(fv)
            if gv > best_g + TIE_RTOL * max(1.0, abs(best_g)):
                best_g, best_f, best_set = gv, fv, c
    trace = [(best_set[-1], best_f)] if best_set else []
    cert = {"type": "exact", "value": 1.0}
    cert.update(_certificate_meta(o))
    return SelectionResult(list(best_set), trace, cert, f0, None, time.perf_counter() - t0,
                           {"evaluations": f.calls, "g_value": best_g})
