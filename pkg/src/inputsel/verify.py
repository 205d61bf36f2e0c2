"""Property sweeps: exhaustive sub/supermodularity checks, matroid axioms,
structural-vs-numerical cross-validation, Monte-Carlo agreement and greedy
bound ratios. Each check returns a :class:`PropertyResult` carrying
counterexamples that can be dumped as JSON.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .controllability import (
    EnergyModel,
    EnergyTarget,
    GramianSingularError,
    avg_energy,
    ctrb_rank,
    gci,
    structural_report,
    system_from_graph,
)
from .graph import Graph, erdos_renyi, grounded_laplacian
from .matroids import (
    MatroidAxiomError,
    TransversalInstance,
    check_axioms,
    controllability_matroid,
    transversal_matroid,
    uniform_matroid,
)
from .numerics import expm
from .optimize import (
    MAXIMIZE,
    MINIMIZE,
    SetFunction,
    brute_force_opt,
    greedy_cover,
    greedy_max,
    matroid_greedy,
)
from .perf import (
    ConvergenceParams,
    KalmanSetup,
    commute_time_mc,
    convergence_bound,
    default_delta,
    kalman_log_det,
    node_noise_variance,
    noise_variance,
)
from .simulate import stationary_covariance

__all__ = [
    "PropertyResult",
    "subset_values",
    "modularity_violations",
    "random_connected_graph",
    "random_digraph",
    "supermodularity_suite",
    "matroid_suite",
    "structural_suite",
    "montecarlo_suite",
    "bounds_suite",
    "SUITES",
    "run_suite",
]

MAX_DUMP = 5


@dataclass
class PropertyResult:
    name: str
    checked: int = 0
    failed: int = 0
    counterexamples: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failed == 0 and self.checked > 0

    def record(self, ok: bool, example: Callable[[], dict] | None = None):
        self.checked += 1
        if not ok:
            self.failed += 1
            if example is not None and len(self.counterexamples) < MAX_DUMP:
                self.counterexamples.append(example())

    def merge(self, other: "PropertyResult"):
        self.checked += other.checked
        self.failed += other.failed
        room = MAX_DUMP - len(self.counterexamples)
        self.counterexamples.extend(other.counterexamples[:max(room, 0)])

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checked": self.checked,
                "failed": self.failed, "counterexamples": self.counterexamples, "detail": self.detail}


# -- exhaustive set-function checks ------------------------------------------------------

def subset_values(f: Callable[[frozenset], float], n: int, skip_empty: bool = False) -> dict:
    out = {}
    for r in range(n + 1):
        for c in itertools.combinations(range(n), r):
            if skip_empty and not c:
                continue
            out[frozenset(c)] = float(f(frozenset(c)))
    return out


def modularity_violations(vals: dict, n: int, kind: str, slack: float = 1e-9, relative: bool = True,
                          nonempty: bool = False):
    """Yield ``(S, T, v, margin)`` for each violated diminishing-returns inequality.

    ``kind='sub'`` checks f(S+v)-f(S) >= f(T+v)-f(T); ``kind='super'`` the reverse.
    Triples with a non-finite value are skipped. The slack scales with the
    largest magnitude involved when ``relative``.
    """
    sign = 1.0 if kind == "sub" else -1.0
    for v in range(n):
        rest = [u for u in range(n) if u != v]
        for tr in range(len(rest) + 1):
            for t in itertools.combinations(rest, tr):
                t = frozenset(t)
                ft, ftv = vals.get(t), vals.get(t | {v})
                if ft is None or ftv is None:
                    continue
                for sr in range(0 if not nonempty else 1, len(t) + 1):
                    for s in itertools.combinations(sorted(t), sr):
                        s = frozenset(s)
                        fs, fsv = vals.get(s), vals.get(s | {v})
                        if fs is None or fsv is None:
                            continue
                        quad = (fs, fsv, ft, ftv)
                        if not all(math.isfinite(x) for x in quad):
                            continue
                        margin = sign * ((fsv - fs) - (ftv - ft))
                        tol = slack * max(1.0, max(abs(x) for x in quad)) if relative else slack
                        if margin < -tol:
                            yield sorted(s), sorted(t), v, margin


def check_modularity(name: str, vals: dict, n: int, kind: str, context: dict, slack: float = 1e-9,
                     nonempty: bool = False) -> PropertyResult:
    res = PropertyResult(name)
    bad = list(modularity_violations(vals, n, kind, slack, nonempty=nonempty))
    res.checked = 1
    if bad:
        res.failed = 1
        s, t, v, m = min(bad, key=lambda b: b[3])
        res.counterexamples.append(dict(context, S=s, T=t, v=v, margin=m, violations=len(bad)))
    return res


def check_monotone(name: str, vals: dict, n: int, decreasing: bool, context: dict,
                   strict: bool = False, slack: float = 1e-9) -> PropertyResult:
    res = PropertyResult(name)
    res.checked = 1
    for s, fs in vals.items():
        for v in range(n):
            if v in s or (s | {v}) not in vals:
                continue
            fsv = vals[s | {v}]
            if not (math.isfinite(fs) and math.isfinite(fsv)):
                continue
            d = (fs - fsv) if decreasing else (fsv - fs)
            tol = slack * max(1.0, abs(fs), abs(fsv))
            if (strict and d <= 0) or d < -tol:
                res.failed = 1
                res.counterexamples.append(dict(context, S=sorted(s), v=v, change=d))
                return res
    return res


# -- random instances --------------------------------------------------------------------------

def random_connected_graph(rng: np.random.Generator, n_min: int = 3, n_max: int = 7,
                           q_range=(0.3, 0.8)) -> Graph:
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        g = erdos_renyi(n, float(rng.uniform(*q_range)), seed=int(rng.integers(2**32)))
        if g.is_connected():
            return g


def random_digraph(rng: np.random.Generator, n_min: int = 2, n_max: int = 6, q_range=(0.2, 0.6)) -> Graph:
    n = int(rng.integers(n_min, n_max + 1))
    return erdos_renyi(n, float(rng.uniform(*q_range)), seed=int(rng.integers(2**32)), directed=True)


# -- suites ---------------------------------------------------------------------------------

def supermodularity_suite(graphs: int = 200, seed: int = 0, n_max: int = 7, slack: float = 1e-9,
                          include: Iterable[str] | None = None) -> list[PropertyResult]:
    """Exhaustive (S, T, v) sweeps over random connected graphs.

    Gramian-based metrics use the actuated system dx = -L x + B u over the
    horizon [0, 1]; f_eps steers x0 = 0 to a random x1 with eps in {1e-2, 1e-4}.
    """
    names = ["noise", "noise-monotone", "convergence", "kalman", "min-energy", "gramian-energy",
             "ctrb-rank", "gci"]
    include = set(names if include is None else include)
    results = {k: PropertyResult(k) for k in names if k in include}
    rng = np.random.default_rng(seed)
    for gi in range(graphs):
        g = random_connected_graph(rng, 3, n_max)
        n = g.n
        ctx = {"graph": g.to_dict(), "graph_index": gi}
        if "noise" in results or "noise-monotone" in results:
            vals = subset_values(lambda s: noise_variance(g, s), n, skip_empty=True)
            if "noise" in results:
                results["noise"].merge(check_modularity("noise", vals, n, "super", ctx, slack, nonempty=True))
            if "noise-monotone" in results:
                results["noise-monotone"].merge(check_monotone("noise-monotone", vals, n, True, ctx, strict=True))
        if "convergence" in results:
            delta = default_delta(g)
            for tau in (1, 2, 4):
                for p in (1.0, 2.0):
                    cp = ConvergenceParams(delta=delta, p=p, horizon_steps=tau)
                    vals = subset_values(lambda s: convergence_bound(g, s, cp), n)
                    results["convergence"].merge(check_modularity(
                        "convergence", vals, n, "super", dict(ctx, tau=tau, p=p), slack))
        if "kalman" in results:
            setup = KalmanSetup(expm(-g.laplacian() * default_delta(g) * 5), None, 1.0, 1)
            vals = subset_values(lambda s: kalman_log_det(setup, s), n)
            results["kalman"].merge(check_modularity("kalman", vals, n, "super", ctx, slack))
        if "min-energy" in results or "gramian-energy" in results:
            sys = system_from_graph(g, "laplacian", variant="actuated", horizon=(0.0, 1.0))
            if "min-energy" in results:
                x1 = rng.standard_normal(n)
                for eps in (1e-2, 1e-4):
                    model = EnergyModel(sys, EnergyTarget(np.zeros(n), x1, eps))
                    vals = subset_values(model, n)
                    results["min-energy"].merge(check_modularity(
                        "min-energy", vals, n, "super", dict(ctx, epsilon=eps, x1=x1.tolist()), slack))
            if "gramian-energy" in results:
                def te(s):
                    try:
                        return avg_energy(sys, s, finite=True)
                    except GramianSingularError:
                        return math.inf
                vals = subset_values(te, n, skip_empty=True)
                results["gramian-energy"].merge(check_modularity(
                    "gramian-energy", vals, n, "super", ctx, slack, nonempty=True))
        if "ctrb-rank" in results:
            sysr = system_from_graph(g, "random", rng=int(rng.integers(2**32)), variant="actuated")
            vals = subset_values(lambda s: ctrb_rank(sysr, s), n)
            results["ctrb-rank"].merge(check_modularity(
                "ctrb-rank", vals, n, "sub", dict(ctx, w=sysr.w.tolist()), 0.0))
        if "gci" in results:
            vals = subset_values(lambda s: gci(g, s), n)
            results["gci"].merge(check_modularity("gci", vals, n, "sub", ctx, 0.0))
            results["gci"].merge(check_monotone("gci", vals, n, False, ctx))
    for r in results.values():
        r.detail["graphs"] = graphs
    return list(results.values())


def matroid_suite(instances: int = 60, seed: int = 0, max_ground: int = 8) -> list[PropertyResult]:
    from .matching import matching_size_bruteforce

    rng = np.random.default_rng(seed)
    axioms = PropertyResult("matroid-axioms")
    rank = PropertyResult("transversal-rank")
    bases = PropertyResult("controllability-bases")
    for i in range(instances):
        m = int(rng.integers(1, max_ground + 1))
        left = int(rng.integers(1, max_ground + 1))
        sets = {j: sorted(rng.choice(left, size=int(rng.integers(0, left + 1)), replace=False).tolist())
                for j in range(m)}
        tm = transversal_matroid(TransversalInstance(sets))
        for mat, label in ((tm, "transversal"), (uniform_matroid(range(m), int(rng.integers(0, m + 1))), "uniform")):
            try:
                check_axioms(mat, max_ground)
                axioms.record(True)
            except MatroidAxiomError as e:
                axioms.record(False, lambda: {"matroid": label, "sets": sets, "error": str(e)})
        for r in range(m + 1):
            for c in itertools.combinations(range(m), r):
                ok = tm.rank(c) == matching_size_bruteforce({j: sets[j] for j in c})
                rank.record(ok, lambda: {"sets": sets, "X": list(c)})
        # controllability matroid on a strongly connected digraph
        while True:
            g = random_digraph(rng, 2, 7, (0.3, 0.7))
            if g.is_strongly_connected():
                break
        k = int(rng.integers(1, g.n + 1))
        try:
            cm = controllability_matroid(g, k)
        except ValueError:
            continue
        try:
            check_axioms(cm, max_ground)
            axioms.record(True)
        except MatroidAxiomError as e:
            axioms.record(False, lambda: {"matroid": "controllability", "graph": g.to_dict(), "k": k,
                                          "error": str(e)})
        truth = {frozenset(c) for c in itertools.combinations(range(g.n), k)
                 if structural_report(g, c).controllable}
        got = {frozenset(c) for c in itertools.combinations(range(g.n), k) if cm.is_independent(c)}
        bases.record(truth == got, lambda: {"graph": g.to_dict(), "k": k,
                                            "missing": [sorted(x) for x in truth - got],
                                            "extra": [sorted(x) for x in got - truth]})
    return [axioms, rank, bases]


def structural_suite(graphs: int = 200, draws: int = 100, seed: int = 0, n_max: int = 6,
                     per_graph_rate: float = 0.99) -> list[PropertyResult]:
    """Random-weight realisations of structurally controllable digraphs have full rank."""
    rng = np.random.default_rng(seed)
    res = PropertyResult("lin-cross-validation")
    full = total = 0
    found = 0
    while found < graphs:
        g = random_digraph(rng, 2, n_max)
        k = int(rng.integers(1, g.n))
        s = sorted(rng.choice(g.n, size=k, replace=False).tolist())
        if not structural_report(g, s).controllable:
            continue
        found += 1
        target = g.n - len(s)
        hits = 0
        for _ in range(draws):
            sys = system_from_graph(g, "random", rng=int(rng.integers(2**32)), variant="grounded")
            hits += ctrb_rank(sys, s) == target
        full += hits
        total += draws
        res.record(hits >= per_graph_rate * draws,
                   lambda: {"graph": g.to_dict(), "S": s, "full_rank_draws": hits, "draws": draws})
    res.detail = {"graphs": graphs, "draws": total, "full_rank_fraction": full / max(total, 1)}
    return [res]


def montecarlo_suite(seed: int = 0, commute_graphs: int = 20, walks: int = 100_000,
                     cov_graphs: int = 10, replicas: int = 5000, samples: int = 20,
                     spread_tol: float = 0.05, z_tol: float = 3.0) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    commute = PropertyResult("commute-ratio")
    spreads = []
    for gi in range(commute_graphs):
        g = random_connected_graph(rng, 3, 8)
        k = int(rng.integers(1, 3))
        s = sorted(rng.choice(g.n, size=k, replace=False).tolist())
        ratios = []
        for u in (v for v in range(g.n) if v not in s):
            est = commute_time_mc(g, s, u, walks, seed=[seed, gi, u])
            ratios.append(est.mean / node_noise_variance(g, s, u))
        r = np.array(ratios)
        spread = float((r.max() - r.min()) / r.mean())
        spreads.append(spread)
        commute.record(spread <= spread_tol,
                       lambda: {"graph": g.to_dict(), "S": s, "ratios": r.tolist(), "spread": spread})
    commute.detail = {"max_spread": max(spreads), "walks": walks}

    cov = PropertyResult("stationary-covariance")
    zmax = 0.0
    for gi in range(cov_graphs):
        g = random_connected_graph(rng, 3, 10)
        k = int(rng.integers(1, 3))
        s = sorted(rng.choice(g.n, size=k, replace=False).tolist())
        est = stationary_covariance(g, s, 1.0, replicas, samples, seed=[seed, 1000 + gi])
        ref = 0.5 * np.linalg.inv(grounded_laplacian(g, s).L_ff)
        z = np.abs(est.cov - ref) / est.stderr
        iu = np.triu_indices(len(est.followers))
        for a, b in zip(*iu):
            zab = float(z[a, b])
            zmax = max(zmax, zab)
            cov.record(zab <= z_tol, lambda: {"graph": g.to_dict(), "S": s, "entry": [int(a), int(b)],
                                              "empirical": float(est.cov[a, b]), "exact": float(ref[a, b]),
                                              "z": zab})
    cov.detail = {"max_z": zmax, "samples_per_graph": replicas * samples}
    return [commute, cov]


# -- greedy bound instances ------------------------------------------------------------------------

def coverage_function(rng: np.random.Generator, n: int, items: int = 20) -> SetFunction:
    w = rng.uniform(0.1, 1.0, items)
    cover = [set(rng.choice(items, size=int(rng.integers(1, items // 3 + 1)), replace=False).tolist())
             for _ in range(n)]

    def f(s):
        got = set().union(*(cover[v] for v in s)) if s else set()
        return float(sum(w[i] for i in got))

    return SetFunction(range(n), f, MAXIMIZE, True, "weighted coverage", memo=True)


def bounds_suite(instances: int = 100, seed: int = 0, n_max: int = 10) -> list[PropertyResult]:
    """Greedy vs exhaustive optimum on mixed coverage and noise-variance instances."""
    rng = np.random.default_rng(seed)
    gm = PropertyResult("greedy-max-(1-1/e)")
    gc = PropertyResult("greedy-cover-ln")
    mg = PropertyResult("matroid-greedy-1/2")
    ratios = {"greedy_max": [], "greedy_cover": [], "matroid": []}
    bound = 1.0 - 1.0 / math.e
    for i in range(instances):
        if i % 2 == 0:
            n = int(rng.integers(5, n_max + 1))
            f = coverage_function(rng, n)
        else:
            g = random_connected_graph(rng, 5, n_max)
            n = g.n
            f = SetFunction(range(n), lambda s, g=g: noise_variance(g, s) if s else math.inf,
                            MINIMIZE, True, "noise", memo=True)
        k = int(rng.integers(1, min(4, n) + 1))
        gr = greedy_max(f, k)
        opt = brute_force_opt(f, k=k)
        g_greedy = _g_value(f, gr, opt)
        g_opt = opt.meta["g_value"]
        ratios["greedy_max"].append(g_greedy / g_opt if g_opt > 0 else 1.0)
        gm.record(g_greedy >= bound * g_opt - 1e-12,
                  lambda: {"instance": i, "k": k, "greedy": g_greedy, "opt": g_opt})
        # cover: target between the best singleton and f(V)
        fv = f(range(n))
        f1 = min(f({v}) for v in range(n)) if not f.maximize else max(f({v}) for v in range(n))
        alpha = f1 + float(rng.uniform(0.3, 0.95)) * (fv - f1)
        cov = greedy_cover(f, alpha)
        best = brute_force_opt(f, alpha=alpha)
        size_ratio = len(cov.selected) / max(len(best.selected), 1)
        ratios["greedy_cover"].append(size_ratio)
        gc.record(len(cov.selected) <= cov.certificate["value"] * len(best.selected) + 1e-12,
                  lambda: {"instance": i, "alpha": alpha, "greedy_size": len(cov.selected),
                           "opt_size": len(best.selected), "certificate": cov.certificate["value"]})
        # matroid: random transversal or uniform matroid
        if rng.random() < 0.5:
            left = int(rng.integers(2, n + 1))
            sets = {j: rng.choice(left, size=int(rng.integers(1, left + 1)), replace=False).tolist()
                    for j in range(n)}
            mat = transversal_matroid(TransversalInstance(sets))
        else:
            mat = uniform_matroid(range(n), k)
        mres = matroid_greedy(f, mat)
        mopt = brute_force_opt(f, matroid=mat)
        g_m = _g_value(f, mres, mopt)
        g_mopt = mopt.meta["g_value"]
        ratios["matroid"].append(g_m / g_mopt if g_mopt > 0 else 1.0)
        mg.record(g_m >= 0.5 * g_mopt - 1e-12, lambda: {"instance": i, "greedy": g_m, "opt": g_mopt})
    gm.detail = {"min_ratio": min(ratios["greedy_max"])}
    gc.detail = {"max_size_ratio": max(ratios["greedy_cover"])}
    mg.detail = {"min_ratio": min(ratios["matroid"])}
    return [gm, gc, mg]


def _g_value(f: SetFunction, res, ref) -> float:
    """Greedy objective in the shifted orientation used by the exhaustive search."""
    fv = res.value
    if f.maximize:
        return fv
    base = ref.certificate.get("baseline", 0.0)
    return base - fv if res.selected else 0.0


SUITES = {
    "submodularity": lambda seed=0, quick=False: supermodularity_suite(40 if quick else 200, seed),
    "matroid": lambda seed=0, quick=False: matroid_suite(20 if quick else 60, seed),
    "structural": lambda seed=0, quick=False: structural_suite(40 if quick else 200, 100, seed),
    "montecarlo": lambda seed=0, quick=False: montecarlo_suite(
        seed, 4 if quick else 20, 20_000 if quick else 100_000, 3 if quick else 10),
    "bounds": lambda seed=0, quick=False: bounds_suite(30 if quick else 100, seed),
}


def run_suite(name: str, seed: int = 0, quick: bool = False) -> list[PropertyResult]:
    if name == "all":
        out = []
        for key in SUITES:
            out.extend(SUITES[key](seed, quick))
        return out
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    return SUITES[name](seed, quick)
