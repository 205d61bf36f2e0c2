"""Batch experiments comparing greedy input selection with degree and random heuristics.

Three study kinds are supported:

robustness       required inputs to bring the noise variance below each target
convergence      convergence-error bound for k = 1..K inputs
controllability  structural-controllability success of k inputs chosen by the
                 joint objective (performance + lambda * GCI)
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .controllability import structural_report
from .graph import Graph, erdos_renyi, geometric_graph
from .objectives import METRICS, MetricParams, joint_objective, make_objective
from .optimize import baseline_order, greedy_cover, greedy_max

__all__ = ["ExperimentConfig", "ExperimentResult", "PRESETS", "preset", "run_experiment", "target_grid"]

SELECTORS = ("greedy", "max-degree", "avg-degree", "random")
ROW_FIELDS = ["trial", "seed", "selector", "k", "target_index", "target", "value", "controllable",
              "inputs", "wall_time", "error"]
AGG_FIELDS = ["selector", "k", "target_index", "trials", "mean_k", "mean_value", "success_rate", "errors"]


@dataclass
class ExperimentConfig:
    kind: str
    graph: dict
    metric: str
    metric_params: dict = field(default_factory=dict)
    selectors: list = field(default_factory=lambda: list(SELECTORS))
    k_max: int = 10
    targets: int = 10
    trials: int = 20
    seed: int = 0
    seeds: list | None = None
    lam_factor: float = 10.0
    output: str | None = None

    def __post_init__(self):
        if self.kind not in ("robustness", "convergence", "controllability"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        for s in self.selectors:
            if s not in SELECTORS:
                raise ValueError(f"unknown selector {s!r}")
        if self.seeds is not None and len(self.seeds) < self.trials:
            raise ValueError("seed list is shorter than the trial count")
        MetricParams.from_dict(self.metric_params)
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def trial_seeds(self) -> list[int]:
        if self.seeds is not None:
            return [int(s) for s in self.seeds[:self.trials]]
        return [self.seed + i for i in range(self.trials)]


PRESETS = {
    "robustness": dict(kind="robustness", graph=dict(kind="geometric", n=100, width=1000.0, radius=300.0),
                       metric="noise", trials=50, targets=10),
    "convergence": dict(kind="convergence", graph=dict(kind="geometric", n=100, width=1400.0, radius=250.0),
                        metric="convergence", metric_params={"t": 1.0, "p": 2.0}, trials=50, k_max=10),
    "controllability": dict(kind="controllability", graph=dict(kind="er", n=70, q=0.07, directed=False),
                            metric="convergence", metric_params={"t": 1.0, "p": 2.0}, trials=50, k_max=6),
}

REDUCED = {
    "robustness": dict(graph=dict(kind="geometric", n=60, width=775.0, radius=300.0), trials=20),
    "convergence": dict(graph=dict(kind="geometric", n=60, width=1400.0 * math.sqrt(0.6), radius=250.0),
                        trials=20),
    "controllability": {},
}


def preset(name: str, reduced: bool = False, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}")
    d = json.loads(json.dumps(PRESETS[name]))
    if reduced:
        d.update(json.loads(json.dumps(REDUCED[name])))
    graph_over = overrides.pop("graph", None)
    if graph_over:
        d["graph"].update(graph_over)
    d.update(overrides)
    return ExperimentConfig.from_dict(d)


# -- graph sampling ----------------------------------------------------------------------------

def make_graph(graph_spec: dict, seed: int) -> tuple[Graph, int]:
    """Draw from the generator, resampling until connected when required.

    Attempt ``a`` uses the seed sequence ``(seed, a)``; the attempt count is returned.
    """
    kind = graph_spec["kind"]
    need_conn = graph_spec.get("connected", kind == "geometric")
    for attempt in range(1000):
        gs = int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])
        if kind == "geometric":
            g = geometric_graph(int(graph_spec["n"]), float(graph_spec["width"]), float(graph_spec["radius"]), gs)
        elif kind == "er":
            g = erdos_renyi(int(graph_spec["n"]), float(graph_spec["q"]), gs, bool(graph_spec.get("directed", False)))
        else:
            raise ValueError(f"unknown generator {kind!r}")
        if not need_conn or g.is_connected():
            return g, attempt
    raise RuntimeError("no connected sample in 1000 attempts")


def target_grid(f, n: int, count: int, ref_fraction: float = 0.3) -> np.ndarray:
    """Geometric grid from half the best single-input value down to 1.1x the value
    greedy reaches with ``ceil(ref_fraction * n)`` inputs."""
    hi = min(f({v}) for v in range(n)) / 2.0
    k = max(1, math.ceil(ref_fraction * n))
    lo = 1.1 * greedy_max(f, k).value
    return np.geomspace(hi, lo, count)


def _baseline_kind(sel: str) -> str:
    return sel.replace("-", "_")


def _first_reaching(values, alpha) -> int | None:
    for i, v in enumerate(values):
        if v <= alpha:
            return i + 1
    return None


# -- trials ------------------------------------------------------------------------------------

def _row(trial, seed, selector, k, value, inputs, wall, target_index="", target="", controllable="",
         error=""):
    return {"trial": trial, "seed": seed, "selector": selector, "k": k, "target_index": target_index,
            "target": target, "value": value, "controllable": controllable,
            "inputs": " ".join(str(int(v)) for v in inputs), "wall_time": wall, "error": error}


def run_trial(cfg: ExperimentConfig, trial: int, seed: int) -> list[dict]:
    try:
        g, _ = make_graph(cfg.graph, seed)
        f = make_objective(cfg.metric, g, dict(cfg.metric_params, seed=seed))
        if cfg.kind == "robustness":
            return _robustness(cfg, g, f, trial, seed)
        if cfg.kind == "convergence":
            return _fixed_k(cfg, g, f, trial, seed, controllability=False)
        return _fixed_k(cfg, g, f, trial, seed, controllability=True)
    except Exception as e:  # per-trial failures are recorded, the run continues
        return [_row(trial, seed, sel, "", "", [], 0.0, error=f"{type(e).__name__}: {e}")
                for sel in cfg.selectors]


def _robustness(cfg, g, f, trial, seed):
    targets = target_grid(f, g.n, cfg.targets)
    rows = []
    for sel in cfg.selectors:
        t0 = time.perf_counter()
        if sel == "greedy":
            res = greedy_cover(f, float(targets[-1]), seed)
            order = res.selected
            values = [v for _, v in res.trace]
        else:
            order = baseline_order(g, _baseline_kind(sel), seed)
            values = []
            for k in range(1, g.n + 1):
                values.append(f(order[:k]))
                if values[-1] <= targets[-1]:
                    break
        wall = time.perf_counter() - t0
        for ti, alpha in enumerate(targets):
            k = _first_reaching(values, alpha)
            if k is None:
                rows.append(_row(trial, seed, sel, "", "", [], wall, ti, float(alpha), error="target not reached"))
                continue
            rows.append(_row(trial, seed, sel, k, values[k - 1], order[:k], wall, ti, float(alpha)))
    return rows


def _fixed_k(cfg, g, f, trial, seed, controllability: bool):
    kmax = min(cfg.k_max, g.n)
    rows = []
    for sel in cfg.selectors:
        t0 = time.perf_counter()
        if sel == "greedy":
            obj = joint_objective(f, g, cfg.lam_factor * f(())) if controllability else f
            order = greedy_max(obj, kmax, seed=seed).selected
        else:
            order = baseline_order(g, _baseline_kind(sel), seed)[:kmax]
        wall = time.perf_counter() - t0
        for k in range(1, kmax + 1):
            s = order[:k]
            ctrl = structural_report(g, s).controllable if controllability else ""
            rows.append(_row(trial, seed, sel, k, f(s), s, wall, controllable=ctrl))
    return rows


# -- aggregation and output ------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[dict]
    aggregate: list[dict]
    header: list[str]

    def rows_csv(self) -> str:
        return _csv(self.header, ROW_FIELDS, self.rows)

    def aggregate_csv(self) -> str:
        return _csv(self.header, AGG_FIELDS, self.aggregate)

    def write(self, path: str) -> tuple[str, str]:
        agg_path = _aggregate_path(path)
        with open(path, "w", newline="") as fh:
            fh.write(self.rows_csv())
        with open(agg_path, "w", newline="") as fh:
            fh.write(self.aggregate_csv())
        return path, agg_path


def _aggregate_path(path: str) -> str:
    return path[:-4] + "_aggregate.csv" if path.endswith(".csv") else path + ".aggregate.csv"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(header: list[str], fields: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(k, "")) for k in fields])
    return buf.getvalue()


def aggregate(cfg: ExperimentConfig, rows: list[dict]) -> list[dict]:
    by_target = cfg.kind == "robustness"
    groups: dict = defaultdict(list)
    for r in rows:
        key = (r["selector"], r["target_index"] if by_target else r["k"])
        if key[1] == "":
            key = (r["selector"], "error")
        groups[key].append(r)
    out = []
    order = {s: i for i, s in enumerate(cfg.selectors)}
    for (sel, key), rs in sorted(groups.items(), key=lambda kv: (order[kv[0][0]], str(kv[0][1]).zfill(6))):
        ok = [r for r in rs if not r["error"]]
        ks = [r["k"] for r in ok]
        vals = [r["value"] for r in ok]
        ctrl = [bool(r["controllable"]) for r in ok] if cfg.kind == "controllability" else []
        trials = len({r["trial"] for r in rs})
        out.append({
            "selector": sel,
            "k": "" if by_target else key,
            "target_index": key if by_target else "",
            "trials": trials,
            "mean_k": float(np.mean(ks)) if ks else "",
            "mean_value": float(np.mean(vals)) if vals else "",
            # failed trials count as unsuccessful
            "success_rate": (sum(ctrl) / trials) if cfg.kind == "controllability" else "",
            "errors": len(rs) - len(ok),
        })
    return out


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, invocation: str = "") -> ExperimentResult:
    seeds = cfg.trial_seeds()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(run_trial, [cfg] * len(seeds), range(len(seeds)), seeds))
    else:
        parts = [run_trial(cfg, i, s) for i, s in enumerate(seeds)]
    rows = [r for part in parts for r in part]
    header = [
        f"invocation: {invocation}" if invocation else "invocation: (library call)",
        "config: " + json.dumps(cfg.to_dict(), sort_keys=True),
        "seeds: " + " ".join(str(s) for s in seeds),
    ]
    if cfg.kind == "robustness":
        header.append("targets: geometric grid from min_v R({v})/2 down to 1.1 x R(greedy, ceil(0.3 n)) per trial")
    if cfg.kind == "controllability":
        header.append(f"greedy objective: f(empty) - f(S) + lambda*GCI(S), lambda = {cfg.lam_factor:g} * f(empty)")
    return ExperimentResult(cfg, rows, aggregate(cfg, rows), header)
