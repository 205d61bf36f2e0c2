"""Named set functions over a graph, built on the metric modules.

Metrics that are undefined for a set (singular grounded Laplacian, singular
Gramian) evaluate to ``+inf`` so that minimising selectors treat them as worst.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controllability import (
    EnergyModel,
    EnergyTarget,
    GramianSingularError,
    LinearSystem,
    avg_energy,
    ctrb_rank,
    gci,
    h2_norm,
    system_from_graph,
)
from .graph import Graph
from .numerics import expm
from .optimize import MAXIMIZE, MINIMIZE, SetFunction
from .perf import (
    ConvergenceParams,
    KalmanSetup,
    SingularLaplacianError,
    convergence_bound,
    default_delta,
    kalman_log_det,
    noise_variance,
)

__all__ = ["METRICS", "MetricParams", "make_objective", "joint_objective"]

METRICS = ("noise", "convergence", "kalman", "ctrb-rank", "gramian-h2", "gramian-energy",
           "min-energy", "gci")


@dataclass
class MetricParams:
    t: float = 1.0
    delta: float | None = None
    p: float = 1.0
    horizon: int = 1
    sigma2: float = 1.0
    weights: str = "laplacian"
    t_final: float = 1.0
    epsilon: float = 1e-3
    seed: int | None = 0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict | None) -> "MetricParams":
        d = dict(d or {})
        known = {k: d.pop(k) for k in list(d) if k in cls.__dataclass_fields__ and k != "extra"}
        return cls(**known, extra=d)


def _guard(fn):
    def wrapped(s):
        try:
            return fn(s)
        except (SingularLaplacianError, GramianSingularError):
            return float("inf")
    return wrapped


def _actuated(g: Graph, mp: MetricParams) -> LinearSystem:
    return system_from_graph(g, weights=mp.weights, rng=mp.seed, variant="actuated",
                             horizon=(0.0, mp.t_final))


def make_objective(name: str, g: Graph, params: MetricParams | dict | None = None) -> SetFunction:
    mp = params if isinstance(params, MetricParams) else MetricParams.from_dict(params)
    ground = range(g.n)
    if name == "noise":
        return SetFunction(ground, _guard(lambda s: noise_variance(g, s)), MINIMIZE, True, "noise R(S)")
    if name == "convergence":
        cp = ConvergenceParams(t=mp.t, delta=mp.delta or default_delta(g), p=mp.p)
        return SetFunction(ground, lambda s: convergence_bound(g, s, cp), MINIMIZE, True,
                           f"convergence bound (t={mp.t}, p={mp.p})")
    if name == "kalman":
        a = expm(-g.laplacian() * (mp.delta or default_delta(g)))
        setup = KalmanSetup(a, None, mp.sigma2, mp.horizon)
        return SetFunction(ground, lambda s: kalman_log_det(setup, s), MINIMIZE, True, "kalman log det")
    if name == "ctrb-rank":
        sys = _actuated(g, mp)
        return SetFunction(ground, lambda s: ctrb_rank(sys, s), MAXIMIZE, True, "controllability rank")
    if name == "gramian-h2":
        sys = _actuated(g, mp)
        return SetFunction(ground, lambda s: h2_norm(sys, s, finite=True), MAXIMIZE, True, "gramian trace")
    if name == "gramian-energy":
        sys = _actuated(g, mp)
        return SetFunction(ground, _guard(lambda s: avg_energy(sys, s, finite=True)), MINIMIZE, True,
                           "gramian trace inverse")
    if name == "min-energy":
        sys = _actuated(g, mp)
        rng = np.random.default_rng(mp.seed)
        x0 = np.asarray(mp.extra.get("x0", np.zeros(g.n)), dtype=float)
        x1 = np.asarray(mp.extra.get("x1", rng.standard_normal(g.n)), dtype=float)
        model = EnergyModel(sys, EnergyTarget(x0, x1, mp.epsilon))
        return SetFunction(ground, model, MINIMIZE, True, f"min energy (eps={mp.epsilon})")
    if name == "gci":
        return SetFunction(ground, lambda s: gci(g, s), MAXIMIZE, True, "graph controllability index")
    raise ValueError(f"unknown metric {name!r}; choose from {', '.join(METRICS)}")


def joint_objective(perf: SetFunction, g: Graph, lam: float) -> SetFunction:
    """``g_perf(S) + lam * GCI(S)`` with ``g_perf = f(empty) - f`` for decreasing metrics."""
    if perf.maximize:
        def base(s):
            return perf(s)
    else:
        c = perf(())

        def base(s):
            return c - perf(s)

    return SetFunction(range(g.n), lambda s: base(s) + lam * gci(g, s), MAXIMIZE, True,
                       f"{perf.description} + {lam:g} GCI")
