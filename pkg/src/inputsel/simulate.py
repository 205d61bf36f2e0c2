"""Trajectory simulators for leader-follower consensus and absorbing random walks."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graph import Graph, GraphError, full_grounded_laplacian, grounded_laplacian
from .numerics import expm

__all__ = [
    "Trajectory",
    "UnstableStepError",
    "StationaryEstimate",
    "simulate_noisy_consensus",
    "stationary_covariance",
    "simulate_weighted_consensus",
    "containment_error",
    "absorbing_walk_probabilities",
    "absorbing_walk_mc",
]


class UnstableStepError(ValueError):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    input_set: tuple[int, ...]
    input_values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.states.shape[0] != self.times.size:
            raise ValueError("one state row per sample time")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(self.n)])
        for t, row in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _setup(g: Graph, s, input_values, x0):
    s = tuple(sorted(set(int(v) for v in s)))
    if not s:
        raise GraphError("need at least one input node")
    xl = np.broadcast_to(np.asarray(input_values, dtype=float), (len(s),)).copy()
    if x0 is None:
        x = np.zeros(g.n)
    else:
        x = np.asarray(x0, dtype=float).copy()
        if x.shape != (g.n,):
            raise ValueError(f"initial state must have length {g.n}")
    x[list(s)] = xl
    return s, xl, x


def simulate_noisy_consensus(g: Graph, s: Iterable[int], input_values, x0=None, dt: float = 0.01,
                             t_end: float = 10.0, noise_sigma: float = 1.0, seed=None,
                             record_every: int = 1) -> Trajectory:
    """Euler-Maruyama integration of followers driven by white noise; inputs fixed."""
    s, xl, x = _setup(g, s, input_values, x0)
    gl = grounded_laplacian(g, s)
    f = list(gl.followers)
    if f:
        dmax = np.diag(gl.L_ff).max()
        if dmax > 0 and dt >= 1.0 / dmax:
            raise UnstableStepError(f"dt={dt} must be below 1/max degree = {1.0 / dmax:.6g}")
    steps = int(round(t_end / dt))
    rng = np.random.default_rng(seed)
    drift_c = -gl.L_fl @ xl
    xf = x[f]
    times = [0.0]
    rows = [x.copy()]
    scale = noise_sigma * math.sqrt(dt)
    for k in range(1, steps + 1):
        xf = xf + dt * (drift_c - gl.L_ff @ xf) + scale * rng.standard_normal(len(f))
        if k % record_every == 0 or k == steps:
            x[f] = xf
            times.append(k * dt)
            rows.append(x.copy())
    return Trajectory(np.array(times), np.array(rows), s, xl,
                      {"dt": dt, "noise_sigma": noise_sigma, "seed": seed, "scheme": "euler-maruyama"})


@dataclass(frozen=True)
class StationaryEstimate:
    cov: np.ndarray
    stderr: np.ndarray
    followers: tuple[int, ...]
    samples: int
    meta: dict


def stationary_covariance(g: Graph, s: Iterable[int], noise_sigma: float = 1.0, replicas: int = 5000,
                          samples_per_replica: int = 20, seed=None, scheme: str = "trapezoidal",
                          dt: float | None = None) -> StationaryEstimate:
    """Empirical stationary follower covariance from independent replicas.

    Each replica starts at the follower mean, discards a burn-in of
    ``10/lambda_min`` time units, then records one sample per relaxation time
    ``1/lambda_min``. Standard errors come from the spread of per-replica
    estimates, so residual autocorrelation inside a replica is accounted for.

    ``trapezoidal`` (stochastic Crank-Nicolson) has no step-size bias in the
    stationary covariance of linear dynamics; ``euler`` is Euler-Maruyama and
    needs a small ``dt``.
    """
    s = tuple(sorted(set(int(v) for v in s)))
    gl = grounded_laplacian(g, s)
    lff = gl.L_ff
    m = lff.shape[0]
    if m == 0:
        return StationaryEstimate(np.zeros((0, 0)), np.zeros((0, 0)), (), 0, {})
    ev = np.linalg.eigvalsh(0.5 * (lff + lff.T))
    lmin, lmax = ev[0], ev[-1]
    if lmin <= 0:
        raise GraphError("grounded Laplacian is singular")
    if scheme == "trapezoidal":
        h = dt if dt is not None else 2.0 / math.sqrt(lmin * lmax)
        lhs = np.eye(m) + 0.5 * h * lff
        step = np.linalg.solve(lhs, np.eye(m) - 0.5 * h * lff)
        kick = np.linalg.solve(lhs, np.eye(m)) * (noise_sigma * math.sqrt(h))
    elif scheme == "euler":
        h = dt if dt is not None else 0.001 / lmax
        if h >= 1.0 / np.diag(lff).max():
            raise UnstableStepError("dt too large for Euler-Maruyama")
        step = np.eye(m) - h * lff
        kick = np.eye(m) * (noise_sigma * math.sqrt(h))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    burn = int(math.ceil(10.0 / (lmin * h)))
    thin = max(1, int(math.ceil(1.0 / (lmin * h))))
    rng = np.random.default_rng(seed)
    # deviations from the stationary mean evolve without the constant input drive
    z = np.zeros((replicas, m))
    step_t, kick_t = step.T.copy(), kick.T.copy()
    for _ in range(burn):
        z = z @ step_t + rng.standard_normal((replicas, m)) @ kick_t
    acc = np.zeros((replicas, m, m))
    for _ in range(samples_per_replica):
        for _ in range(thin):
            z = z @ step_t + rng.standard_normal((replicas, m)) @ kick_t
        acc += z[:, :, None] * z[:, None, :]
    per = acc / samples_per_replica
    cov = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(replicas)
    meta = {"scheme": scheme, "dt": h, "burn_in_steps": burn, "thin_steps": thin,
            "burn_in_time": burn * h, "replicas": replicas, "samples_per_replica": samples_per_replica,
            "seed": seed}
    return StationaryEstimate(cov, se, gl.followers, replicas * samples_per_replica, meta)


def simulate_weighted_consensus(g: Graph, s: Iterable[int], input_values, x0=None, dt: float = 0.1,
                                t_end: float = 10.0) -> Trajectory:
    """Deterministic leader-follower consensus propagated exactly by expm(-L dt)."""
    s, xl, x = _setup(g, s, input_values, x0)
    prop = expm(-full_grounded_laplacian(g, s) * dt)
    steps = int(round(t_end / dt))
    rows = np.empty((steps + 1, g.n))
    rows[0] = x
    for k in range(1, steps + 1):
        x = prop @ x
        x[list(s)] = xl
        rows[k] = x
    return Trajectory(np.arange(steps + 1) * dt, rows, s, xl, {"dt": dt, "propagator": "expm"})


def containment_error(x: np.ndarray, s: Iterable[int], input_values, p: float = 1.0) -> float:
    """Sum over followers of dist(x_i, [min input, max input])^p."""
    s = sorted(set(int(v) for v in s))
    xl = np.asarray(input_values, dtype=float)
    lo, hi = xl.min(), xl.max()
    mask = np.ones(len(x), dtype=bool)
    mask[s] = False
    xf = np.asarray(x, dtype=float)[mask]
    d = np.maximum(0.0, np.maximum(lo - xf, xf - hi))
    return float((d ** p).sum())


def absorbing_walk_probabilities(g: Graph, s: Iterable[int], delta: float, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Follower block ``G`` of ``P^tau`` (P = expm(-L delta), inputs absorbing) and ``h = G 1``."""
    gl = grounded_laplacian(g, s)
    gm = expm(-gl.L_ff * (delta * tau))
    return gm, gm.sum(axis=1)


def absorbing_walk_mc(g: Graph, s: Iterable[int], delta: float, tau: int, walks: int = 100_000,
                      seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo estimate of the follower block of ``P^tau`` and its standard errors.

    Each follower gets its own stream spawned from ``seed``.
    """
    s = sorted(set(int(v) for v in s))
    p = expm(-full_grounded_laplacian(g, s) * delta)
    p = np.clip(p, 0.0, None)
    p /= p.sum(axis=1, keepdims=True)
    cdf = np.cumsum(p, axis=1)
    cdf[:, -1] = 1.0
    followers = [v for v in range(g.n) if v not in set(s)]
    est = np.zeros((len(followers), len(followers)))
    streams = np.random.SeedSequence(seed).spawn(len(followers))
    for r, (i, ss) in enumerate(zip(followers, streams)):
        rng = np.random.default_rng(ss)
        pos = np.full(walks, i)
        for _ in range(tau):
            u = rng.random(walks)
            pos = (cdf[pos] < u[:, None]).sum(axis=1)
        counts = np.bincount(pos, minlength=g.n)
        est[r] = counts[followers] / walks
    se = np.sqrt(est * (1.0 - est) / walks)
    return est, se
