"""Performance set functions: noise variance, Kalman log-det error and the
random-walk convergence-error bound, plus a Monte-Carlo commute-time estimator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graph import Graph, GraphError, grounded_laplacian
from .numerics import NotPositiveDefiniteError, expm, inv_spd, log_det_spd, solve_spd

__all__ = [
    "SingularLaplacianError",
    "KalmanSetup",
    "ConvergenceParams",
    "TotalBound",
    "CommuteEstimate",
    "noise_variance",
    "node_noise_variance",
    "kalman_log_det",
    "kalman_posterior_cov",
    "convergence_bound",
    "total_convergence_bound",
    "commute_time_mc",
    "default_delta",
]


class SingularLaplacianError(NotPositiveDefiniteError):
    """Some follower component contains no input node."""


def _grounded_inverse(g: Graph, s) -> tuple[np.ndarray, dict]:
    if g.directed:
        raise GraphError("noise variance is defined for undirected graphs")
    s = set(s)
    if not s:
        raise SingularLaplacianError("input set is empty; L_ff is singular")
    gl = grounded_laplacian(g, s)
    if not gl.followers:
        return np.zeros((0, 0)), gl.index
    try:
        return inv_spd(gl.L_ff), gl.index
    except NotPositiveDefiniteError:
        raise SingularLaplacianError(
            "grounded Laplacian is singular: a follower component has no input"
        ) from None


def noise_variance(g: Graph, s: Iterable[int]) -> float:
    """R(S) = trace(L_ff^{-1}), twice the steady-state total error variance."""
    inv, _ = _grounded_inverse(g, s)
    return float(np.trace(inv))


def node_noise_variance(g: Graph, s: Iterable[int], u: int) -> float:
    s = set(s)
    if u in s:
        raise GraphError(f"node {u} is an input node")
    inv, index = _grounded_inverse(g, s)
    return float(inv[index[u], index[u]])


# -- Kalman filtering ------------------------------------------------------------

@dataclass(frozen=True)
class KalmanSetup:
    """Time-invariant linear system observed through selected states.

    ``prior_cov`` is either the ``n x n`` covariance shared by ``x_0`` and every
    process-noise vector ``w_i`` (i.i.d. blocks), or the full
    ``n(k+1) x n(k+1)`` covariance of ``z = (x_0, w_0, ..., w_{k-1})``.
    """

    a_k: np.ndarray
    prior_cov: np.ndarray | None = None
    sigma2: float = 1.0
    horizon: int = 1

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_k, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise ValueError("state transition must be square")
        object.__setattr__(self, "a_k", a)
        if self.sigma2 <= 0:
            raise ValueError("measurement variance must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        n = a.shape[0]
        dim = n * (self.horizon + 1)
        c = np.eye(n) if self.prior_cov is None else np.atleast_2d(np.asarray(self.prior_cov, dtype=float))
        if c.shape == (n, n) and dim != n:
            c = np.kron(np.eye(self.horizon + 1), c)
        if c.shape != (dim, dim):
            raise ValueError(f"prior covariance must be {n}x{n} or {dim}x{dim}")
        object.__setattr__(self, "prior_cov", c)

    @property
    def n(self) -> int:
        return self.a_k.shape[0]


def _observation_matrix(setup: KalmanSetup, s) -> np.ndarray:
    n, k = setup.n, setup.horizon
    a = setup.a_k
    sel = np.eye(n)[sorted(s)]
    # L_i = (A^i, A^{i-1}, ..., A, I, 0, ..., 0) over blocks (x_0, w_0, ..., w_{k-1})
    powers = [np.eye(n)]
    for _ in range(k):
        powers.append(a @ powers[-1])
    rows = []
    for i in range(k + 1):
        li = np.zeros((n, n * (k + 1)))
        li[:, :n] = powers[i]
        for j in range(1, i + 1):
            li[:, j * n:(j + 1) * n] = powers[i - j]
        rows.append(sel @ li)
    return np.vstack(rows)


def kalman_posterior_cov(setup: KalmanSetup, s: Iterable[int]) -> np.ndarray:
    s = sorted(set(int(v) for v in s))
    if any(not 0 <= v < setup.n for v in s):
        raise ValueError("state index out of range")
    c = setup.prior_cov
    if not s:
        return c.copy()
    o = _observation_matrix(setup, s)
    co = c @ o.T
    gain = solve_spd(o @ co + setup.sigma2 * np.eye(o.shape[0]), co.T)
    sigma = c - co @ gain
    return 0.5 * (sigma + sigma.T)


def kalman_log_det(setup: KalmanSetup, s: Iterable[int]) -> float:
    """h(S) = log det of the smoothing-error covariance of (x_0, w_0, ..., w_{k-1})."""
    return log_det_spd(kalman_posterior_cov(setup, s))


# -- convergence error ---------------------------------------------------------------

def default_delta(g: Graph) -> float:
    d = np.diag(g.laplacian())
    return 0.1 / d.max() if d.size and d.max() > 0 else 0.1


@dataclass(frozen=True)
class ConvergenceParams:
    t: float = 1.0
    delta: float = 0.1
    p: float = 1.0
    horizon_steps: int | None = None

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("step size must be positive")
        if self.p < 1:
            raise ValueError("norm order must be >= 1")
        tau = self.horizon_steps
        if tau is None:
            tau = int(round(self.t / self.delta))
        if tau < 0:
            raise ValueError("horizon must be nonnegative")
        object.__setattr__(self, "horizon_steps", int(tau))

    @classmethod
    def for_graph(cls, g: Graph, t: float, p: float = 1.0) -> "ConvergenceParams":
        return cls(t=t, delta=default_delta(g), p=p)

    @property
    def tau(self) -> int:
        return self.horizon_steps


def _follower_block(g: Graph, s) -> np.ndarray:
    gl = grounded_laplacian(g, s)
    return gl.L_ff


def _bound_from_block(g_mat: np.ndarray, p: float) -> float:
    h = g_mat.sum(axis=1)
    return float((np.abs(g_mat) ** p).sum() + (np.abs(h) ** p).sum())


def convergence_bound(g: Graph, s: Iterable[int], params: ConvergenceParams) -> float:
    """sum_{i not in S} [ sum_{j not in S} g_ij^p + h_i^p ] with g = (P^tau) on followers.

    Inputs are absorbing, so the follower block of ``P^tau`` equals
    ``expm(-L_ff * delta * tau)``.
    """
    l_ff = _follower_block(g, s)
    if l_ff.shape[0] == 0:
        return 0.0
    g_mat = expm(-l_ff * (params.delta * params.tau))
    return _bound_from_block(g_mat, params.p)


@dataclass(frozen=True)
class TotalBound:
    value: float
    steps: int
    capped: bool


def total_convergence_bound(
    g: Graph, s: Iterable[int], params: ConvergenceParams, horizon: int | None = None,
    rtol: float = 1e-6, max_steps: int = 100_000,
) -> TotalBound:
    """Left Riemann sum delta * sum_k f_hat(k delta).

    Runs to ``horizon`` steps when given, otherwise until the newest term falls
    below ``rtol`` of the running sum or ``max_steps`` is hit (``capped``).
    """
    s = set(s)
    if not s:
        raise SingularLaplacianError("the integrated bound diverges for an empty input set")
    l_ff = _follower_block(g, s)
    if l_ff.shape[0] == 0:
        return TotalBound(0.0, 0, False)
    step = expm(-l_ff * params.delta)
    cur = np.eye(l_ff.shape[0])
    total = 0.0
    limit = max_steps if horizon is None else horizon
    k = 0
    while True:
        term = _bound_from_block(cur, params.p)
        total += term
        if horizon is None and term < rtol * total:
            return TotalBound(params.delta * total, k, False)
        if k >= limit:
            return TotalBound(params.delta * total, k, horizon is None)
        cur = cur @ step
        k += 1


# -- commute times ---------------------------------------------------------------------

@dataclass(frozen=True)
class CommuteEstimate:
    mean: float
    stderr: float
    walks: int
    failures: int = 0
    extra: dict = field(default_factory=dict)


def walk_transition(g: Graph) -> np.ndarray:
    """P_ij = |L_ij| / L_ii from the full (ungrounded) Laplacian."""
    L = g.laplacian()
    d = np.diag(L).copy()
    if np.any(d <= 0):
        raise GraphError("random walk needs every node to have a neighbour")
    p = np.abs(L - np.diag(np.diag(L))) / d[:, None]
    return p


def commute_time_mc(
    g: Graph, s: Iterable[int], u: int, walks: int = 10_000, seed=None,
    max_steps: int = 1_000_000, batch: int = 20_000,
) -> CommuteEstimate:
    """Monte-Carlo estimate of the commute time u -> S -> u.

    Walks run in vectorised batches; each batch draws from its own stream
    spawned from ``seed``. Walks still running after ``max_steps`` are counted
    as failures and excluded from the mean.
    """
    s = set(int(v) for v in s)
    if u in s:
        raise GraphError(f"node {u} is an input node")
    if not s:
        raise GraphError("commute time to an empty set is undefined")
    p = walk_transition(g)
    cdf = np.cumsum(p, axis=1)
    cdf[:, -1] = 1.0
    in_s = np.zeros(g.n, dtype=bool)
    in_s[list(s)] = True
    nbatches = -(-walks // batch)
    streams = np.random.SeedSequence(seed).spawn(nbatches)
    times = []
    failures = 0
    for b, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        m = min(batch, walks - b * batch)
        pos = np.full(m, u)
        phase = np.zeros(m, dtype=np.int8)  # 0: heading for S, 1: returning to u
        steps = np.zeros(m, dtype=np.int64)
        active = np.ones(m, dtype=bool)
        for _ in range(max_steps):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            r = rng.random(idx.size)
            nxt = (cdf[pos[idx]] < r[:, None]).sum(axis=1)
            pos[idx] = nxt
            steps[idx] += 1
            hit = (phase[idx] == 0) & in_s[nxt]
            phase[idx[hit]] = 1
            done = (phase[idx] == 1) & (nxt == u)
            active[idx[done]] = False
        failures += int(active.sum())
        times.append(steps[~active])
    t = np.concatenate(times) if times else np.zeros(0)
    if t.size == 0:
        return CommuteEstimate(float("nan"), float("nan"), 0, failures)
    se = float(t.std(ddof=1) / np.sqrt(t.size)) if t.size > 1 else 0.0
    return CommuteEstimate(float(t.mean()), se, int(t.size), failures)
