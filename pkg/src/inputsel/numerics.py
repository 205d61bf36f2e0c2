"""Dense linear-algebra kernel shared by every metric.

Thin, contract-checked wrappers over LAPACK (via numpy/scipy) plus the
finite-horizon controllability Gramian, which is assembled here from block
matrix exponentials.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

__all__ = [
    "NotPositiveDefiniteError",
    "NotHurwitzError",
    "solve_spd",
    "inv_spd",
    "log_det_spd",
    "numerical_rank",
    "expm",
    "is_hurwitz",
    "lyapunov_gramian",
    "finite_horizon_gramian",
    "gramian",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Cholesky failed: the matrix is singular or indefinite."""


class NotHurwitzError(np.linalg.LinAlgError):
    """The state matrix has an eigenvalue with nonnegative real part."""


def _as2d(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _cholesky(m: np.ndarray):
    m = _as2d(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(m).max(initial=0.0))):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        c = sla.cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    d = np.abs(np.diag(c[0]))
    if d.size and d.min() <= 1e-14 * d.max():
        raise NotPositiveDefiniteError("matrix is numerically singular")
    return c


def solve_spd(m, rhs) -> np.ndarray:
    c = _cholesky(m)
    rhs = np.asarray(rhs, dtype=float)
    return sla.cho_solve(c, rhs, check_finite=False)


def inv_spd(m) -> np.ndarray:
    m = _as2d(m)
    return solve_spd(m, np.eye(m.shape[0]))


def log_det_spd(m) -> float:
    m = _as2d(m)
    if m.size == 0:
        return 0.0
    c = _cholesky(m)
    return float(2.0 * np.log(np.diag(c[0])).sum())


def numerical_rank(m, tol: float | None = None) -> int:
    """Count singular values above ``tol`` (default: max(rows, cols) * eps * sigma_max)."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if tol is None:
        tol = max(m.shape) * np.finfo(float).eps * sv[0]
    return int((sv > tol).sum())


def expm(m) -> np.ndarray:
    m = _as2d(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("expm needs a square matrix")
    if m.size == 0:
        return m.copy()
    return sla.expm(m)


def is_hurwitz(a, margin: float = 0.0) -> bool:
    a = _as2d(a)
    if a.size == 0:
        return True
    return bool(np.linalg.eigvals(a).real.max() < -margin)


def lyapunov_gramian(a, b) -> np.ndarray:
    """Infinite-horizon Gramian ``W`` solving ``A W + W A^T + B B^T = 0``."""
    a = _as2d(a)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    if not is_hurwitz(a):
        raise NotHurwitzError("A is not Hurwitz; use finite_horizon_gramian")
    q = b @ b.T
    w = sla.solve_continuous_lyapunov(a, -q)
    return 0.5 * (w + w.T)


def finite_horizon_gramian(a, b, t0: float, t1: float) -> np.ndarray:
    """``integral_0^T e^{At} B B^T e^{A^T t} dt`` with ``T = t1 - t0``.

    A short step ``h = T / 2**m`` (with ``||A|| h <= 1``) is integrated with the
    augmented exponential of ``[[A, BB^T], [0, -A^T]]``; the horizon is then
    reached by doubling, ``G(2h) = G(h) + e^{Ah} G(h) e^{A^T h}``, which avoids
    the overflow the single-shot augmented exponential hits on long horizons.
    """
    a = _as2d(a)
    n = a.shape[0]
    b = np.asarray(b, dtype=float).reshape(n, -1)
    if not t1 > t0:
        raise ValueError("finite horizon needs t1 > t0")
    horizon = float(t1 - t0)
    q = b @ b.T
    if n == 0:
        return np.zeros((0, 0))
    norm = np.abs(a).sum(axis=1).max()
    m = 0
    if norm * horizon > 1.0:
        m = int(np.ceil(np.log2(norm * horizon)))
    h = horizon / 2.0**m
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = a
    aug[:n, n:] = q
    aug[n:, n:] = -a.T
    e = sla.expm(aug * h)
    phi = e[:n, :n]
    g = e[:n, n:] @ phi.T
    for _ in range(m):
        g = g + phi @ g @ phi.T
        phi = phi @ phi
    return 0.5 * (g + g.T)


def gramian(a, b, horizon: tuple[float, float] = (0.0, 1.0), finite: bool = False) -> np.ndarray:
    """Lyapunov Gramian when A is Hurwitz, else Gamma(t0, t1) over ``horizon``.

    ``finite=True`` always returns the finite-horizon Gramian.
    """
    if not finite and is_hurwitz(a):
        return lyapunov_gramian(a, b)
    return finite_horizon_gramian(a, b, *horizon)
