"""One-class SVM with an RBF kernel.

Dual problem::

    min  1/2 a^T K a    s.t.  0 <= a_i <= 1 / (nu * n),  sum(a) = 1

solved by pairwise coordinate updates: each step moves mass from the
coordinate with the largest gradient that can still decrease to the one with
the smallest gradient that can still increase, so every iterate stays
feasible.
"""

from __future__ import annotations

import logging

import numpy as np

from ..errors import InvalidConfig

log = logging.getLogger(__name__)


def rbf(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-gamma * d2)


def default_gamma(X: np.ndarray) -> float:
    """``1 / (d * var)`` with var the mean per-feature variance, so shifting
    any column leaves gamma unchanged."""
    var = float(X.var(axis=0).mean())
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def dual_objective(alpha: np.ndarray, K: np.ndarray) -> float:
    return 0.5 * float(alpha @ K @ alpha)


def solve_dual(K: np.ndarray, nu: float, tol: float = 1e-10, max_iter: int = 100000):
    """Return (alpha, gradient, violation gap, iterations)."""
    n = len(K)
    C = 1.0 / (nu * n)
    alpha = np.full(n, 1.0 / n)
    g = K @ alpha
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        up = alpha < C
        down = alpha > 0
        if not up.any() or not down.any():
            # nu = 1 pins every alpha at the bound; nothing can move
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmin(g[up])])
        j = int(np.flatnonzero(down)[np.argmax(g[down])])
        gap = g[j] - g[i]
        if gap <= tol:
            break
        curv = K[i, i] + K[j, j] - 2 * K[i, j]
        t = gap / curv if curv > 1e-15 else np.inf
        room_i, room_j = C - alpha[i], alpha[j]
        if t >= room_i or t >= room_j:
            if room_i <= room_j:
                t = room_i
                alpha[i] = C
                alpha[j] -= t
            else:
                t = room_j
                alpha[i] += t
                alpha[j] = 0.0
        else:
            alpha[i] += t
            alpha[j] -= t
        g += t * (K[:, i] - K[:, j])
    return alpha, g, float(gap), it


def fit(X, nu: float = 0.1, gamma: float | None = None, tol: float = 1e-10, max_iter: int = 100000) -> dict:
    X = np.asarray(X, dtype=float)
    if not 0 < nu <= 1:
        raise InvalidConfig("nu must lie in (0, 1]")
    gamma = default_gamma(X) if gamma is None else gamma
    K = rbf(X, X, gamma)
    alpha, g, gap, iters = solve_dual(K, nu, tol, max_iter)
    C = 1.0 / (nu * len(X))
    free = (alpha > 1e-12) & (alpha < C - 1e-12)
    if free.any():
        rho = float(g[free].mean())
    else:
        lower, upper = g[alpha < C - 1e-12], g[alpha > 1e-12]
        if not len(lower):
            lower = upper
        rho = float((lower.min() + upper.max()) / 2)
    converged = gap <= tol
    if not converged:
        log.warning("SolverNotConverged: duality gap %.3g after %d iterations", gap, iters)
    sv = alpha > 0
    return {
        "support_vectors": X[sv].tolist(),
        "alpha": alpha[sv].tolist(),
        "gamma": float(gamma),
        "rho": rho,
        "nu": nu,
        "objective": dual_objective(alpha, K),
        "gap": gap,
        "converged": bool(converged),
    }


def score(params: dict, X) -> np.ndarray:
    """``rho - sum_i a_i K(x_i, x)``; positive outside the learned region."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sv = np.array(params["support_vectors"], dtype=float)
    return params["rho"] - rbf(X, sv, params["gamma"]) @ np.array(params["alpha"])
