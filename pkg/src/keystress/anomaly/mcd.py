"""Minimum Covariance Determinant by FAST-MCD, scored by robust Mahalanobis
distance."""

from __future__ import annotations

import logging
import math

import numpy as np

from ..errors import InvalidConfig
from .chi2_table import CHI2_QUANTILES

log = logging.getLogger(__name__)


def chi2_quantile(d: int, q: float) -> float:
    try:
        return CHI2_QUANTILES[d][q]
    except KeyError:
        raise InvalidConfig(f"no chi-squared quantile for d={d}, q={q}") from None


def mahalanobis(X: np.ndarray, mu: np.ndarray, cov: np.ndarray) -> np.ndarray:
    diff = np.atleast_2d(X) - mu
    sol = np.linalg.solve(cov, diff.T).T
    return np.sqrt(np.maximum((diff * sol).sum(axis=1), 0.0))


def _moments(X: np.ndarray, idx: np.ndarray):
    sub = X[np.sort(idx)]
    mu = sub.mean(axis=0)
    diff = sub - mu
    return mu, diff.T @ diff / len(sub)


def _regularize(cov: np.ndarray) -> np.ndarray:
    d = len(cov)
    eps = 1e-6 * np.trace(cov) / d
    if eps <= 0:
        eps = 1e-6
    log.warning("SingularCovariance: adding %.3g * I", eps)
    return cov + eps * np.eye(d)


def _safe_det(cov):
    det = float(np.linalg.det(cov))
    return det if det > 0 else 0.0


def c_steps(X: np.ndarray, start: np.ndarray, h: int, max_steps: int = 200):
    """Iterate C-steps from an initial subset until the h-subset repeats.

    Returns (mu, cov, subset, determinant history). The history starts at the
    first h-subset and is non-increasing.
    """
    mu, cov = _moments(X, start)
    if _safe_det(cov) == 0.0:
        cov = _regularize(cov)
    subset = None
    dets: list[float] = []
    for _ in range(max_steps):
        dist = mahalanobis(X, mu, cov)
        new = np.sort(np.argsort(dist, kind="stable")[:h])
        if subset is not None and np.array_equal(new, subset):
            break
        subset = new
        mu, cov = _moments(X, subset)
        det = _safe_det(cov)
        dets.append(det)
        if det == 0.0:
            cov = _regularize(cov)
            break
    return mu, cov, subset, dets


def fit(X, support_frac: float = 0.75, n_starts: int = 50, seed: int = 0, quantile: float = 0.975,
        consistency: bool = True) -> dict:
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n <= d + 1:
        raise InvalidConfig(f"need more than d+1={d + 1} samples, got {n}")
    h = min(n, max(int(math.ceil(support_frac * n)), d + 1))
    rng = np.random.default_rng(seed)
    best = None
    histories = []
    for _ in range(n_starts):
        start = rng.choice(n, d + 1, replace=False)
        mu, cov, subset, dets = c_steps(X, start, h)
        histories.append(dets)
        det = dets[-1] if dets else _safe_det(cov)
        if best is None or det < best[0]:
            best = (det, mu, cov, subset)
    _, mu, cov, subset = best
    if _safe_det(cov) == 0.0:
        cov = _regularize(cov)
    raw_cov = cov
    if consistency:
        # rescale so the median squared distance matches its chi2 expectation
        d2 = mahalanobis(X, mu, cov) ** 2
        factor = float(np.median(d2)) / chi2_quantile(d, 0.5)
        if factor > 0:
            cov = cov * factor
    return {
        "mean": mu.tolist(),
        "cov": cov.tolist(),
        "raw_cov": raw_cov.tolist(),
        "subset": subset.tolist(),
        "h": h,
        "det_histories": histories,
        "quantile": quantile,
        "d": d,
    }


def score(params: dict, X) -> np.ndarray:
    return mahalanobis(np.asarray(X, dtype=float), np.array(params["mean"]), np.array(params["cov"]))


def chi2_threshold(params: dict) -> float:
    return math.sqrt(chi2_quantile(params["d"], params["quantile"]))
