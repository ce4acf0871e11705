"""Local Outlier Factor with novelty scoring against a stored training set.

Neighbours are the ``k`` nearest by Euclidean distance, ties going to the
lower training index. A query identical to a training point is scored with
that point left out of its own neighbourhood, so scoring the training set
reproduces the training LOF values.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidConfig

LRD_CAP = 1e12


def _dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1))


def _lrd(mean_reach: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(mean_reach > 0, 1.0 / np.maximum(mean_reach, 1 / LRD_CAP), LRD_CAP)


def _neighbors(row: np.ndarray, k: int, exclude: int | None) -> np.ndarray:
    order = np.argsort(row, kind="stable")
    if exclude is not None:
        order = order[order != exclude]
    return order[:k]


def fit(X, k: int = 10) -> dict:
    X = np.asarray(X, dtype=float)
    n = len(X)
    if not 1 <= k < n:
        raise InvalidConfig(f"k={k} needs more than k training samples (got {n})")
    D = _dist(X, X)
    nbrs = np.array([_neighbors(D[i], k, i) for i in range(n)])
    kdist = D[np.arange(n), nbrs[:, -1]]
    reach = np.maximum(kdist[nbrs], D[np.arange(n)[:, None], nbrs])
    lrd = _lrd(reach.mean(axis=1))
    lof = lrd[nbrs].mean(axis=1) / lrd
    return {"X": X.tolist(), "k": k, "kdist": kdist.tolist(), "lrd": lrd.tolist(), "train_lof": lof.tolist()}


def score(params: dict, X) -> np.ndarray:
    train = np.array(params["X"], dtype=float)
    kdist = np.array(params["kdist"])
    lrd_train = np.array(params["lrd"])
    k = params["k"]
    X = np.atleast_2d(np.asarray(X, dtype=float))
    D = _dist(X, train)
    out = np.empty(len(X))
    for q, row in enumerate(D):
        same = np.flatnonzero((train == X[q]).all(axis=1))
        nb = _neighbors(row, k, int(same[0]) if len(same) else None)
        reach = np.maximum(kdist[nb], row[nb])
        lrd_q = _lrd(np.array([reach.mean()]))[0]
        out[q] = lrd_train[nb].mean() / lrd_q
    return out
