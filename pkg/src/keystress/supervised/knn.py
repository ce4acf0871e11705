"""k-nearest-neighbour majority vote.

Neighbours are ranked by Euclidean distance with ties going to the lower
training index; a tied vote goes to the normal class.
"""

from __future__ import annotations

import numpy as np

from ..errors import KTooLarge


def fit(X, y, k: int = 3) -> dict:
    X = np.asarray(X, dtype=float)
    if not 1 <= k <= len(X):
        raise KTooLarge(f"k={k} with {len(X)} training samples")
    return {"X": X.tolist(), "y": np.asarray(y, dtype=int).tolist(), "k": k}


def neighbors(train: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    d2 = ((train - x) ** 2).sum(axis=1)
    return np.argsort(d2, kind="stable")[:k]


def predict(params: dict, X) -> np.ndarray:
    train = np.array(params["X"], dtype=float)
    y = np.array(params["y"], dtype=int)
    k = params["k"]
    out = []
    for x in np.asarray(X, dtype=float):
        votes = y[neighbors(train, x, k)].sum()
        out.append(int(2 * votes > k))
    return np.array(out, dtype=int)
