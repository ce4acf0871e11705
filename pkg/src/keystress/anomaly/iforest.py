"""Isolation Forest."""

from __future__ import annotations

import math

import numpy as np

from ..errors import DegenerateData, InvalidConfig

EULER_GAMMA = 0.5772156649


def harmonic(i: float) -> float:
    return math.log(i) + EULER_GAMMA


def c_factor(m: int) -> float:
    """Average unsuccessful-search path length in a BST of ``m`` nodes.

    ``c(2)`` uses the exact harmonic number H(1) = 1; larger ``m`` use the
    logarithmic approximation.
    """
    if m <= 1:
        return 0.0
    if m == 2:
        return 1.0
    return 2.0 * harmonic(m - 1) - 2.0 * (m - 1) / m


def _build(X: np.ndarray, height_limit: int, rng: np.random.Generator) -> dict:
    nodes = {"feature": [], "threshold": [], "left": [], "right": [], "size": []}

    def grow(idx, depth):
        node = len(nodes["feature"])
        for key, v in (("feature", -1), ("threshold", 0.0), ("left", -1), ("right", -1), ("size", len(idx))):
            nodes[key].append(v)
        if depth >= height_limit or len(idx) <= 1:
            return node
        sub = X[idx]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        splittable = np.flatnonzero(hi > lo)
        if not len(splittable):
            return node
        f = int(splittable[rng.integers(len(splittable))])
        thr = float(lo[f] + rng.random() * (hi[f] - lo[f]))
        go_left = sub[:, f] < thr
        nodes["feature"][node] = f
        nodes["threshold"][node] = thr
        nodes["left"][node] = grow(idx[go_left], depth + 1)
        nodes["right"][node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(len(X)), 0)
    return nodes


def fit(X, n_trees: int = 100, subsample: int = 256, seed: int = 0) -> dict:
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < 2:
        raise InvalidConfig("isolation forest needs at least 2 samples")
    psi = min(subsample, n)
    if psi < 2:
        raise InvalidConfig("subsample must be >= 2")
    if (X == X[0]).all():
        raise DegenerateData("all training points are identical")
    height_limit = int(math.ceil(math.log2(psi)))
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        idx = rng.choice(n, psi, replace=False)
        trees.append(_build(X[idx], height_limit, rng))
    return {"trees": trees, "psi": psi}


def path_lengths(tree: dict, X: np.ndarray) -> np.ndarray:
    feature = np.asarray(tree["feature"])
    threshold = np.asarray(tree["threshold"], dtype=float)
    left, right = np.asarray(tree["left"]), np.asarray(tree["right"])
    size = np.asarray(tree["size"])
    node = np.zeros(len(X), dtype=int)
    depth = np.zeros(len(X))
    rows = np.arange(len(X))
    while True:
        inner = feature[node] >= 0
        if not inner.any():
            break
        r, n = rows[inner], node[inner]
        goes_left = X[r, feature[n]] < threshold[n]
        node[inner] = np.where(goes_left, left[n], right[n])
        depth[inner] += 1
    return depth + np.array([c_factor(int(s)) for s in size[node]])


def score(params: dict, X) -> np.ndarray:
    """Anomaly score ``2 ** (-E[h(x)] / c(psi))`` in (0, 1]; higher = more anomalous."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mean_h = np.mean([path_lengths(t, X) for t in params["trees"]], axis=0)
    return 2.0 ** (-mean_h / c_factor(params["psi"]))
