"""CART trees, random forests and log-loss gradient boosting.

Trees are stored as flat node arrays so they serialize as plain JSON lists:
``feature[i] == -1`` marks a leaf; otherwise rows with
``x[feature] <= threshold`` go to ``left[i]``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptySplit, InvalidConfig
from .linear import check_binary, log_loss_from_logits, sigmoid


def gini(labels) -> float:
    labels = np.asarray(labels)
    if not len(labels):
        return 0.0
    p = labels.mean()
    return float(1.0 - p * p - (1 - p) * (1 - p))


def _split_positions(xs: np.ndarray, min_leaf: int) -> np.ndarray:
    """Positions i (split between sorted i and i+1) that are valid cuts."""
    n = len(xs)
    pos = np.arange(n - 1)
    ok = (xs[1:] > xs[:-1]) & (pos + 1 >= min_leaf) & (n - pos - 1 >= min_leaf)
    return pos[ok]


def _gini_cost(ys: np.ndarray, pos: np.ndarray) -> np.ndarray:
    n = len(ys)
    cum = np.cumsum(ys)[pos]
    n_l = pos + 1.0
    n_r = n - n_l
    p_l = cum / n_l
    p_r = (ys.sum() - cum) / n_r
    return n_l * 2 * p_l * (1 - p_l) + n_r * 2 * p_r * (1 - p_r)


def _sse_cost(ys: np.ndarray, pos: np.ndarray) -> np.ndarray:
    n = len(ys)
    s = np.cumsum(ys)[pos]
    s2 = np.cumsum(ys * ys)[pos]
    n_l = pos + 1.0
    n_r = n - n_l
    tot, tot2 = ys.sum(), (ys * ys).sum()
    return (s2 - s * s / n_l) + ((tot2 - s2) - (tot - s) ** 2 / n_r)


def best_split(X, target, features, min_leaf, cost):
    """(feature, threshold, cost) of the cheapest valid cut, or None.

    Ties keep the first feature in ``features``; within a feature, equal-cost
    cuts resolve to the most balanced one (lowest threshold after that). A
    zero-gain root on XOR-like data then still lands between the clusters.
    """
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], target[order]
        pos = _split_positions(xs, min_leaf)
        if not len(pos):
            continue
        costs = cost(ys, pos)
        near = np.flatnonzero(costs <= costs.min() + 1e-12)
        i = int(near[np.argmin(np.abs(2 * (pos[near] + 1) - len(xs)))])
        if best is None or costs[i] < best[2] - 1e-12:
            lo, hi = xs[pos[i]], xs[pos[i] + 1]
            thr = (lo + hi) / 2.0
            if thr >= hi:
                thr = lo
            best = (int(f), float(thr), float(costs[i]))
    return best


class _Builder:
    def __init__(self, X, target, leaf_value, cost, max_depth, min_leaf, n_features, rng, pure):
        self.X, self.target = X, target
        self.leaf_value, self.cost, self.pure = leaf_value, cost, pure
        self.max_depth = math.inf if max_depth is None else max_depth
        self.min_leaf, self.n_features, self.rng = min_leaf, n_features, rng
        self.nodes = {"feature": [], "threshold": [], "left": [], "right": [], "value": []}

    def _new(self):
        n = self.nodes
        for key in ("feature", "left", "right"):
            n[key].append(-1)
        n["threshold"].append(0.0)
        n["value"].append(0.0)
        return len(n["feature"]) - 1

    def _candidates(self, d):
        if self.n_features >= d or self.rng is None:
            return [list(range(d))]
        perm = [int(i) for i in self.rng.permutation(d)]
        return [perm[: self.n_features], perm[self.n_features:]]

    def build(self, idx, depth=0):
        node = self._new()
        self.nodes["value"][node] = float(self.leaf_value(idx))
        if depth >= self.max_depth or len(idx) < 2 * self.min_leaf or self.pure(idx):
            return node
        split = None
        tried: list[int] = []
        for group in self._candidates(self.X.shape[1]):
            tried += group
            split = best_split(self.X[idx], self.target[idx], group, self.min_leaf, self.cost)
            if split is not None:
                break
        if split is None:
            return node
        f, thr, _ = split
        go_left = self.X[idx, f] <= thr
        self.nodes["feature"][node] = f
        self.nodes["threshold"][node] = thr
        self.nodes["left"][node] = self.build(idx[go_left], depth + 1)
        self.nodes["right"][node] = self.build(idx[~go_left], depth + 1)
        return node


def tree_apply(tree: dict, X: np.ndarray) -> np.ndarray:
    """Leaf values for every row."""
    feature = np.asarray(tree["feature"])
    threshold = np.asarray(tree["threshold"], dtype=float)
    left, right = np.asarray(tree["left"]), np.asarray(tree["right"])
    value = np.asarray(tree["value"], dtype=float)
    node = np.zeros(len(X), dtype=int)
    rows = np.arange(len(X))
    while True:
        f = feature[node]
        inner = f >= 0
        if not inner.any():
            return value[node]
        r, n = rows[inner], node[inner]
        goes_left = X[r, f[inner]] <= threshold[n]
        node[inner] = np.where(goes_left, left[n], right[n])


def fit_cart(X, y, max_depth=None, min_leaf=1, n_features=None, rng=None) -> dict:
    """Gini classification tree; leaf value is the majority class (ties -> 0)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n_features = X.shape[1] if n_features is None else n_features
    b = _Builder(
        X, y,
        leaf_value=lambda idx: 1.0 if 2 * y[idx].sum() > len(idx) else 0.0,
        cost=_gini_cost, max_depth=max_depth, min_leaf=min_leaf,
        n_features=n_features, rng=rng,
        pure=lambda idx: y[idx].min() == y[idx].max(),
    )
    b.build(np.arange(len(X)))
    return b.nodes


def fit_random_forest(X, y, n_trees=100, max_depth=8, min_leaf=1, n_features_per_split=None,
                      bootstrap=True, seed=0) -> dict:
    X = np.asarray(X, dtype=float)
    y = check_binary(y)
    if len(X) == 0:
        raise EmptySplit("empty training set")
    if n_trees < 1:
        raise InvalidConfig("n_trees must be >= 1")
    m = n_features_per_split or max(1, int(math.sqrt(X.shape[1])))
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        idx = rng.integers(0, len(X), len(X)) if bootstrap else np.arange(len(X))
        trees.append(fit_cart(X[idx], y[idx], max_depth, min_leaf, m, rng))
    return {"trees": trees}


def predict_random_forest(params: dict, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    votes = sum(tree_apply(t, X) for t in params["trees"])
    return (2 * votes > len(params["trees"])).astype(int)


def fit_regression_tree(X, residual, hess, max_depth=2, min_leaf=1) -> dict:
    """Squared-error tree on ``residual``; leaves take a Newton step."""
    def leaf(idx):
        h = hess[idx].sum()
        return residual[idx].sum() / h if h > 1e-12 else 0.0

    b = _Builder(
        X, residual, leaf_value=leaf, cost=_sse_cost,
        max_depth=max_depth, min_leaf=min_leaf, n_features=X.shape[1], rng=None,
        pure=lambda idx: residual[idx].min() == residual[idx].max(),
    )
    b.build(np.arange(len(X)))
    return b.nodes


def fit_gboost(X, y, n_stages=100, lr=0.1, max_depth=2, min_leaf=1) -> dict:
    """Stage-wise trees on the log-loss gradient of the logit.

    A stage whose step would raise the training loss is shrunk by halving
    (down to zero), so the recorded loss never increases.
    """
    X = np.asarray(X, dtype=float)
    y = check_binary(y)
    if len(X) == 0:
        raise EmptySplit("empty training set")
    p0 = min(max(y.mean(), 1e-12), 1 - 1e-12)
    init = float(math.log(p0 / (1 - p0)))
    F = np.full(len(y), init)
    loss = log_loss_from_logits(F, y)
    history = [loss]
    stages, rates = [], []
    for _ in range(n_stages):
        p = sigmoid(F)
        tree = fit_regression_tree(X, y - p, p * (1 - p), max_depth, min_leaf)
        step = tree_apply(tree, X)
        rate = lr
        for _ in range(30):
            new_loss = log_loss_from_logits(F + rate * step, y)
            if new_loss <= loss:
                break
            rate /= 2
        else:
            rate = 0.0
            new_loss = loss
        F = F + rate * step
        loss = new_loss
        stages.append(tree)
        rates.append(rate)
        history.append(loss)
    return {"init": init, "stages": stages, "rates": rates, "loss_history": history}


def gboost_logit(params: dict, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    F = np.full(len(X), params["init"])
    for tree, rate in zip(params["stages"], params["rates"]):
        F = F + rate * tree_apply(tree, X)
    return F


def predict_gboost(params: dict, X) -> np.ndarray:
    return (sigmoid(gboost_logit(params, X)) > 0.5).astype(int)
