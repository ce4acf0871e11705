"""L2-regularized logistic regression by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from ..errors import NonBinaryLabels


def check_binary(y) -> np.ndarray:
    y = np.asarray(y)
    if not np.isin(y, (0, 1)).all():
        raise NonBinaryLabels("labels must be 0 (normal) or 1 (stress)")
    return y.astype(float)


def standardizer(X: np.ndarray, enabled: bool = True) -> tuple[np.ndarray, np.ndarray]:
    if not enabled:
        return np.zeros(X.shape[1]), np.ones(X.shape[1])
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def log_loss_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def loss_and_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float):
    z = X @ w + b
    loss = log_loss_from_logits(z, y) + 0.5 * l2 * float(w @ w)
    r = (sigmoid(z) - y) / len(y)
    return loss, X.T @ r + l2 * w, float(r.sum())


def fit(X, y, lr: float = 0.1, epochs: int = 500, l2: float = 1e-3, standardize: bool = False) -> dict:
    X = np.asarray(X, dtype=float)
    y = check_binary(y)
    mean, scale = standardizer(X, standardize)
    Z = (X - mean) / scale
    w = np.zeros(X.shape[1])
    b = 0.0
    loss, gw, gb = loss_and_grad(w, b, Z, y, l2)
    history = [loss]
    step = lr
    for _ in range(epochs):
        while True:
            w_new, b_new = w - step * gw, b - step * gb
            new_loss, new_gw, new_gb = loss_and_grad(w_new, b_new, Z, y, l2)
            if new_loss <= loss or step < 1e-12:
                break
            step /= 2
        if new_loss > loss:
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
        history.append(loss)
    return {"w": w.tolist(), "b": b, "mean": mean.tolist(), "scale": scale.tolist(), "loss_history": history}


def decision(params: dict, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Z = (X - np.array(params["mean"])) / np.array(params["scale"])
    return Z @ np.array(params["w"]) + params["b"]


def predict(params: dict, X) -> np.ndarray:
    return (decision(params, X) > 0).astype(int)
