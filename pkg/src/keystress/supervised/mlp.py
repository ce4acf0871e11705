"""Multi-layer perceptron: tanh hidden layers, sigmoid output, log-loss,
full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidConfig
from .linear import check_binary, log_loss_from_logits, sigmoid, standardizer


def init_layers(sizes: list[int], rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        layers.append((rng.uniform(-bound, bound, (fan_in, fan_out)), np.zeros(fan_out)))
    return layers


def forward(layers, X):
    acts = [X]
    h = X
    for W, b in layers[:-1]:
        h = np.tanh(h @ W + b)
        acts.append(h)
    W, b = layers[-1]
    return acts, (h @ W + b).ravel()


def loss_and_grad(layers, X, y):
    acts, z = forward(layers, X)
    loss = log_loss_from_logits(z, y)
    delta = ((sigmoid(z) - y) / len(y))[:, None]
    grads = []
    for li in range(len(layers) - 1, -1, -1):
        W, _ = layers[li]
        a = acts[li]
        grads.append((a.T @ delta, delta.sum(axis=0)))
        if li:
            delta = (delta @ W.T) * (1 - a * a)
    return loss, grads[::-1]


def fit(X, y, hidden_sizes=(16,), lr: float = 0.05, epochs: int = 1000, seed: int = 0,
        standardize: bool = False) -> dict:
    hidden_sizes = list(hidden_sizes)
    if not hidden_sizes or min(hidden_sizes) < 1:
        raise InvalidConfig("every hidden layer needs at least one unit")
    X = np.asarray(X, dtype=float)
    y = check_binary(y)
    mean, scale = standardizer(X, standardize)
    Z = (X - mean) / scale
    rng = np.random.default_rng(seed)
    layers = init_layers([X.shape[1], *hidden_sizes, 1], rng)
    history = []
    for _ in range(epochs):
        loss, grads = loss_and_grad(layers, Z, y)
        history.append(loss)
        layers = [(W - lr * gW, b - lr * gb) for (W, b), (gW, gb) in zip(layers, grads)]
    history.append(loss_and_grad(layers, Z, y)[0])
    return {
        "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in layers],
        "mean": mean.tolist(),
        "scale": scale.tolist(),
        "final_loss": history[-1],
    }


def _layers(params):
    return [(np.array(l["W"], dtype=float), np.array(l["b"], dtype=float)) for l in params["layers"]]


def decision(params: dict, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Z = (X - np.array(params["mean"])) / np.array(params["scale"])
    return forward(_layers(params), Z)[1]


def predict(params: dict, X) -> np.ndarray:
    return (decision(params, X) > 0).astype(int)
