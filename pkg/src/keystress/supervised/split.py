from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import TooFewSamples


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.49
    val_frac: float = 0.21
    test_frac: float = 0.30
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if abs(self.train_frac + self.val_frac + self.test_frac - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


def split_dataset(labels, spec: SplitSpec = SplitSpec()) -> dict[str, np.ndarray]:
    """Row indices for train / val / test.

    Sizes are ``floor(frac * n)`` for train and val; the remainder is test.
    When stratified, each class is shuffled separately and the classes are
    interleaved by relative rank, so every prefix of the merged order keeps
    the class ratio to within one sample.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if n < 10:
        raise TooFewSamples(f"need at least 10 samples, got {n}")
    n_train = math.floor(spec.train_frac * n + 1e-9)
    n_val = math.floor(spec.val_frac * n + 1e-9)
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        keys = []
        for ci, c in enumerate(np.unique(labels)):
            idx = np.flatnonzero(labels == c)
            idx = idx[rng.permutation(len(idx))]
            keys += [((r + 0.5) / len(idx), ci, i) for r, i in enumerate(idx)]
        order = np.array([i for _, _, i in sorted(keys)])
    else:
        order = rng.permutation(n)
    return {
        "train": np.sort(order[:n_train]),
        "val": np.sort(order[n_train:n_train + n_val]),
        "test": np.sort(order[n_train + n_val:]),
    }
