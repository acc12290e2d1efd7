"""Term-frequency quantization: each vector dimension is a virtual concept
word; the softmax of a feature vector gives word probabilities, and the top-S
bins select the words the vector is linked to."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def softmax(x) -> np.ndarray:
    """Term-frequency vector of x: probs[i] = e^{x_i} / sum_j e^{x_j}.

    Computed with max-subtraction so large activations do not overflow.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("expected a non-empty 1-d vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("softmax input must be finite")
    e = np.exp(x - x.max())
    return e / e.sum()


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax of an (N, D) matrix."""
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def top_words(tf: np.ndarray, count: int) -> list[tuple[int, float]]:
    """The `count` largest bins of a term-frequency vector, descending;
    ties broken by smaller word id."""
    tf = np.asarray(tf)
    if not 1 <= count <= tf.size:
        raise ValueError(f"count must be in [1, {tf.size}], got {count}")
    # stable sort on negated probs keeps smaller ids first among ties
    order = np.argsort(-tf, kind="stable")[:count]
    return [(int(i), float(tf[i])) for i in order]


def top_words_rows(tf: np.ndarray, count: int) -> np.ndarray:
    """Row-wise word ids of the top-`count` bins, shape (N, count)."""
    if not 1 <= count <= tf.shape[1]:
        raise ValueError(f"count must be in [1, {tf.shape[1]}], got {count}")
    return np.argsort(-tf, axis=1, kind="stable")[:, :count]


@dataclass
class VirtualWordBank:
    """Random vectors standing in for the D virtual words; regenerated
    deterministically from (dim, seed), so only those two are persisted."""

    dim: int
    seed: int
    word_vectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        rng = np.random.default_rng(self.seed)
        self.word_vectors = rng.standard_normal((self.dim, self.dim))


def make_virtual_words(dim: int, seed: int) -> VirtualWordBank:
    return VirtualWordBank(dim=dim, seed=seed)
