"""Discriminative concept selection through a trained linear bottleneck.

A small two-layer linear model (features -> K bottleneck rows -> class
logits) is trained with cross-entropy plus a Mahalanobis pull that keeps the
bottleneck rows close to the distribution of the candidate concept
embeddings. After training, each bottleneck row claims its nearest
still-unclaimed concept, which yields the task's concept subset.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .losses import mahalanobis_penalty, softmax_cross_entropy
from .optim import AdamState, adam_step
from .validation import as_matrix

_SHRINKAGE = 1e-3


@dataclass
class SelectorWeights:
    """Trained bottleneck Q (K x D), class head, and the per-epoch CE trace."""

    q: np.ndarray
    head: np.ndarray
    n_concepts: int
    ce_history: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class BottleneckSelection:
    """Selected concepts for one task, indexed into the candidate pool."""

    indices: np.ndarray
    embeddings: np.ndarray


def pool_statistics(concept_embeddings) -> tuple[np.ndarray, np.ndarray]:
    """Mean and shrunk-precision of a concept pool.

    The covariance gets a ridge of 1e-3 * tr(Sigma)/D on the diagonal before
    inversion. A pool whose covariance has zero trace (a single concept, or
    identical ones) falls back to the identity precision, so degenerate pools
    are handled instead of crashing.
    """
    pool = as_matrix(concept_embeddings, "concept_embeddings")
    m, d = pool.shape
    if m == 0:
        raise ValueError("concept pool is empty")
    mean = pool.mean(axis=0)
    centered = pool - mean
    cov = centered.T @ centered / m
    trace = float(np.trace(cov))
    if trace == 0.0:
        return mean, np.eye(d)
    precision = np.linalg.inv(cov + _SHRINKAGE * (trace / d) * np.eye(d))
    return mean, precision


def match_concepts(q: np.ndarray, concept_embeddings: np.ndarray) -> np.ndarray:
    """Greedily assign each bottleneck row its nearest unclaimed concept.

    Rows are visited in order; each is unit-normalized (zero rows are left
    as-is) and takes the concept at minimal Euclidean distance among those
    not yet selected, ties going to the lowest concept index. Returns
    min(K, M) distinct pool indices in selection order.
    """
    rows = as_matrix(q, "q")
    pool = as_matrix(concept_embeddings, "concept_embeddings", cols=rows.shape[1])
    m = pool.shape[0]
    if m == 0:
        raise ValueError("concept pool is empty")

    taken = np.zeros(m, dtype=bool)
    picked: list[int] = []
    for row in rows:
        if taken.all():
            break
        norm = np.linalg.norm(row)
        unit = row / norm if norm > 0.0 else row
        dist = np.linalg.norm(pool - unit, axis=1)
        dist[taken] = np.inf
        idx = int(np.argmin(dist))  # argmin breaks ties at the lowest index
        taken[idx] = True
        picked.append(idx)
    return np.asarray(picked, dtype=np.int64)


class ConceptSelector(BaseEstimator):
    """Sklearn-style estimator wrapping bottleneck training plus matching.

    Parameters mirror the training config: `n_concepts` is the bottleneck
    budget K, `alpha` weighs the Mahalanobis pull toward the pool
    distribution, and `init_noise` is the stddev of the Gaussian jitter
    added to the pool rows that initialize Q.
    """

    def __init__(self, n_concepts: int = 100, epochs: int = 30, lr: float = 0.01,
                 batch_size: int = 64, alpha: float = 1.0, init_noise: float = 0.01,
                 seed: int = 1993):
        self.n_concepts = n_concepts
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.alpha = alpha
        self.init_noise = init_noise
        self.seed = seed

    def fit(self, X, y, concept_embeddings, rng: np.random.Generator | None = None
            ) -> "ConceptSelector":
        """Train Q and the class head on one task's features.

        `y` may use arbitrary integer class ids; they are encoded to local
        targets in sorted order. Passing `rng` threads an external stream
        through training (the continual trainer does this); otherwise a
        fresh generator is seeded from `self.seed` so fits are reproducible.
        """
        x = as_matrix(X, "X")
        n, d = x.shape
        if n == 0:
            raise ValueError("X must have at least one row")
        pool = as_matrix(concept_embeddings, "concept_embeddings", cols=d)
        m = pool.shape[0]
        if m == 0:
            raise ValueError("concept pool is empty")
        if self.n_concepts < 1:
            raise ValueError("n_concepts must be positive")
        labels = np.asarray(y)
        if labels.shape != (n,):
            raise ValueError("y must be 1-D and match the rows of X")
        classes, targets = np.unique(labels, return_inverse=True)
        targets = targets.astype(np.int64)

        if rng is None:
            rng = np.random.default_rng(self.seed)
        k = int(self.n_concepts)
        init_rows = rng.choice(m, size=k, replace=m < k)
        q = pool[init_rows] + self.init_noise * rng.standard_normal((k, d))
        head = 0.01 * rng.standard_normal((classes.size, k))

        mean, precision = pool_statistics(pool)
        q_state = AdamState.for_param(q, lr=self.lr)
        head_state = AdamState.for_param(head, lr=self.lr)

        history: list[float] = []
        for _ in range(int(self.epochs)):
            perm = rng.permutation(n)
            ce_sum = 0.0
            for start in range(0, n, int(self.batch_size)):
                take = perm[start:start + int(self.batch_size)]
                xb = x[take]
                mid = xb @ q.T
                logits = mid @ head.T
                ce, g = softmax_cross_entropy(logits, targets[take])
                _, maha_grad = mahalanobis_penalty(q, mean, precision)

                d_head = g.T @ mid
                d_mid = g @ head
                d_q = d_mid.T @ xb + self.alpha * maha_grad
                adam_step(head, d_head, head_state)
                adam_step(q, d_q, q_state)
                ce_sum += ce * take.size
            history.append(ce_sum / n)

        self.classes_ = classes
        self.pool_ = pool
        self.weights_ = SelectorWeights(q=q, head=head, n_concepts=k, ce_history=history)
        return self

    def predict(self, X) -> np.ndarray:
        """Class predictions from the trained bottleneck (used for sanity checks)."""
        w = self._fitted()
        x = as_matrix(X, "X", cols=w.q.shape[1])
        logits = (x @ w.q.T) @ w.head.T
        return self.classes_[np.argmax(logits, axis=1)]

    def select(self) -> BottleneckSelection:
        """Match the trained bottleneck rows against the fitted pool."""
        w = self._fitted()
        indices = match_concepts(w.q, self.pool_)
        return BottleneckSelection(indices=indices, embeddings=self.pool_[indices])

    def _fitted(self) -> SelectorWeights:
        if not hasattr(self, "weights_"):
            raise RuntimeError("ConceptSelector is not fitted yet; call fit first")
        return self.weights_
