"""Sklearn-style facade over the incremental training engine."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .bundle import EmbeddingBundle
from .trainer import TrainConfig, run_sequence
from .validation import as_matrix


class ContinualConceptClassifier(BaseEstimator, ClassifierMixin):
    """Class-incremental concept-bottleneck classifier over embeddings.

    `fit` consumes an EmbeddingBundle (features, labels, concepts, and the
    task plan travel together) and trains through the plan task by task;
    `predict` and `decision_function` then work on plain embedding matrices.
    Constructor arguments mirror TrainConfig so `get_params`/`set_params`
    round-trip the full training configuration.
    """

    def __init__(self, concepts_per_task: int = 100, epochs: int = 60,
                 batch_size: int = 64, lr: float = 0.001, lambda_sim: float = 1.0,
                 sigma_sparse: float = 0.001, phi: float = 0.99,
                 selector_epochs: int = 30, selector_lr: float = 0.01,
                 selector_batch_size: int = 64, alpha_mahalanobis: float = 1.0,
                 seed: int = 1993, augment: bool = True,
                 sparse_frobenius_squared: bool = True):
        self.concepts_per_task = concepts_per_task
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.lambda_sim = lambda_sim
        self.sigma_sparse = sigma_sparse
        self.phi = phi
        self.selector_epochs = selector_epochs
        self.selector_lr = selector_lr
        self.selector_batch_size = selector_batch_size
        self.alpha_mahalanobis = alpha_mahalanobis
        self.seed = seed
        self.augment = augment
        self.sparse_frobenius_squared = sparse_frobenius_squared

    def to_config(self) -> TrainConfig:
        return TrainConfig(**self.get_params()).validate()

    def fit(self, X: EmbeddingBundle, y=None) -> "ContinualConceptClassifier":
        """Train through the bundle's task plan. `y` is ignored (labels live in X)."""
        if not isinstance(X, EmbeddingBundle):
            raise TypeError("fit expects an EmbeddingBundle")
        run = run_sequence(X, self.to_config())
        self.run_ = run
        self.model_ = run.model
        self.prototypes_ = run.prototypes
        self.metrics_ = run.metrics
        self.classes_ = np.asarray(run.model.class_registry, dtype=np.int64)
        return self

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.logits(as_matrix(X, "X", cols=self.model_.dim))

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.predict(as_matrix(X, "X", cols=self.model_.dim))

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise RuntimeError("ContinualConceptClassifier is not fitted yet")
