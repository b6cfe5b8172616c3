"""Incrementally expanding concept-bottleneck model.

The model holds two trainable matrices: a concept layer ``w_c`` whose rows
live in embedding space, and a classifier ``w_l`` mapping concept scores to
class logits. Each task appends rows to both (new concepts, new classes);
existing blocks are never resized or reinitialized, which is what makes the
classifier's old weights carry over between tasks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_matrix, as_vector


@dataclass(frozen=True)
class ConceptInfo:
    """Registry row: concept string, the task that added it, its bundle index."""

    name: str
    source_task: int
    concept_id: int


def clip_activations(features, concept_embeddings) -> np.ndarray:
    """Dot products between feature rows and frozen concept-embedding rows.

    This is the alignment target: the activation pattern the concept layer
    is pulled toward during training.
    """
    x = as_matrix(features, "features")
    c = as_matrix(concept_embeddings, "concept_embeddings", cols=x.shape[1])
    return x @ c.T


class IncrementalModel:
    """Concept layer plus classifier, grown task by task."""

    def __init__(self, dim: int):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.w_c = np.zeros((0, self.dim))
        self.w_l = np.zeros((0, 0))
        self.concept_embeddings = np.zeros((0, self.dim))
        self.concept_registry: list[ConceptInfo] = []
        self.class_registry: list[int] = []
        self.task_bottlenecks: list[list[int]] = []
        self._row_of_class: dict[int, int] = {}

    @property
    def n_concepts(self) -> int:
        return self.w_c.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w_l.shape[0]

    def expand(self, concept_embeddings, concept_names: list[str], concept_ids,
               source_task: int, new_class_ids) -> None:
        """Register one task's concepts and classes.

        New concept-layer rows start at the concept text embeddings; new
        classifier rows and columns start at zero. The previously trained
        classifier block is preserved bit-identically.
        """
        embs = as_matrix(concept_embeddings, "concept_embeddings", cols=self.dim)
        ids = [int(i) for i in np.asarray(concept_ids).ravel()]
        if embs.shape[0] == 0:
            raise ValueError("expansion needs at least one concept")
        if len(concept_names) != embs.shape[0] or len(ids) != embs.shape[0]:
            raise ValueError("concept embeddings, names, and ids must align")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate concept registered within one task")
        classes = [int(c) for c in np.asarray(new_class_ids).ravel()]
        if not classes:
            raise ValueError("expansion needs at least one new class")
        if len(set(classes)) != len(classes):
            raise ValueError("duplicate class in expansion")
        already = [c for c in classes if c in self._row_of_class]
        if already:
            raise ValueError(f"class {already[0]} is already registered")

        k_old, n_old = self.n_concepts, self.n_classes
        self.w_c = np.vstack([self.w_c, embs.copy()])
        self.concept_embeddings = np.vstack([self.concept_embeddings, embs.copy()])

        grown = np.zeros((n_old + len(classes), k_old + embs.shape[0]))
        grown[:n_old, :k_old] = self.w_l
        self.w_l = grown

        for name, cid in zip(concept_names, ids):
            self.concept_registry.append(
                ConceptInfo(name=name, source_task=int(source_task), concept_id=cid))
        for c in classes:
            self._row_of_class[c] = len(self.class_registry)
            self.class_registry.append(c)
        self.task_bottlenecks.append(ids)

    def class_row(self, class_id: int) -> int:
        """Map a global class id to its classifier row."""
        try:
            return self._row_of_class[int(class_id)]
        except KeyError:
            raise KeyError(f"class {class_id} is not registered with the model") from None

    def rows_for(self, class_ids) -> np.ndarray:
        return np.asarray([self.class_row(c) for c in class_ids], dtype=np.int64)

    def concept_scores(self, features) -> np.ndarray:
        """Concept activations of the learned concept layer."""
        x = as_matrix(features, "features", cols=self.dim)
        self._check_nonempty()
        return x @ self.w_c.T

    def logits(self, features) -> np.ndarray:
        return self.concept_scores(features) @ self.w_l.T

    def predict(self, features) -> np.ndarray:
        """Argmax class ids; ties resolve to the lowest classifier row.

        A sigmoid over the logits is presentational only: it is monotone,
        so it can never change the argmax.
        """
        z = self.logits(features)
        rows = np.argmax(z, axis=1)
        registry = np.asarray(self.class_registry, dtype=np.int64)
        return registry[rows]

    def contributions(self, feature, class_id: int) -> np.ndarray:
        """Per-concept additive contributions to one class logit.

        contribution[i] = (x . w_c[i]) * w_l[row, i], so the contributions
        sum to the class logit exactly.
        """
        x = as_vector(feature, "feature", size=self.dim)
        self._check_nonempty()
        row = self.class_row(class_id)
        return (self.w_c @ x) * self.w_l[row]

    def _check_nonempty(self) -> None:
        if self.n_concepts == 0 or self.n_classes == 0:
            raise RuntimeError("model has no registered concepts or classes yet")
