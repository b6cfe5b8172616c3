"""Class prototypes and semantic-guided pseudo-feature generation.

Prototypes are plain class means of unit-norm embeddings; they are not
renormalized, and neither are the pseudo-features built from them. Old
classes never keep raw samples: a pseudo-feature set for old class j is the
current task's feature cloud for a semantically matched new class h,
translated so its mean lands on j's stored prototype.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_matrix, as_vector


@dataclass
class PrototypeEntry:
    """One class prototype: mean vector, source task, contributing sample count."""

    class_id: int
    vector: np.ndarray
    source_task: int
    count: int


class PrototypeStore:
    """Insertion-ordered prototype registry keyed by class id."""

    def __init__(self) -> None:
        self._entries: dict[int, PrototypeEntry] = {}

    def add(self, entry: PrototypeEntry) -> None:
        if entry.class_id in self._entries:
            raise ValueError(f"class {entry.class_id} already has a prototype")
        self._entries[int(entry.class_id)] = entry

    def get(self, class_id: int) -> PrototypeEntry:
        try:
            return self._entries[int(class_id)]
        except KeyError:
            raise KeyError(f"no prototype stored for class {class_id}") from None

    def __contains__(self, class_id: int) -> bool:
        return int(class_id) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def class_ids(self) -> list[int]:
        return list(self._entries)

    def entries(self) -> list[PrototypeEntry]:
        return list(self._entries.values())


def extract_prototypes(features, labels, task: int) -> list[PrototypeEntry]:
    """Mean-pool features per class, in ascending class-id order."""
    x = as_matrix(features, "features")
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise ValueError("labels must be 1-D and match the feature rows")
    if x.shape[0] == 0:
        raise ValueError("cannot extract prototypes from an empty feature set")
    out = []
    for class_id in np.unique(y):
        rows = x[y == class_id]
        out.append(PrototypeEntry(
            class_id=int(class_id),
            vector=rows.mean(axis=0),
            source_task=int(task),
            count=int(rows.shape[0]),
        ))
    return out


def semantic_match(class_text_embedding, candidates: list[PrototypeEntry]) -> int:
    """Pick the candidate class whose prototype best aligns with a text embedding.

    Similarity is cosine; ties resolve to the lowest class id. Used to choose
    which new class donates its feature cloud to an old class.
    """
    if not candidates:
        raise ValueError("semantic_match needs at least one candidate prototype")
    text = as_vector(class_text_embedding, "class_text_embedding")
    tn = np.linalg.norm(text)
    if tn == 0.0:
        raise ValueError("class_text_embedding has zero norm")

    ordered = sorted(candidates, key=lambda e: e.class_id)
    best_id = ordered[0].class_id
    best = -np.inf
    for entry in ordered:
        pn = np.linalg.norm(entry.vector)
        cos = 0.0 if pn == 0.0 else float(text @ entry.vector / (tn * pn))
        if cos > best:
            best = cos
            best_id = entry.class_id
    return int(best_id)


def generate_pseudo_features(prototype, donor_features, donor_prototype) -> np.ndarray:
    """Translate a donor feature cloud onto an old prototype.

    Each output row is prototype + donor_row - donor_prototype, so the
    pseudo cloud keeps the donor's scatter while its mean recovers the old
    prototype exactly (up to float addition). Rows are not renormalized.
    """
    p_old = as_vector(prototype, "prototype")
    donors = as_matrix(donor_features, "donor_features", cols=p_old.shape[0])
    p_donor = as_vector(donor_prototype, "donor_prototype", size=p_old.shape[0])
    if donors.shape[0] == 0:
        raise ValueError("donor_features must be non-empty")
    return p_old + donors - p_donor
