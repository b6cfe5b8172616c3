"""Seeded synthetic embedding benchmark.

Each class is a Gaussian cloud around a random unit mean, renormalized to
the sphere. Class-name embeddings are built to sit at a fixed cosine to
their class mean (mimicking how a text encoder names what the images show),
and concepts are noisy copies of the class means plus pure-noise
distractors. Small, separable, and entirely deterministic per seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import EmbeddingBundle


@dataclass(frozen=True)
class SynthSpec:
    """Generator knobs; defaults give the 5-task desk benchmark."""

    tasks: int = 5
    classes_per_task: int = 4
    dim: int = 32
    train_per_class: int = 100
    test_per_class: int = 50
    concepts_per_class: int = 10
    distractors_per_class: int = 2
    feature_noise: float = 0.2
    concept_noise: float = 0.3
    name_alignment: float = 0.8
    seed: int = 1993

    def validate(self) -> "SynthSpec":
        for name in ("tasks", "classes_per_task", "dim", "train_per_class",
                     "test_per_class", "concepts_per_class"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.distractors_per_class < 0:
            raise ValueError("distractors_per_class must be non-negative")
        if not 0.0 < self.name_alignment <= 1.0:
            raise ValueError("name_alignment must lie in (0, 1]")
        return self


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _unit_rows_f32(rows: np.ndarray) -> np.ndarray:
    out = (rows / np.linalg.norm(rows, axis=1, keepdims=True)).astype(np.float32)
    out.setflags(write=False)
    return out


def make_synthetic_bundle(spec: SynthSpec = SynthSpec()) -> EmbeddingBundle:
    """Generate an in-memory bundle; pair with save_bundle to hit disk."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n_classes = spec.tasks * spec.classes_per_task
    d = spec.dim

    means = np.stack([_unit(rng.standard_normal(d)) for _ in range(n_classes)])

    # Name embedding at cos = name_alignment to the class mean: mean component
    # plus an orthogonalized random direction scaled to close the unit norm.
    name_rows = []
    for c in range(n_classes):
        g = rng.standard_normal(d)
        ortho = g - (g @ means[c]) * means[c]
        onorm = np.linalg.norm(ortho)
        while onorm < 1e-9:  # essentially never; rerolls keep the stream seeded
            g = rng.standard_normal(d)
            ortho = g - (g @ means[c]) * means[c]
            onorm = np.linalg.norm(ortho)
        a = spec.name_alignment
        name_rows.append(a * means[c] + np.sqrt(1.0 - a * a) * (ortho / onorm))
    name_embs = np.stack(name_rows)

    features = []
    labels = []
    split = []
    for c in range(n_classes):
        n = spec.train_per_class + spec.test_per_class
        cloud = means[c] + spec.feature_noise * rng.standard_normal((n, d))
        features.append(cloud)
        labels.extend([c] * n)
        split.extend([0] * spec.train_per_class + [1] * spec.test_per_class)
    images = np.vstack(features)

    concept_rows = []
    concept_names = []
    concept_class = []
    for c in range(n_classes):
        for i in range(spec.concepts_per_class):
            concept_rows.append(means[c] + spec.concept_noise * rng.standard_normal(d))
            concept_names.append(f"class_{c:02d}/cue_{i:02d}")
            concept_class.append(c)
        for i in range(spec.distractors_per_class):
            concept_rows.append(rng.standard_normal(d))
            concept_names.append(f"class_{c:02d}/odd_{i:02d}")
            concept_class.append(c)
    concepts = np.stack(concept_rows)

    plan = [list(range(t * spec.classes_per_task, (t + 1) * spec.classes_per_task))
            for t in range(spec.tasks)]

    labels_arr = np.asarray(labels, dtype=np.int64)
    split_arr = np.asarray(split, dtype=bool)
    cmap = np.asarray(concept_class, dtype=np.int64)
    labels_arr.setflags(write=False)
    split_arr.setflags(write=False)
    cmap.setflags(write=False)

    return EmbeddingBundle(
        dim=d,
        images=_unit_rows_f32(images),
        labels=labels_arr,
        split=split_arr,
        class_names=[f"class_{c:02d}" for c in range(n_classes)],
        class_name_embeddings=_unit_rows_f32(name_embs),
        concepts=concept_names,
        concept_embeddings=_unit_rows_f32(concepts),
        concept_class_map=cmap,
        task_plan=plan,
        seed=spec.seed,
    )
