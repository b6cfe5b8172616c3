from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from incbm import EmbeddingBundle, SynthSpec, make_synthetic_bundle
from incbm.bundle import write_blob


def tiny_spec(**overrides) -> SynthSpec:
    """A fast 2-task bundle used wherever the full benchmark would be overkill."""
    base = dict(tasks=2, classes_per_task=2, dim=16, train_per_class=30,
                test_per_class=10, concepts_per_class=4, distractors_per_class=1,
                seed=11)
    base.update(overrides)
    return SynthSpec(**base)


@pytest.fixture()
def tiny_bundle() -> EmbeddingBundle:
    return make_synthetic_bundle(tiny_spec())


@pytest.fixture(scope="session")
def desk_bundle() -> EmbeddingBundle:
    """The seeded desk-scale benchmark: 5 tasks x 4 classes, D=32, 100/50."""
    return make_synthetic_bundle(SynthSpec())


def write_raw_bundle(root: Path, *, images: np.ndarray, labels: np.ndarray,
                     split: np.ndarray, class_names: list[str],
                     name_embs: np.ndarray, concepts: list[str],
                     concept_embs: np.ndarray, concept_class_map: list[int],
                     task_plan: list[list[int]],
                     manifest_edit=None) -> Path:
    """Write a bundle directory by hand so tests can feed ingest raw input."""
    root.mkdir(parents=True, exist_ok=True)
    blobs = {
        "images": np.asarray(images, dtype=np.float32),
        "labels": np.asarray(labels, dtype=np.float32).reshape(-1, 1),
        "split": np.asarray(split, dtype=np.float32).reshape(-1, 1),
        "class_name_embeddings": np.asarray(name_embs, dtype=np.float32),
        "concept_embeddings": np.asarray(concept_embs, dtype=np.float32),
    }
    table = {}
    for name, data in blobs.items():
        fname = f"{name}.cbem"
        write_blob(root / fname, data)
        table[name] = {"file": fname, "rows": int(data.shape[0]), "cols": int(data.shape[1])}
    manifest = {
        "format_version": 1,
        "dim": int(blobs["images"].shape[1]),
        "class_names": class_names,
        "concepts": concepts,
        "concept_class_map": concept_class_map,
        "task_plan": task_plan,
        "blobs": table,
    }
    if manifest_edit is not None:
        manifest_edit(manifest)
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return root


def small_raw_bundle(root: Path, *, manifest_edit=None, images=None) -> Path:
    """Two classes, four samples, deliberately non-normalized embeddings."""
    rng = np.random.default_rng(3)
    if images is None:
        images = rng.standard_normal((4, 8)) * 0.5
    return write_raw_bundle(
        root,
        images=images,
        labels=[0, 0, 1, 1],
        split=[0, 1, 0, 1],
        class_names=["a", "b"],
        name_embs=rng.standard_normal((2, 8)),
        concepts=["a/one", "b/one"],
        concept_embs=rng.standard_normal((2, 8)),
        concept_class_map=[0, 1],
        task_plan=[[0], [1]],
        manifest_edit=manifest_edit,
    )
