"""Checkpoint persistence: lossless snapshots of model and prototype state.

A checkpoint is a directory holding ``checkpoint.json`` plus float64 blobs
in the same binary container as embedding bundles (format version 2, so the
trained weights round-trip bit-exactly). Loading validates the version and
every declared shape before reconstructing the model.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .bundle import read_blob, write_blob
from .exceptions import ConsistencyError, FormatError
from .model import ConceptInfo, IncrementalModel
from .prototypes import PrototypeEntry, PrototypeStore

CHECKPOINT_VERSION = 1
HEADER_NAME = "checkpoint.json"

_BLOB_FILES = {
    "w_c": "w_c.cbem",
    "w_l": "w_l.cbem",
    "concept_embeddings": "concept_embeddings.cbem",
    "prototype_vectors": "prototype_vectors.cbem",
}


@dataclass
class Checkpoint:
    """Snapshot after one task: weights, registries, prototypes, config echo."""

    task: int
    config: dict
    task_plan: list[list[int]]
    class_registry: list[int]
    concept_registry: list[ConceptInfo]
    task_bottlenecks: list[list[int]]
    w_c: np.ndarray
    w_l: np.ndarray
    concept_embeddings: np.ndarray
    prototypes: PrototypeStore

    def to_model(self) -> IncrementalModel:
        """Rebuild a ready-to-evaluate model from the snapshot."""
        model = IncrementalModel(self.w_c.shape[1])
        model.w_c = self.w_c.copy()
        model.w_l = self.w_l.copy()
        model.concept_embeddings = self.concept_embeddings.copy()
        model.concept_registry = list(self.concept_registry)
        model.class_registry = list(self.class_registry)
        model.task_bottlenecks = [list(b) for b in self.task_bottlenecks]
        model._row_of_class = {c: i for i, c in enumerate(self.class_registry)}
        return model


def snapshot(model: IncrementalModel, prototypes: PrototypeStore, task: int,
             config, task_plan: list[list[int]]) -> Checkpoint:
    cfg = asdict(config) if not isinstance(config, dict) else dict(config)
    return Checkpoint(
        task=int(task),
        config=cfg,
        task_plan=[list(t) for t in task_plan],
        class_registry=list(model.class_registry),
        concept_registry=list(model.concept_registry),
        task_bottlenecks=[list(b) for b in model.task_bottlenecks],
        w_c=model.w_c.copy(),
        w_l=model.w_l.copy(),
        concept_embeddings=model.concept_embeddings.copy(),
        prototypes=prototypes,
    )


def save_checkpoint(ckpt: Checkpoint, path: Path | str) -> Path:
    """Write a checkpoint directory. Deterministic: same state, same bytes."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    entries = ckpt.prototypes.entries()
    proto_vectors = (np.stack([e.vector for e in entries])
                     if entries else np.zeros((0, ckpt.w_c.shape[1])))

    blobs = {
        "w_c": ckpt.w_c,
        "w_l": ckpt.w_l,
        "concept_embeddings": ckpt.concept_embeddings,
        "prototype_vectors": proto_vectors,
    }
    table = {}
    for name, data in blobs.items():
        fname = _BLOB_FILES[name]
        write_blob(root / fname, data, float64=True)
        table[name] = {"file": fname, "rows": int(data.shape[0]), "cols": int(data.shape[1])}

    header = {
        "format_version": CHECKPOINT_VERSION,
        "task": ckpt.task,
        "config": ckpt.config,
        "task_plan": ckpt.task_plan,
        "class_registry": ckpt.class_registry,
        "concept_registry": [
            {"concept": c.name, "task": c.source_task, "concept_id": c.concept_id}
            for c in ckpt.concept_registry],
        "task_bottlenecks": ckpt.task_bottlenecks,
        "prototypes": {
            "class_ids": [e.class_id for e in entries],
            "source_tasks": [e.source_task for e in entries],
            "counts": [e.count for e in entries],
        },
        "blobs": table,
    }
    text = json.dumps(header, indent=2, sort_keys=True) + "\n"
    (root / HEADER_NAME).write_text(text, encoding="utf-8")
    return root


def load_checkpoint(path: Path | str) -> Checkpoint:
    """Read and validate a checkpoint directory."""
    root = Path(path)
    header_path = root / HEADER_NAME
    if not header_path.is_file():
        raise FormatError(f"missing {HEADER_NAME} in {root}")
    try:
        header = json.loads(header_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse {HEADER_NAME}: {exc}") from exc
    version = header.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise FormatError(
            f"checkpoint format_version {version} is not supported (expected "
            f"{CHECKPOINT_VERSION})")

    arrays = {}
    for name, entry in header["blobs"].items():
        data = read_blob(root / entry["file"])
        if data.dtype != np.float64:
            raise FormatError(f"checkpoint blob {entry['file']} must be float64")
        if data.shape != (entry["rows"], entry["cols"]):
            raise ConsistencyError(
                f"checkpoint blob {entry['file']} shape {data.shape} does not match header")
        arrays[name] = data

    w_c, w_l = arrays["w_c"], arrays["w_l"]
    concept_embeddings = arrays["concept_embeddings"]
    registry = [ConceptInfo(name=r["concept"], source_task=r["task"],
                            concept_id=r["concept_id"])
                for r in header["concept_registry"]]
    bottlenecks = [list(b) for b in header["task_bottlenecks"]]

    if w_c.shape != concept_embeddings.shape:
        raise ConsistencyError("w_c and concept_embeddings shapes disagree")
    if w_l.shape[1] != w_c.shape[0]:
        raise ConsistencyError("classifier column count does not match concept rows")
    if len(registry) != w_c.shape[0]:
        raise ConsistencyError("concept registry length does not match concept rows")
    if len(header["class_registry"]) != w_l.shape[0]:
        raise ConsistencyError("class registry length does not match classifier rows")
    if sum(len(b) for b in bottlenecks) != w_c.shape[0]:
        raise ConsistencyError("per-task bottleneck sizes do not sum to the concept rows")

    proto = header["prototypes"]
    vectors = arrays["prototype_vectors"]
    if len(proto["class_ids"]) != vectors.shape[0]:
        raise ConsistencyError("prototype metadata does not match the vector blob")
    store = PrototypeStore()
    for cid, task, count, vec in zip(proto["class_ids"], proto["source_tasks"],
                                     proto["counts"], vectors):
        store.add(PrototypeEntry(class_id=int(cid), vector=vec.copy(),
                                 source_task=int(task), count=int(count)))

    return Checkpoint(
        task=int(header["task"]),
        config=dict(header["config"]),
        task_plan=[list(t) for t in header["task_plan"]],
        class_registry=[int(c) for c in header["class_registry"]],
        concept_registry=registry,
        task_bottlenecks=bottlenecks,
        w_c=w_c,
        w_l=w_l,
        concept_embeddings=concept_embeddings,
        prototypes=store,
    )
