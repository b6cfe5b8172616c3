"""Embedding bundle storage: binary blobs, manifest, ingest, task views.

On-disk layout is a directory holding ``manifest.json`` plus one blob per
matrix. A blob is::

    bytes 0-3   magic b"CBEM"
    bytes 4-7   format version, uint32 little-endian (1 = float32, 2 = float64)
    bytes 8-11  rows, uint32 little-endian
    bytes 12-15 cols, uint32 little-endian
    payload     rows*cols IEEE-754 floats, little-endian, row-major

Version 1 (float32) is the interchange format for embedding bundles;
version 2 (float64) exists so checkpoints can round-trip trained weights
losslessly. Everything here is bit-exact: save followed by ingest returns
the same bytes.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import ConsistencyError, FormatError
from .validation import check_task_plan

MAGIC = b"CBEM"
BLOB_F32 = 1
BLOB_F64 = 2
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

# Rows already unit within this tolerance are left untouched by ingest, so
# normalize -> save -> ingest is a bitwise fixed point despite the float32 cast.
_NORM_SKIP_TOL = 1e-6

_REQUIRED_BLOBS = ("images", "labels", "split", "class_name_embeddings", "concept_embeddings")
_MANIFEST_KEYS = {"format_version", "dim", "class_names", "concepts",
                  "concept_class_map", "task_plan", "blobs", "seed"}


def write_blob(path: Path | str, array: np.ndarray, *, float64: bool = False) -> None:
    """Serialize a 2-D array to the blob format above."""
    a = np.asarray(array, dtype=np.float64 if float64 else np.float32)
    if a.ndim != 2:
        raise ValueError(f"blob payload must be 2-D, got shape {a.shape}")
    version = BLOB_F64 if float64 else BLOB_F32
    dtype = "<f8" if float64 else "<f4"
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", version, a.shape[0], a.shape[1]))
        fh.write(np.ascontiguousarray(a, dtype=dtype).tobytes())


def read_blob(path: Path | str) -> np.ndarray:
    """Read a blob, returning float32 (v1) or float64 (v2) with native byte order."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read blob {path.name}: {exc}") from exc
    if len(raw) < 16:
        raise FormatError(f"blob {path.name} is truncated (no header)")
    if raw[:4] != MAGIC:
        raise FormatError(f"blob {path.name} has bad magic {raw[:4]!r}")
    version, rows, cols = struct.unpack("<III", raw[4:16])
    if version not in (BLOB_F32, BLOB_F64):
        raise FormatError(f"blob {path.name} has unsupported format version {version}")
    itemsize = 4 if version == BLOB_F32 else 8
    expected = 16 + rows * cols * itemsize
    if len(raw) < expected:
        raise FormatError(f"blob {path.name} is truncated: {len(raw)} bytes, expected {expected}")
    if len(raw) > expected:
        raise FormatError(f"blob {path.name} has {len(raw) - expected} bytes of trailing data")
    dtype = "<f4" if version == BLOB_F32 else "<f8"
    data = np.frombuffer(raw, dtype=dtype, count=rows * cols, offset=16)
    return data.reshape(rows, cols).astype(data.dtype.newbyteorder("="), copy=True)


@dataclass(frozen=True)
class EmbeddingBundle:
    """In-memory view of one dataset: embeddings, labels, concepts, task plan.

    Embedding matrices are float32 with unit-norm rows (the storage
    precision); compute paths upcast to float64 at their boundary.
    ``split`` is True for test rows. ``seed`` records the generator seed for
    synthetic bundles and is None for ingested real data without one.
    """

    dim: int
    images: np.ndarray
    labels: np.ndarray
    split: np.ndarray
    class_names: list[str]
    class_name_embeddings: np.ndarray
    concepts: list[str]
    concept_embeddings: np.ndarray
    concept_class_map: np.ndarray
    task_plan: list[list[int]]
    seed: int | None = None

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_samples(self) -> int:
        return int(self.images.shape[0])

    def with_task_plan(self, plan) -> "EmbeddingBundle":
        """Return a copy with a validated replacement task plan."""
        try:
            checked = check_task_plan(plan, self.n_classes)
        except ValueError as exc:
            raise ConsistencyError(f"task plan override invalid: {exc}") from exc
        return replace(self, task_plan=checked)


@dataclass(frozen=True)
class TaskView:
    """Float64 slices of a bundle for one task of the incremental sequence.

    ``train_*`` covers only the task's own classes; ``test_*`` is cumulative
    over every class seen so far. Concept arrays hold the task's candidate
    pool with global indices back into the bundle.
    """

    task: int
    class_ids: list[int]
    seen_class_ids: list[int]
    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    concept_ids: np.ndarray
    concept_strings: list[str]
    concept_embeddings: np.ndarray


def _normalize_rows(raw: np.ndarray, name: str) -> np.ndarray:
    """Return float32 rows with unit L2 norm, renormalizing where needed."""
    work = raw.astype(np.float64)
    if not np.all(np.isfinite(work)):
        raise ConsistencyError(f"{name} contains non-finite values")
    norms = np.linalg.norm(work, axis=1)
    zero = np.where(norms == 0.0)[0]
    if zero.size:
        raise ConsistencyError(f"{name} row {zero[0]} has zero norm and cannot be normalized")
    out = raw.astype(np.float32, copy=True)
    fix = np.abs(norms - 1.0) > _NORM_SKIP_TOL
    if np.any(fix):
        out[fix] = (work[fix] / norms[fix, None]).astype(np.float32)
    out.setflags(write=False)
    return out


def _int_column(raw: np.ndarray, name: str) -> np.ndarray:
    """Decode an integer column stored as a rows x 1 float blob."""
    if raw.shape[1] != 1:
        raise ConsistencyError(f"{name} blob must have one column, got {raw.shape[1]}")
    col = raw[:, 0].astype(np.float64)
    rounded = np.rint(col)
    if not np.all(np.isfinite(col)) or np.any(np.abs(col - rounded) > 1e-6):
        raise ConsistencyError(f"{name} blob contains non-integer values")
    return rounded.astype(np.int64)


def _load_manifest(root: Path) -> dict:
    path = root / MANIFEST_NAME
    if not path.is_file():
        raise FormatError(f"missing {MANIFEST_NAME} in {root}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse {MANIFEST_NAME}: {exc}") from exc
    if not isinstance(manifest, dict):
        raise FormatError(f"{MANIFEST_NAME} must hold a JSON object")
    unknown = set(manifest) - _MANIFEST_KEYS
    if unknown:
        raise FormatError(f"{MANIFEST_NAME} has unknown keys: {sorted(unknown)}")
    missing = (_MANIFEST_KEYS - {"seed"}) - set(manifest)
    if missing:
        raise FormatError(f"{MANIFEST_NAME} is missing keys: {sorted(missing)}")
    if manifest["format_version"] != MANIFEST_VERSION:
        raise FormatError(f"unsupported manifest format_version {manifest['format_version']}")
    return manifest


def _read_declared_blob(root: Path, manifest: dict, name: str) -> np.ndarray:
    entry = manifest["blobs"].get(name)
    if not isinstance(entry, dict) or set(entry) != {"file", "rows", "cols"}:
        raise FormatError(f"manifest blob entry for {name!r} must have file/rows/cols")
    data = read_blob(root / str(entry["file"]))
    if data.shape != (int(entry["rows"]), int(entry["cols"])):
        raise ConsistencyError(
            f"blob {entry['file']} has shape {data.shape}, manifest declares "
            f"({entry['rows']}, {entry['cols']})")
    return data


def ingest_bundle(path: Path | str) -> EmbeddingBundle:
    """Load, validate, and normalize a bundle directory.

    Raises FormatError for malformed files and ConsistencyError when the
    pieces disagree (shape mismatches, label range, split coverage, task
    plan violations). Never mutates the input directory.
    """
    root = Path(path)
    if not root.is_dir():
        raise FormatError(f"bundle path {root} is not a directory")
    manifest = _load_manifest(root)

    dim = manifest["dim"]
    if not isinstance(dim, int) or dim <= 0:
        raise FormatError("manifest dim must be a positive integer")
    class_names = manifest["class_names"]
    concepts = manifest["concepts"]
    if not isinstance(class_names, list) or not all(isinstance(c, str) for c in class_names):
        raise FormatError("manifest class_names must be a list of strings")
    if not class_names:
        raise ConsistencyError("bundle declares no classes")
    if not isinstance(concepts, list) or not all(isinstance(c, str) for c in concepts):
        raise FormatError("manifest concepts must be a list of strings")
    if not isinstance(manifest["blobs"], dict):
        raise FormatError("manifest blobs must be an object")
    missing_blobs = set(_REQUIRED_BLOBS) - set(manifest["blobs"])
    if missing_blobs:
        raise FormatError(f"manifest is missing blob entries: {sorted(missing_blobs)}")
    seed = manifest.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise FormatError("manifest seed must be an integer when present")

    n_classes = len(class_names)
    images = _read_declared_blob(root, manifest, "images")
    labels = _int_column(_read_declared_blob(root, manifest, "labels"), "labels")
    split = _int_column(_read_declared_blob(root, manifest, "split"), "split")
    name_embs = _read_declared_blob(root, manifest, "class_name_embeddings")
    concept_embs = _read_declared_blob(root, manifest, "concept_embeddings")

    if images.shape[1] != dim:
        raise ConsistencyError(f"images have {images.shape[1]} columns, manifest dim is {dim}")
    if name_embs.shape != (n_classes, dim):
        raise ConsistencyError(
            f"class_name_embeddings shape {name_embs.shape} does not match "
            f"({n_classes}, {dim})")
    if concept_embs.shape != (len(concepts), dim):
        raise ConsistencyError(
            f"concept_embeddings shape {concept_embs.shape} does not match "
            f"({len(concepts)}, {dim})")
    n = images.shape[0]
    if labels.shape[0] != n or split.shape[0] != n:
        raise ConsistencyError("labels/split row counts do not match images")
    if n == 0:
        raise ConsistencyError("bundle has no samples")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ConsistencyError("labels reference classes outside the declared class set")
    if not np.all((split == 0) | (split == 1)):
        raise ConsistencyError("split flags must be 0 (train) or 1 (test)")

    cmap = np.asarray(manifest["concept_class_map"])
    if cmap.shape != (len(concepts),) or (cmap.size and not np.issubdtype(cmap.dtype, np.integer)):
        raise FormatError("concept_class_map must list one integer class per concept")
    cmap = cmap.astype(np.int64)
    if cmap.size and (cmap.min() < 0 or cmap.max() >= n_classes):
        raise ConsistencyError("concept_class_map references unknown classes")

    try:
        plan = check_task_plan(manifest["task_plan"], n_classes)
    except ValueError as exc:
        raise ConsistencyError(f"invalid task plan: {exc}") from exc

    is_test = split.astype(bool)
    for c in range(n_classes):
        of_class = labels == c
        if not np.any(of_class & ~is_test):
            raise ConsistencyError(f"class {c} has no training samples")
        if not np.any(of_class & is_test):
            raise ConsistencyError(f"class {c} has no test samples")
        if not np.any(cmap == c):
            raise ConsistencyError(f"class {c} has no concepts")

    labels.setflags(write=False)
    cmap.setflags(write=False)
    is_test.setflags(write=False)
    return EmbeddingBundle(
        dim=dim,
        images=_normalize_rows(images, "images"),
        labels=labels,
        split=is_test,
        class_names=list(class_names),
        class_name_embeddings=_normalize_rows(name_embs, "class_name_embeddings"),
        concepts=list(concepts),
        concept_embeddings=_normalize_rows(concept_embs, "concept_embeddings"),
        concept_class_map=cmap,
        task_plan=plan,
        seed=seed,
    )


def save_bundle(bundle: EmbeddingBundle, path: Path | str) -> Path:
    """Write a bundle to a directory in the interchange format."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    blobs = {
        "images": bundle.images,
        "labels": bundle.labels.astype(np.float32)[:, None],
        "split": bundle.split.astype(np.float32)[:, None],
        "class_name_embeddings": bundle.class_name_embeddings,
        "concept_embeddings": bundle.concept_embeddings,
    }
    table = {}
    for name, data in blobs.items():
        fname = f"{name}.cbem"
        write_blob(root / fname, data)
        table[name] = {"file": fname, "rows": int(data.shape[0]), "cols": int(data.shape[1])}

    manifest = {
        "format_version": MANIFEST_VERSION,
        "dim": bundle.dim,
        "class_names": bundle.class_names,
        "concepts": bundle.concepts,
        "concept_class_map": [int(c) for c in bundle.concept_class_map],
        "task_plan": bundle.task_plan,
        "blobs": table,
    }
    if bundle.seed is not None:
        manifest["seed"] = int(bundle.seed)
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (root / MANIFEST_NAME).write_text(text, encoding="utf-8")
    return root


def task_view(bundle: EmbeddingBundle, task: int) -> TaskView:
    """Slice a bundle for 1-based task index `task`.

    Train rows come from the task's own classes only; test rows accumulate
    over every task up to and including this one.
    """
    n_tasks = len(bundle.task_plan)
    if not isinstance(task, (int, np.integer)) or not 1 <= task <= n_tasks:
        raise IndexError(f"task must lie in 1..{n_tasks}, got {task}")

    class_ids = list(bundle.task_plan[task - 1])
    seen: list[int] = [c for t in bundle.task_plan[:task] for c in t]

    train_mask = np.isin(bundle.labels, class_ids) & ~bundle.split
    test_mask = np.isin(bundle.labels, seen) & bundle.split
    pool_mask = np.isin(bundle.concept_class_map, class_ids)
    concept_ids = np.where(pool_mask)[0].astype(np.int64)

    return TaskView(
        task=int(task),
        class_ids=class_ids,
        seen_class_ids=seen,
        train_features=bundle.images[train_mask].astype(np.float64),
        train_labels=bundle.labels[train_mask].copy(),
        test_features=bundle.images[test_mask].astype(np.float64),
        test_labels=bundle.labels[test_mask].copy(),
        concept_ids=concept_ids,
        concept_strings=[bundle.concepts[i] for i in concept_ids],
        concept_embeddings=bundle.concept_embeddings[concept_ids].astype(np.float64),
    )
