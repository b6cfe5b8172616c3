"""Task-sequential training of the incremental concept-bottleneck model.

Each task runs the same pipeline: pick a concept subset, grow the model,
bank class prototypes, synthesize pseudo-features for every old class, then
optimize the concept layer and classifier jointly with Adam on

    total = ce + lambda_sim * alignment + sigma_sparse * elastic_net

Only the two weight matrices receive gradients; concept text embeddings and
prototypes stay frozen. One RNG stream seeded from the config drives every
random choice in the run, so identical configs give bit-identical results.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .bundle import EmbeddingBundle, task_view
from .checkpoint import save_checkpoint, snapshot
from .exceptions import DataError
from .losses import cosine_alignment, elastic_net_penalty, softmax_cross_entropy
from .metrics import (MetricsReport, build_metrics_report, confusion_summary,
                      save_metrics, task_accuracy)
from .model import IncrementalModel, clip_activations
from .optim import AdamState, adam_step
from .prototypes import (PrototypeStore, extract_prototypes,
                         generate_pseudo_features, semantic_match)
from .selector import BottleneckSelection, ConceptSelector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one incremental run."""

    concepts_per_task: int = 100
    epochs: int = 60
    batch_size: int = 64
    lr: float = 0.001
    lambda_sim: float = 1.0
    sigma_sparse: float = 0.001
    phi: float = 0.99
    selector_epochs: int = 30
    selector_lr: float = 0.01
    selector_batch_size: int = 64
    alpha_mahalanobis: float = 1.0
    seed: int = 1993
    augment: bool = True
    sparse_frobenius_squared: bool = True

    def validate(self) -> "TrainConfig":
        if self.concepts_per_task < 1:
            raise ValueError("concepts_per_task must be positive")
        for name in ("epochs", "batch_size", "selector_epochs", "selector_batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("lr", "selector_lr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("lambda_sim", "sigma_sparse", "alpha_mahalanobis"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.phi <= 1.0:
            raise ValueError("phi must lie in [0, 1]")
        return self


CONFIG_FIELDS = tuple(f.name for f in fields(TrainConfig))


@dataclass
class TraceRecord:
    """One loss-trace line. Epoch 0 is the pre-training evaluation."""

    task: int
    epoch: int
    l_ce: float
    l_sim: float
    l_sparse: float
    total: float

    def as_dict(self) -> dict:
        return {"task": self.task, "epoch": self.epoch, "l_ce": self.l_ce,
                "l_sim": self.l_sim, "l_sparse": self.l_sparse, "total": self.total}


@dataclass
class TrainingRun:
    """Everything a finished run hands back to the caller."""

    model: IncrementalModel
    prototypes: PrototypeStore
    accuracies: list[float] = field(default_factory=list)
    confusions: list[dict] = field(default_factory=list)
    traces: list[list[TraceRecord]] = field(default_factory=list)
    selections: list[dict] = field(default_factory=list)
    checkpoint_paths: list[Path] = field(default_factory=list)
    metrics: MetricsReport | None = None


def select_task_concepts(view, config: TrainConfig, rng: np.random.Generator
                         ) -> BottleneckSelection:
    """Concept selection for one task, honoring the per-task budget."""
    pool_size = view.concept_embeddings.shape[0]
    if pool_size <= config.concepts_per_task:
        if pool_size < config.concepts_per_task:
            logger.warning(
                "task %d pool has %d concepts, below the budget of %d; selecting all",
                view.task, pool_size, config.concepts_per_task)
        return BottleneckSelection(
            indices=np.arange(pool_size, dtype=np.int64),
            embeddings=view.concept_embeddings.copy())

    local = np.searchsorted(np.asarray(sorted(view.class_ids)), view.train_labels)
    # Local targets just need to be contiguous; sorted order is fine here.
    selector = ConceptSelector(
        n_concepts=config.concepts_per_task,
        epochs=config.selector_epochs,
        lr=config.selector_lr,
        batch_size=config.selector_batch_size,
        alpha=config.alpha_mahalanobis,
        seed=config.seed,
    )
    selector.fit(view.train_features, local, view.concept_embeddings, rng=rng)
    return selector.select()


def _pseudo_features(model: IncrementalModel, store: PrototypeStore, bundle: EmbeddingBundle,
                     view, new_entries) -> tuple[np.ndarray, np.ndarray]:
    """Pseudo-features for every class learned before this task.

    Each old class is matched to the new class whose prototype best aligns
    with the old class's name embedding; that class's feature cloud is then
    recentered onto the old prototype. Counts therefore mirror the donor
    class, and nothing here is renormalized.
    """
    blocks: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    donors = {e.class_id: view.train_features[view.train_labels == e.class_id]
              for e in new_entries}
    text = bundle.class_name_embeddings.astype(np.float64)
    for class_id in store.class_ids:
        entry = store.get(class_id)
        if entry.source_task >= view.task:
            continue
        matched = semantic_match(text[class_id], new_entries)
        pseudo = generate_pseudo_features(
            entry.vector, donors[matched], store.get(matched).vector)
        blocks.append(pseudo)
        labels.append(np.full(pseudo.shape[0], class_id, dtype=np.int64))
    if not blocks:
        return np.zeros((0, model.dim)), np.zeros(0, dtype=np.int64)
    return np.vstack(blocks), np.concatenate(labels)


def run_task(model: IncrementalModel, store: PrototypeStore, bundle: EmbeddingBundle,
             task: int, config: TrainConfig, rng: np.random.Generator
             ) -> tuple[list[TraceRecord], dict]:
    """Run one task end to end, mutating `model` and `store`."""
    view = task_view(bundle, task)
    if view.train_features.shape[0] == 0:
        raise DataError(f"task {task} has no training samples")
    if view.concept_embeddings.shape[0] == 0:
        raise DataError(f"task {task} has no candidate concepts")

    selection = select_task_concepts(view, config, rng)
    global_ids = view.concept_ids[selection.indices]
    names = [view.concept_strings[i] for i in selection.indices]
    model.expand(selection.embeddings, names, global_ids, task, view.class_ids)

    new_entries = extract_prototypes(view.train_features, view.train_labels, task)
    for entry in new_entries:
        store.add(entry)

    x = view.train_features
    y = view.train_labels
    if task > 1 and config.augment:
        pseudo_x, pseudo_y = _pseudo_features(model, store, bundle, view, new_entries)
        if pseudo_x.shape[0]:
            x = np.vstack([x, pseudo_x])
            y = np.concatenate([y, pseudo_y])

    targets = model.rows_for(y)
    e_clip = clip_activations(x, model.concept_embeddings)

    w_c_state = AdamState.for_param(model.w_c, lr=config.lr)
    w_l_state = AdamState.for_param(model.w_l, lr=config.lr)

    def term_losses(features, rows, reference):
        scores = features @ model.w_c.T
        ce, _ = softmax_cross_entropy(scores @ model.w_l.T, rows)
        sim, _ = cosine_alignment(scores, reference)
        sparse, _ = elastic_net_penalty(model.w_l, config.phi,
                                        squared=config.sparse_frobenius_squared)
        return ce, sim, sparse

    ce0, sim0, sp0 = term_losses(x, targets, e_clip)
    records = [TraceRecord(task, 0, ce0, sim0, sp0,
                           ce0 + config.lambda_sim * sim0 + config.sigma_sparse * sp0)]

    n = x.shape[0]
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        sums = np.zeros(3)
        for start in range(0, n, config.batch_size):
            take = perm[start:start + config.batch_size]
            xb = x[take]
            scores = xb @ model.w_c.T
            logits = scores @ model.w_l.T

            ce, g_ce = softmax_cross_entropy(logits, targets[take])
            sim, g_sim = cosine_alignment(scores, e_clip[take])
            sparse, g_sparse = elastic_net_penalty(
                model.w_l, config.phi, squared=config.sparse_frobenius_squared)

            d_w_l = g_ce.T @ scores + config.sigma_sparse * g_sparse
            d_scores = g_ce @ model.w_l + config.lambda_sim * g_sim
            d_w_c = d_scores.T @ xb
            adam_step(model.w_l, d_w_l, w_l_state)
            adam_step(model.w_c, d_w_c, w_c_state)
            sums += np.array([ce, sim, sparse]) * take.size
        ce_m, sim_m, sp_m = sums / n
        records.append(TraceRecord(
            task, epoch, float(ce_m), float(sim_m), float(sp_m),
            float(ce_m + config.lambda_sim * sim_m + config.sigma_sparse * sp_m)))

    selection_info = {
        "task": task,
        "concept_ids": [int(i) for i in global_ids],
        "concepts": names,
        "n_pool": int(view.concept_ids.shape[0]),
    }
    return records, selection_info


def run_sequence(bundle: EmbeddingBundle, config: TrainConfig,
                 out_dir: Path | str | None = None) -> TrainingRun:
    """Train over the bundle's full task plan.

    With `out_dir` set, persists one checkpoint per task plus `trace.jsonl`
    and `metrics.json`; all artifacts are deterministic functions of the
    bundle and config.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    model = IncrementalModel(bundle.dim)
    store = PrototypeStore()
    run = TrainingRun(model=model, prototypes=store)

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    n_tasks = len(bundle.task_plan)
    for task in range(1, n_tasks + 1):
        records, selection = run_task(model, store, bundle, task, config, rng)
        run.traces.append(records)
        run.selections.append(selection)

        view = task_view(bundle, task)
        acc = task_accuracy(model, view.test_features, view.test_labels)
        run.accuracies.append(acc)
        run.confusions.append(confusion_summary(model, view.test_features, view.test_labels))
        logger.info("task %d/%d: accuracy %.4f over %d classes",
                    task, n_tasks, acc, model.n_classes)

        if out is not None:
            ckpt = snapshot(model, store, task, config, bundle.task_plan)
            path = save_checkpoint(ckpt, out / f"task_{task:03d}")
            run.checkpoint_paths.append(path)

    run.metrics = build_metrics_report(run.accuracies, run.confusions, config.seed)
    if out is not None:
        save_metrics(run.metrics, out / "metrics.json")
        with open(out / "trace.jsonl", "w", encoding="utf-8") as fh:
            for records in run.traces:
                for record in records:
                    fh.write(_trace_line(record))
    return run


def _trace_line(record: TraceRecord) -> str:
    return json.dumps(record.as_dict(), sort_keys=True) + "\n"
