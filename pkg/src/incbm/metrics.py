"""Incremental-evaluation metrics and their canonical JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import IncrementalModel
from .validation import as_matrix


def task_accuracy(model: IncrementalModel, features, labels) -> float:
    """Micro accuracy (sample-weighted) of the model on one evaluation set."""
    x = as_matrix(features, "features", cols=model.dim)
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise ValueError("labels must be 1-D and match the feature rows")
    if y.shape[0] == 0:
        raise ValueError("cannot score an empty evaluation set")
    return float(np.mean(model.predict(x) == y))


def confusion_summary(model: IncrementalModel, features, labels) -> dict[str, dict[str, int]]:
    """Per-class sample and correct counts for one evaluation set."""
    x = as_matrix(features, "features", cols=model.dim)
    y = np.asarray(labels)
    pred = model.predict(x)
    out: dict[str, dict[str, int]] = {}
    for class_id in np.unique(y):
        mask = y == class_id
        out[str(int(class_id))] = {
            "n": int(mask.sum()),
            "correct": int(np.sum(pred[mask] == class_id)),
        }
    return out


def incremental_metrics(accuracies) -> tuple[float, float]:
    """Average incremental accuracy (mean over tasks) and last-task accuracy."""
    accs = np.asarray(accuracies, dtype=np.float64)
    if accs.ndim != 1 or accs.size == 0:
        raise ValueError("accuracies must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(accs)):
        raise ValueError("accuracies contain non-finite values")
    return float(accs.mean()), float(accs[-1])


@dataclass(frozen=True)
class MetricsReport:
    """Everything the run reports: per-task accuracy curve plus summaries."""

    task_accuracies: list[float]
    average_incremental_accuracy: float
    last_accuracy: float
    per_task_confusion: list[dict[str, dict[str, int]]]
    seed: int


def build_metrics_report(accuracies: list[float],
                         confusions: list[dict[str, dict[str, int]]],
                         seed: int) -> MetricsReport:
    avg, last = incremental_metrics(accuracies)
    return MetricsReport(
        task_accuracies=[float(a) for a in accuracies],
        average_incremental_accuracy=avg,
        last_accuracy=last,
        per_task_confusion=confusions,
        seed=int(seed),
    )


def metrics_to_json(report: MetricsReport) -> str:
    """Canonical serialization: key-sorted, indented, trailing newline."""
    payload = {
        "task_accuracies": report.task_accuracies,
        "average_incremental_accuracy": report.average_incremental_accuracy,
        "last_accuracy": report.last_accuracy,
        "n_tasks": len(report.task_accuracies),
        "per_task_confusion": report.per_task_confusion,
        "seed": report.seed,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def save_metrics(report: MetricsReport, path: Path | str) -> Path:
    path = Path(path)
    path.write_text(metrics_to_json(report), encoding="utf-8")
    return path
