"""Input validation helpers shared across the package.

All numeric entry points funnel through these checks so that shape and
finiteness errors surface with consistent messages instead of cryptic
broadcasting failures deep inside a matmul.
"""
from __future__ import annotations

import numpy as np


def as_matrix(a, name: str, *, rows: int | None = None, cols: int | None = None,
              dtype=np.float64) -> np.ndarray:
    """Coerce to a 2-D float array, checking shape and finiteness."""
    out = np.asarray(a, dtype=dtype)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {out.shape}")
    if rows is not None and out.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got {out.shape[0]}")
    if cols is not None and out.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {out.shape[1]}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite values")
    return out


def as_vector(a, name: str, *, size: int | None = None, dtype=np.float64) -> np.ndarray:
    """Coerce to a 1-D float array, checking length and finiteness."""
    out = np.asarray(a, dtype=dtype)
    if out.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {out.shape}")
    if size is not None and out.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {out.shape[0]}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite values")
    return out


def check_targets(targets, n_rows: int, n_classes: int, name: str = "targets") -> np.ndarray:
    """Validate integer class targets against the logit width."""
    out = np.asarray(targets)
    if out.ndim != 1 or out.shape[0] != n_rows:
        raise ValueError(f"{name} must be 1-D with {n_rows} entries, got shape {out.shape}")
    if not np.issubdtype(out.dtype, np.integer):
        raise ValueError(f"{name} must be integers, got dtype {out.dtype}")
    if out.size and (out.min() < 0 or out.max() >= n_classes):
        raise IndexError(f"{name} out of range for {n_classes} classes")
    return out.astype(np.int64)


def check_fraction(x: float, name: str, *, low: float = 0.0, high: float = 1.0) -> float:
    """Validate a scalar in [low, high]."""
    x = float(x)
    if not (low <= x <= high) or not np.isfinite(x):
        raise ValueError(f"{name} must lie in [{low}, {high}], got {x}")
    return x


def check_unit_rows(a: np.ndarray, name: str, *, tol: float = 1e-4) -> None:
    """Assert every row of `a` has L2 norm 1 within `tol`."""
    norms = np.linalg.norm(np.asarray(a, dtype=np.float64), axis=1)
    bad = np.where(np.abs(norms - 1.0) > tol)[0]
    if bad.size:
        raise ValueError(
            f"{name} row {bad[0]} has norm {norms[bad[0]]:.6f}, expected 1 within {tol}")


def check_task_plan(plan, n_classes: int) -> list[list[int]]:
    """Validate a class partition: disjoint tasks covering all classes exactly once."""
    if not isinstance(plan, (list, tuple)) or not plan:
        raise ValueError("task plan must be a non-empty list of class lists")
    seen: set[int] = set()
    out: list[list[int]] = []
    for i, task in enumerate(plan):
        if not isinstance(task, (list, tuple)) or not task:
            raise ValueError(f"task {i + 1} of the plan must be a non-empty class list")
        ids = []
        for c in task:
            if isinstance(c, bool) or not isinstance(c, (int, np.integer)):
                raise ValueError(f"task {i + 1} contains a non-integer class id: {c!r}")
            c = int(c)
            if c < 0 or c >= n_classes:
                raise ValueError(f"task {i + 1} references unknown class {c}")
            if c in seen:
                raise ValueError(f"class {c} appears in more than one task")
            seen.add(c)
            ids.append(c)
        out.append(ids)
    if len(seen) != n_classes:
        missing = sorted(set(range(n_classes)) - seen)
        raise ValueError(f"task plan does not cover classes {missing}")
    return out
