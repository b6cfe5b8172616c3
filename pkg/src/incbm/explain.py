"""Per-prediction concept attributions: reports, drift tables, SVG bars.

A report decomposes one class logit into additive per-concept
contributions, keeps the strongest entries, and folds the remainder into a
residual so the parts always sum back to the logit. Serialization is
canonical: the same checkpoint and sample yield byte-identical output.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .model import IncrementalModel
from .validation import as_vector


@dataclass(frozen=True)
class ExplanationEntry:
    concept: str
    source_task: int
    value: float
    negated: bool
    concept_row: int


@dataclass(frozen=True)
class ExplanationReport:
    """Top contributions for one (sample, class) pair plus the residual."""

    sample_id: int
    class_id: int
    predicted_class: int
    logit: float
    entries: list[ExplanationEntry]
    residual: float
    top_k: int


def build_report(model: IncrementalModel, feature, sample_id: int, class_id: int,
                 top_k: int | None = 7) -> ExplanationReport:
    """Rank concept contributions to `class_id` by absolute value.

    `top_k=None` keeps every concept (residual 0 up to rounding). Ties in
    magnitude break toward the lower concept row so output order is stable.
    """
    x = as_vector(feature, "feature", size=model.dim)
    contrib = model.contributions(x, class_id)
    logit = float(contrib.sum())
    predicted = int(model.predict(x[None, :])[0])

    order = sorted(range(contrib.shape[0]), key=lambda i: (-abs(contrib[i]), i))
    keep = order if top_k is None else order[:max(int(top_k), 0)]
    entries = []
    for i in keep:
        info = model.concept_registry[i]
        entries.append(ExplanationEntry(
            concept=info.name,
            source_task=info.source_task,
            value=float(contrib[i]),
            negated=bool(contrib[i] < 0.0),
            concept_row=i,
        ))
    residual = logit - sum(e.value for e in entries)
    return ExplanationReport(
        sample_id=int(sample_id),
        class_id=int(class_id),
        predicted_class=predicted,
        logit=logit,
        entries=entries,
        residual=float(residual),
        top_k=len(keep),
    )


def report_to_json(report: ExplanationReport) -> str:
    """Canonical JSON with the fixed key set."""
    payload = {
        "sample_id": report.sample_id,
        "class": report.class_id,
        "entries": [
            {"concept": e.concept, "task": e.source_task, "value": e.value,
             "negated": e.negated}
            for e in report.entries],
        "residual": report.residual,
        "logit": report.logit,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class DriftRow:
    """One concept's contribution compared across two checkpoints."""

    concept_row: int
    concept: str
    source_task: int
    value_a: float | None
    value_b: float | None
    delta: float | None
    status: str  # "paired", "new" (absent at a), or "dropped" (truncated out of b)


def concept_drift(report_a: ExplanationReport, report_b: ExplanationReport
                  ) -> list[DriftRow]:
    """Align two reports of the same class by concept registry row.

    Registries only grow, so a concept row present at the earlier checkpoint
    exists at the later one. Rows first seen after checkpoint a are marked
    "new" with no delta; rows that fell out of a truncated later report are
    marked "dropped". Output is sorted by registry row.
    """
    if report_a.class_id != report_b.class_id:
        raise ValueError("drift reports must explain the same class")
    a = {e.concept_row: e for e in report_a.entries}
    b = {e.concept_row: e for e in report_b.entries}
    rows = []
    for row in sorted(set(a) | set(b)):
        ea, eb = a.get(row), b.get(row)
        ref = eb or ea
        if ea is not None and eb is not None:
            rows.append(DriftRow(row, ref.concept, ref.source_task,
                                 ea.value, eb.value, eb.value - ea.value, "paired"))
        elif eb is not None:
            rows.append(DriftRow(row, ref.concept, ref.source_task,
                                 None, eb.value, None, "new"))
        else:
            rows.append(DriftRow(row, ref.concept, ref.source_task,
                                 ea.value, None, None, "dropped"))
    return rows


_BAR_HEIGHT = 22
_BAR_GAP = 6
_LABEL_WIDTH = 260
_HALF_SPAN = 220
_PAD = 12


def render_svg(report: ExplanationReport) -> str:
    """Horizontal bar chart of the report: positive bars grow right,
    negative bars grow left, negated concepts carry a NOT prefix, and the
    residual gets its own bar at the bottom."""
    bars = [(("NOT " if e.negated else "") + e.concept, e.value) for e in report.entries]
    bars.append(("residual", report.residual))

    scale_max = max(abs(v) for _, v in bars)
    scale = _HALF_SPAN / scale_max if scale_max > 0.0 else 0.0
    width = _LABEL_WIDTH + 2 * _HALF_SPAN + 2 * _PAD
    height = len(bars) * (_BAR_HEIGHT + _BAR_GAP) + 2 * _PAD
    mid = _LABEL_WIDTH + _HALF_SPAN + _PAD

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'  <title>contributions to class {report.class_id} for sample '
        f'{report.sample_id}</title>',
        f'  <line x1="{mid}" y1="{_PAD}" x2="{mid}" y2="{height - _PAD}" '
        f'stroke="#999" stroke-width="1"/>',
    ]
    for i, (label, value) in enumerate(bars):
        y = _PAD + i * (_BAR_HEIGHT + _BAR_GAP)
        length = abs(value) * scale
        x = mid if value >= 0.0 else mid - length
        color = "#888888" if label == "residual" else ("#2f6fb2" if value >= 0.0 else "#b2452f")
        lines.append(
            f'  <rect x="{x:.2f}" y="{y}" width="{length:.2f}" height="{_BAR_HEIGHT}" '
            f'fill="{color}"/>')
        lines.append(
            f'  <text x="{_LABEL_WIDTH - 4 + _PAD}" y="{y + _BAR_HEIGHT - 7}" '
            f'text-anchor="end" font-size="12" font-family="sans-serif">'
            f'{escape(label)}</text>')
        tx = mid + length + 4 if value >= 0.0 else mid - length - 4
        anchor = "start" if value >= 0.0 else "end"
        lines.append(
            f'  <text x="{tx:.2f}" y="{y + _BAR_HEIGHT - 7}" text-anchor="{anchor}" '
            f'font-size="11" font-family="sans-serif">{value:.4f}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
