from __future__ import annotations

import json
import re

import numpy as np
import pytest

from conftest import tiny_spec
from incbm import (TrainConfig, build_report, concept_drift, load_checkpoint,
                   make_synthetic_bundle, render_svg, report_to_json, run_sequence)
from incbm.model import IncrementalModel
from oracles import topk_by_magnitude


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("explain_run")
    bundle = make_synthetic_bundle(tiny_spec())
    run = run_sequence(bundle, TrainConfig(epochs=5, seed=13), out_dir=out)
    return bundle, run


def test_entries_are_ranked_by_absolute_contribution(trained) -> None:
    bundle, run = trained
    x = bundle.images[0].astype(np.float64)
    class_id = run.model.class_registry[0]
    report = build_report(run.model, x, 0, class_id, top_k=4)

    contrib = run.model.contributions(x, class_id)
    expect_rows = topk_by_magnitude(contrib, 4)
    assert [e.concept_row for e in report.entries] == expect_rows
    values = [abs(e.value) for e in report.entries]
    assert values == sorted(values, reverse=True)


def test_entries_plus_residual_reconstruct_the_logit(trained) -> None:
    bundle, run = trained
    x = bundle.images[5].astype(np.float64)
    class_id = run.model.class_registry[1]
    report = build_report(run.model, x, 5, class_id, top_k=3)
    total = sum(e.value for e in report.entries) + report.residual
    assert total == pytest.approx(report.logit, abs=1e-9)
    full = build_report(run.model, x, 5, class_id, top_k=None)
    assert full.residual == pytest.approx(0.0, abs=1e-9)
    assert len(full.entries) == run.model.n_concepts


def test_negated_flags_track_the_sign(trained) -> None:
    bundle, run = trained
    report = build_report(run.model, bundle.images[3].astype(np.float64), 3,
                          run.model.class_registry[0], top_k=None)
    for entry in report.entries:
        assert entry.negated == (entry.value < 0.0)


def test_json_schema_and_determinism(trained) -> None:
    bundle, run = trained
    x = bundle.images[7].astype(np.float64)
    class_id = run.model.class_registry[2]
    a = report_to_json(build_report(run.model, x, 7, class_id))
    b = report_to_json(build_report(run.model, x, 7, class_id))
    assert a == b
    payload = json.loads(a)
    assert set(payload) == {"sample_id", "class", "entries", "residual", "logit"}
    for entry in payload["entries"]:
        assert set(entry) == {"concept", "task", "value", "negated"}
    assert payload["sample_id"] == 7
    assert payload["class"] == class_id


def test_svg_layout_positive_right_negative_left() -> None:
    model = IncrementalModel(2)
    model.expand(np.array([[1.0, 0.0], [0.0, 1.0]]), ["bright & shiny", "dark"],
                 [0, 1], 1, [0])
    model.w_l[0] = [2.0, -3.0]
    report = build_report(model, np.array([1.0, 1.0]), 0, 0, top_k=None)
    svg = render_svg(report)

    assert svg.startswith("<svg")
    assert "bright &amp; shiny" in svg  # labels are XML-escaped
    assert "NOT dark" in svg
    assert "residual" in svg

    bars = [(float(m.group(1)), float(m.group(2)))
            for m in re.finditer(r'<rect x="([-\d.]+)" y="\d+" width="([-\d.]+)"', svg)]
    assert len(bars) == 3  # two concepts plus the residual bar
    mid = 260 + 220 + 12
    pos, neg = bars[1], bars[0]  # entries sorted by |value|: -3 first, then +2
    assert pos[0] == pytest.approx(mid)  # positive bar starts on the axis
    assert neg[0] + neg[1] == pytest.approx(mid)  # negative bar ends on the axis


def test_drift_pairs_match_direct_recomputation(trained) -> None:
    bundle, run = trained
    model_1 = load_checkpoint(run.checkpoint_paths[0]).to_model()
    model_2 = load_checkpoint(run.checkpoint_paths[1]).to_model()
    x = bundle.images[2].astype(np.float64)
    class_id = run.model.class_registry[0]

    report_a = build_report(model_1, x, 2, class_id, top_k=None)
    report_b = build_report(model_2, x, 2, class_id, top_k=None)
    rows = concept_drift(report_a, report_b)

    con_a = model_1.contributions(x, class_id)
    con_b = model_2.contributions(x, class_id)
    paired = [r for r in rows if r.status == "paired"]
    new = [r for r in rows if r.status == "new"]
    assert len(paired) == model_1.n_concepts
    assert len(new) == model_2.n_concepts - model_1.n_concepts
    for row in paired:
        assert row.delta == pytest.approx(
            con_b[row.concept_row] - con_a[row.concept_row], abs=1e-12)
    for row in new:
        assert row.value_a is None and row.delta is None
        assert row.source_task == 2


def test_drift_marks_truncation_as_dropped(trained) -> None:
    bundle, run = trained
    x = bundle.images[2].astype(np.float64)
    class_id = run.model.class_registry[0]
    full = build_report(run.model, x, 2, class_id, top_k=None)
    short = build_report(run.model, x, 2, class_id, top_k=1)
    rows = concept_drift(full, short)
    statuses = {r.status for r in rows}
    assert "dropped" in statuses


def test_drift_requires_the_same_class(trained) -> None:
    bundle, run = trained
    x = bundle.images[0].astype(np.float64)
    a = build_report(run.model, x, 0, run.model.class_registry[0])
    b = build_report(run.model, x, 0, run.model.class_registry[1])
    with pytest.raises(ValueError):
        concept_drift(a, b)
