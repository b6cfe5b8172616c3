from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import tiny_spec
from incbm import TrainConfig, load_checkpoint, make_synthetic_bundle, run_sequence
from incbm.exceptions import ConsistencyError, FormatError


@pytest.fixture(scope="module")
def saved_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    bundle = make_synthetic_bundle(tiny_spec())
    run = run_sequence(bundle, TrainConfig(epochs=4, seed=5), out_dir=out)
    return bundle, run, out


def test_checkpoint_round_trip_is_lossless(saved_run) -> None:
    _, run, _ = saved_run
    ckpt = load_checkpoint(run.checkpoint_paths[-1])
    assert ckpt.w_c.tobytes() == run.model.w_c.tobytes()
    assert ckpt.w_l.tobytes() == run.model.w_l.tobytes()
    assert ckpt.concept_embeddings.tobytes() == run.model.concept_embeddings.tobytes()
    assert ckpt.class_registry == run.model.class_registry
    assert [c.name for c in ckpt.concept_registry] == \
        [c.name for c in run.model.concept_registry]
    assert ckpt.task_bottlenecks == run.model.task_bottlenecks
    assert ckpt.config["seed"] == 5
    for cid in run.prototypes.class_ids:
        a = run.prototypes.get(cid)
        b = ckpt.prototypes.get(cid)
        assert a.vector.tobytes() == b.vector.tobytes()
        assert (a.source_task, a.count) == (b.source_task, b.count)


def test_restored_model_predicts_identically(saved_run) -> None:
    bundle, run, _ = saved_run
    model = load_checkpoint(run.checkpoint_paths[-1]).to_model()
    x = bundle.images[:20].astype(np.float64)
    assert model.logits(x).tobytes() == run.model.logits(x).tobytes()


def test_version_bump_is_rejected(saved_run) -> None:
    _, run, _ = saved_run
    path = run.checkpoint_paths[0] / "checkpoint.json"
    header = json.loads(path.read_text())
    header["format_version"] = 99
    path.write_text(json.dumps(header))
    try:
        with pytest.raises(FormatError, match="format_version 99"):
            load_checkpoint(run.checkpoint_paths[0])
    finally:
        header["format_version"] = 1
        path.write_text(json.dumps(header))


def test_truncated_weight_blob_is_rejected(saved_run) -> None:
    _, run, _ = saved_run
    blob = run.checkpoint_paths[0] / "w_c.cbem"
    original = blob.read_bytes()
    blob.write_bytes(original[:-4])
    try:
        with pytest.raises(FormatError, match="truncated"):
            load_checkpoint(run.checkpoint_paths[0])
    finally:
        blob.write_bytes(original)


def test_inconsistent_registry_is_rejected(saved_run) -> None:
    _, run, _ = saved_run
    path = run.checkpoint_paths[0] / "checkpoint.json"
    original = path.read_text()
    header = json.loads(original)
    header["class_registry"] = header["class_registry"] + [999]
    path.write_text(json.dumps(header))
    try:
        with pytest.raises(ConsistencyError, match="class registry"):
            load_checkpoint(run.checkpoint_paths[0])
    finally:
        path.write_text(original)


def test_checkpoint_write_is_deterministic(saved_run, tmp_path) -> None:
    from incbm.checkpoint import save_checkpoint, snapshot

    bundle, run, _ = saved_run
    ckpt = snapshot(run.model, run.prototypes, len(bundle.task_plan),
                    TrainConfig(epochs=4, seed=5), bundle.task_plan)
    a = save_checkpoint(ckpt, tmp_path / "a")
    b = save_checkpoint(ckpt, tmp_path / "b")
    for name in ("checkpoint.json", "w_c.cbem", "w_l.cbem",
                 "concept_embeddings.cbem", "prototype_vectors.cbem"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
