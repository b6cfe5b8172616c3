from __future__ import annotations

import numpy as np
import pytest

from incbm.prototypes import (PrototypeEntry, PrototypeStore, extract_prototypes,
                              generate_pseudo_features, semantic_match)


def test_extract_recovers_exact_class_means() -> None:
    rng = np.random.default_rng(0)
    a = rng.standard_normal((7, 5))
    b = rng.standard_normal((3, 5))
    features = np.vstack([a, b])
    labels = np.array([0] * 7 + [4] * 3)
    entries = extract_prototypes(features, labels, task=2)
    assert [e.class_id for e in entries] == [0, 4]
    np.testing.assert_allclose(entries[0].vector, a.mean(axis=0), atol=1e-15)
    np.testing.assert_allclose(entries[1].vector, b.mean(axis=0), atol=1e-15)
    assert [e.count for e in entries] == [7, 3]
    assert all(e.source_task == 2 for e in entries)


def test_singleton_class_prototype_is_the_sample_itself() -> None:
    x = np.array([[0.3, -0.4, 0.5]])
    entries = extract_prototypes(x, np.array([9]), task=1)
    assert entries[0].count == 1
    np.testing.assert_array_equal(entries[0].vector, x[0])


def test_store_rejects_duplicate_classes() -> None:
    store = PrototypeStore()
    store.add(PrototypeEntry(3, np.ones(2), 1, 5))
    with pytest.raises(ValueError, match="already"):
        store.add(PrototypeEntry(3, np.zeros(2), 2, 5))
    assert store.get(3).count == 5
    assert 3 in store and 4 not in store


def test_semantic_match_picks_the_highest_cosine() -> None:
    rng = np.random.default_rng(1)
    text = np.array([1.0, 0.0, 0.0])
    candidates = [
        PrototypeEntry(10, np.array([0.0, 1.0, 0.0]), 1, 4),
        PrototypeEntry(11, np.array([0.9, 0.1, 0.0]), 1, 4),
        PrototypeEntry(12, np.array([-1.0, 0.0, 0.0]), 1, 4),
    ]
    assert semantic_match(text, candidates) == 11
    # Loop-oracle cross-check on random draws.
    for _ in range(20):
        text = rng.standard_normal(4)
        cands = [PrototypeEntry(i, rng.standard_normal(4), 1, 1) for i in range(5)]
        best = max(range(5), key=lambda i: (
            float(text @ cands[i].vector /
                  (np.linalg.norm(text) * np.linalg.norm(cands[i].vector))), -i))
        assert semantic_match(text, cands) == best


def test_semantic_match_tie_resolves_to_lowest_class_id() -> None:
    text = np.array([1.0, 0.0])
    same = np.array([1.0, 0.0])
    candidates = [
        PrototypeEntry(8, same.copy(), 1, 2),
        PrototypeEntry(5, same.copy(), 1, 2),
    ]
    assert semantic_match(text, candidates) == 5


def test_semantic_match_is_scale_invariant() -> None:
    text = np.array([0.5, 0.5, 0.0])
    base = [
        PrototypeEntry(0, np.array([1.0, 0.0, 0.0]), 1, 1),
        PrototypeEntry(1, np.array([0.4, 0.6, 0.0]), 1, 1),
    ]
    scaled = [PrototypeEntry(e.class_id, 7.5 * e.vector, 1, 1) for e in base]
    assert semantic_match(text, base) == semantic_match(text, scaled)


def test_pseudo_features_worked_example() -> None:
    pseudo = generate_pseudo_features(
        prototype=np.array([1.0, 0.0]),
        donor_features=np.array([[0.0, 2.0], [0.0, 0.0]]),
        donor_prototype=np.array([0.0, 1.0]),
    )
    np.testing.assert_allclose(pseudo, [[1.0, 1.0], [1.0, -1.0]])
    np.testing.assert_allclose(pseudo.mean(axis=0), [1.0, 0.0], atol=1e-15)


def test_pseudo_features_recover_the_old_prototype_mean() -> None:
    rng = np.random.default_rng(2)
    for _ in range(10):
        d = int(rng.integers(3, 9))
        donors = rng.standard_normal((int(rng.integers(2, 40)), d))
        p_old = rng.standard_normal(d)
        pseudo = generate_pseudo_features(p_old, donors, donors.mean(axis=0))
        assert pseudo.shape == donors.shape
        assert np.max(np.abs(pseudo.mean(axis=0) - p_old)) < 1e-10


def test_pseudo_features_are_not_renormalized() -> None:
    donors = np.array([[3.0, 0.0], [0.0, 3.0]])
    pseudo = generate_pseudo_features(np.array([2.0, 2.0]), donors, donors.mean(axis=0))
    norms = np.linalg.norm(pseudo, axis=1)
    assert np.all(np.abs(norms - 1.0) > 0.1)


def test_empty_donor_cloud_is_rejected() -> None:
    with pytest.raises(ValueError):
        generate_pseudo_features(np.ones(2), np.zeros((0, 2)), np.ones(2))


def test_match_with_no_candidates_is_rejected() -> None:
    with pytest.raises(ValueError):
        semantic_match(np.ones(2), [])
