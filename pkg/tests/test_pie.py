"""Pruning-identified exemplars: flagging, agreement, characterization."""

import numpy as np
import pytest

from prunelab import pie
from prunelab.analysis import PredictionStore
from prunelab.pruning import SparsityGrid

GRID = SparsityGrid((0.0, 0.9))


def make_store(rng, r=3, n=100, c=6, sparse_probs=None):
    probs = np.empty((r, 2, n, c))
    probs[:, 0] = rng.random((r, n, c))
    probs[:, 1] = rng.random((r, n, c)) if sparse_probs is None else sparse_probs
    labels = (rng.random((n, c)) < 0.3).astype(np.int8)
    return PredictionStore(GRID, probs, labels, [f"c{j}" for j in range(c)], list(range(n)))


def test_flag_count_is_exact_floor():
    rng = np.random.default_rng(0)
    for n in (20, 100, 999, 1000):
        flags, _, _ = pie.flag_pies(rng.random(n), fraction=0.05)
        assert flags.sum() == int(np.floor(0.05 * n))


def test_flag_fraction_validation():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError):
        pie.flag_pies(rng.random(100), fraction=0.0)
    with pytest.raises(ValueError):
        pie.flag_pies(rng.random(100), fraction=1.0)
    with pytest.raises(ValueError, match="flags nothing"):
        pie.flag_pies(rng.random(10), fraction=0.05)


def test_flag_threshold_and_tie_break():
    agreement = np.array([0.5] * 40)
    agreement[7] = -0.2
    flags, threshold, uniform = pie.flag_pies(agreement, fraction=0.05)
    # floor(0.05*40)=2: the single low value plus the first tied 0.5 (index 0)
    assert flags[7] and flags[0] and flags.sum() == 2
    assert threshold == 0.5
    assert not uniform

    flags, _, uniform = pie.flag_pies(np.full(40, 0.9), fraction=0.05)
    assert uniform
    np.testing.assert_array_equal(np.nonzero(flags)[0], [0, 1])


def test_identical_predictions_give_full_agreement():
    rng = np.random.default_rng(2)
    sparse = rng.random((3, 100, 6))
    store = make_store(rng, sparse_probs=sparse)
    store.probs[:, 0] = sparse
    agreement, degenerate = pie.per_image_agreement(store)
    assert degenerate == 0
    np.testing.assert_allclose(agreement, 1.0, atol=1e-12)


def test_agreement_invariant_under_monotone_transform():
    # single run, so the population mean is the prediction itself and a
    # monotone transform of it preserves the per-image ranks
    store = make_store(np.random.default_rng(3), r=1)
    base, _ = pie.per_image_agreement(store)
    store.probs[:, 1] = store.probs[:, 1] ** 3  # monotone on [0,1]
    after, _ = pie.per_image_agreement(store)
    np.testing.assert_allclose(base, after, atol=1e-12)


def test_agreement_needs_three_classes():
    rng = np.random.default_rng(4)
    probs = rng.random((2, 2, 30, 2))
    labels = (rng.random((30, 2)) < 0.5).astype(np.int8)
    store = PredictionStore(GRID, probs, labels, ["a", "b"], list(range(30)))
    with pytest.raises(ValueError, match="3 classes"):
        pie.per_image_agreement(store)


def test_degenerate_rows_counted_and_zeroed():
    rng = np.random.default_rng(5)
    store = make_store(rng)
    store.probs[:, 0, 4, :] = 0.5  # constant mean base vector for image 4
    agreement, degenerate = pie.per_image_agreement(store)
    assert degenerate == 1
    assert agreement[4] == 0.0


def test_characterize_hand_example():
    flags = np.array([True, True, False, False, False, False])
    labels = np.array(
        [
            [1, 1, 1, 1, 1],  # PIE, 5 diseases -> "4+"
            [1, 0, 0, 0, 0],  # PIE
            [1, 0, 0, 0, 0],
            [0, 1, 0, 0, 0],
            [0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0],
        ]
    )
    class_ratio, count_ratio, infinite = pie.characterize(flags, labels, list("abcde"))
    assert class_ratio["a"] == pytest.approx((2 / 2) / (1 / 4))
    assert class_ratio["c"] == float("inf")
    assert infinite == ["c", "d", "e"]
    assert count_ratio["0"] == pytest.approx(0.0)
    assert count_ratio["1"] == pytest.approx(0.5 / 0.5)
    assert count_ratio["4+"] == float("inf")


def test_characterize_needs_both_groups():
    labels = np.zeros((4, 3), dtype=int)
    with pytest.raises(ValueError):
        pie.characterize(np.ones(4, dtype=bool), labels, list("abc"))
    with pytest.raises(ValueError):
        pie.characterize(np.zeros(4, dtype=bool), labels, list("abc"))


def test_build_report_end_to_end():
    rng = np.random.default_rng(6)
    store = make_store(rng, n=200)
    report = pie.build_report(store, k_base=0.0, k_sparse=0.9, fraction=0.05)
    assert report.pie_flags.sum() == 10
    assert report.agreement.shape == (200,)
    assert -1.0 <= report.threshold_rho <= 1.0
    assert set(report.count_ratio) == {"0", "1", "2", "3", "4+"}
    assert set(report.class_ratio) == {f"c{j}" for j in range(6)}
    assert report.distinct_agreement_values > 1


def test_mean_predictions_selects_grid_point():
    rng = np.random.default_rng(7)
    store = make_store(rng)
    np.testing.assert_allclose(
        pie.mean_predictions(store, 0.9), store.probs[:, 1].mean(axis=0), atol=0
    )
    with pytest.raises(KeyError):
        pie.mean_predictions(store, 0.5)
