import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mkfilter.data import FeatureColumn, LabeledDataset
from mkfilter.exceptions import InvalidDistanceMatrix, SingleClass
from mkfilter.mks import (
    ScreeningResult,
    SortedRows,
    mks_hat_directed,
    omega_hat,
    omega_hat_naive,
    omega_matrix,
    screen_all,
)
from mkfilter.simgen import SimulationConfig, build_distributional_dataset

from .helpers import line_matrix, random_instance


def test_separated_clusters():
    D = line_matrix([0, 0.1, 10, 10.1])
    y = [1, 1, -1, -1]
    assert mks_hat_directed(D, y, 1) == 1.0
    assert mks_hat_directed(D, y, -1) == 1.0
    assert omega_hat(D, y) == 2.0
    assert omega_hat_naive(D, y) == 2.0


def test_one_sample_per_class():
    assert omega_hat(np.array([[0.0, 1.0], [1.0, 0.0]]), [1, -1]) == 2.0
    assert omega_hat_naive(np.array([[0.0, 1.0], [1.0, 0.0]]), [1, -1]) == 2.0
    assert mks_hat_directed(np.array([[0.0, 3.0], [3.0, 0.0]]), [-1, 1], 1) == 1.0
    assert omega_hat(np.zeros((2, 2)), [1, -1]) == 0.0
    assert omega_hat_naive(np.zeros((2, 2)), [1, -1]) == 0.0


def test_degenerate_feature_matches_naive():
    for y in ([1, 1, -1, -1], [1, -1, -1, -1, -1]):
        D = np.zeros((len(y), len(y)))
        assert omega_hat(D, y) == omega_hat_naive(D, y) == 0.0


def test_errors():
    with pytest.raises(InvalidDistanceMatrix):
        omega_hat(np.array([[0.0, 1.0], [2.0, 0.0]]), [1, -1])
    with pytest.raises(SingleClass):
        omega_hat(np.zeros((3, 3)), [1, 1, 1])
    with pytest.raises(ValueError):
        omega_hat(np.zeros((3, 3)), [1, -1])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fast_equals_naive_exactly(seed):
    D, y = random_instance(np.random.default_rng(seed), (2, 30))
    if np.all(y == y[0]):
        return
    assert omega_hat(D, y) == omega_hat_naive(D, y)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 7.3]))
def test_bounds_symmetry_invariance(seed, c):
    D, y = random_instance(np.random.default_rng(seed))
    w = omega_hat(D, y)
    assert 0.0 <= w <= 2.0
    for cls in (1, -1):
        assert 0.0 <= mks_hat_directed(D, y, cls) <= 1.0
    assert omega_hat(D, -y) == w
    assert omega_hat(c * D, y) == w
    assert omega_hat(D * D, y) == w
    assert omega_hat(np.sqrt(D), y) == w


def test_identical_columns_rank_by_index():
    gen = np.random.default_rng(0)
    D, y = random_instance(gen)
    col = FeatureColumn.from_distances(D)
    res = screen_all(LabeledDataset([col] * 5, y))
    assert np.all(res.omega_hat == res.omega_hat[0])
    assert res.ranking.tolist() == [0, 1, 2, 3, 4]


def test_single_feature_and_rank_of():
    D, y = random_instance(np.random.default_rng(1))
    res = screen_all(LabeledDataset([FeatureColumn.from_distances(D)], y))
    assert res.ranking.tolist() == [0]
    assert res.rank_of(0) == 1
    r = ScreeningResult.from_omega([0.5, 0.9, 0.1], [1, -1, 1])
    assert r.ranking.tolist() == [1, 0, 2]
    assert (r.n, r.n_pos, r.n_neg) == (3, 2, 1)


def test_omega_matrix_thread_and_chunk_independent(monkeypatch):
    cfg = SimulationConfig("distributional", p=40, n=30)
    ds, _ = build_distributional_dataset(cfg)
    rows = [np.arange(30), np.arange(0, 30, 2), np.arange(1, 30, 2)]
    base = omega_matrix(ds, rows, threads=1)
    for j in range(ds.p):
        assert base[0][j] == omega_hat(ds.columns[j].distances(), ds.labels)
        sub = ds.columns[j].distances()[np.ix_(rows[1], rows[1])]
        assert base[1][j] == omega_hat(sub, ds.labels[rows[1]])
    import mkfilter.mks as mks
    monkeypatch.setattr(mks, "_CHUNK_ELEMENTS", 30 * 30 * 3)
    for threads in (2, 5):
        other = omega_matrix(ds, rows, threads=threads)
        for a, b in zip(base, other):
            assert np.array_equal(a, b)


def test_omega_matrix_reports_bad_column():
    bad = FeatureColumn.from_distances(np.zeros((4, 4)))
    good = FeatureColumn.from_distances(line_matrix([0, 1, 2, 3]))
    ds = LabeledDataset([good, bad], [1, 1, -1, -1])
    omega_matrix(ds)  # the zero matrix is a valid, uninformative column
    res = screen_all(ds)
    assert res.ranking.tolist() == [0, 1]


def test_screen_feature_zero_in_top_ten():
    hits = 0
    for seed in range(100):
        ds, _ = build_distributional_dataset(SimulationConfig("distributional", p=100, n=40, seed=seed))
        res = screen_all(ds)
        hits += res.rank_of(0) <= 10
    assert hits >= 95


def test_permutation_null_below_separated_feature():
    gen = np.random.default_rng(4)
    n = 200
    x = np.concatenate([gen.normal(-1, 1, n // 2), gen.normal(1, 1, n // 2)])
    y = np.where(np.arange(n) < n // 2, 1, -1)
    D = line_matrix(x)
    observed = omega_hat(D, y)
    rows = SortedRows(D)
    null = [float(rows.omega(gen.permutation(y))) for _ in range(200)]
    assert np.percentile(null, 95) < observed


def _null_omega(n, seed, perms):
    gen = np.random.default_rng([n, seed])
    D = line_matrix(gen.normal(size=n))
    y = np.where(np.arange(n) < n // 2, 1, -1)
    rows = SortedRows(D)
    return [float(rows.omega(gen.permutation(y))) for _ in range(perms)]


def test_permutation_null_small_at_n400():
    assert np.mean(_null_omega(400, 0, 500)) < 0.2


def test_permutation_null_decreases_with_n():
    medians = [np.median([_null_omega(n, s, 1)[0] for s in range(20)]) for n in (100, 400, 1600)]
    assert medians[0] > medians[1] > medians[2]
