import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mkfilter.emdf import build_profiles, emdf_value
from mkfilter.exceptions import EmptyClass

from .helpers import line_matrix, random_instance


def test_emdf_line_example():
    profiles = build_profiles(line_matrix([0, 1, 3]), [1, -1, 1])
    assert emdf_value(profiles[0], None, 1.0) == pytest.approx(2 / 3)
    assert emdf_value(profiles[0], None, 3.0) == 1.0


def test_center_is_in_its_own_ball():
    profiles = build_profiles(line_matrix([0, 1, 3, 7]), [1, 1, -1, -1])
    for p in profiles:
        own = p.class_of[p.center_index]
        count = np.sum(p.class_of == own)
        assert emdf_value(p, own, 0.0) >= 1 / count


def test_profiles_examples():
    zero = build_profiles(np.zeros((2, 2)), [1, -1])
    assert all(np.array_equal(p.radii, [0.0, 0.0]) for p in zero)
    line = build_profiles(line_matrix([0, 1, 3]), [1, -1, 1])
    assert np.array_equal(line[1].radii[line[1].sort_order], [0.0, 1.0, 2.0])


def test_empty_class_filter():
    p = build_profiles(line_matrix([0, 1, 3]), [1, -1, 1])[0]
    object.__setattr__(p, "class_of", np.array([1, 1, 1]))
    with pytest.raises(EmptyClass):
        emdf_value(p, -1, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sort_order_and_monotone_normalized(seed):
    gen = np.random.default_rng(seed)
    D, y = random_instance(gen)
    for p in build_profiles(D, y):
        assert np.all(np.diff(p.radii[p.sort_order]) >= 0)
        for cls in (1, -1, None):
            vals = [emdf_value(p, cls, r) for r in np.sort(p.radii)]
            assert all(0.0 <= v <= 1.0 for v in vals)
            assert all(a <= b for a, b in zip(vals, vals[1:]))
            mask = np.ones(y.size, bool) if cls is None else (y == cls)
            assert emdf_value(p, cls, p.radii[mask].max()) == 1.0


def test_glivenko_cantelli_uniform():
    medians = []
    for n in (50, 200, 800):
        errs = []
        for seed in range(50):
            x = np.random.default_rng([n, seed]).uniform(size=n)
            errs.append(_sup_error(x))
        medians.append(np.median(errs))
    assert medians[0] > medians[1] > medians[2]


def _sup_error(x):
    """sup over sample pairs of |EMDF - MDF| for Uniform(0, 1) on the line."""
    D = line_matrix(x)
    worst = 0.0
    for i in range(x.size):
        r = np.sort(D[i])
        counts = np.searchsorted(r, D[i], side="right") / x.size
        pop = np.minimum(1.0, x[i] + D[i]) - np.maximum(0.0, x[i] - D[i])
        worst = max(worst, np.abs(counts - pop).max())
    return worst
