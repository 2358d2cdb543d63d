import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdsw.wasserstein import ORACLE_MAX_ATOMS, w1_assignment_oracle, w1_sorted

atoms = st.lists(st.floats(-100, 100, allow_nan=False, width=64), min_size=1, max_size=6)


@st.composite
def equal_pairs(draw):
    n = draw(st.integers(1, 6))
    a = draw(st.lists(st.floats(-100, 100, allow_nan=False, width=64), min_size=n, max_size=n))
    b = draw(st.lists(st.floats(-100, 100, allow_nan=False, width=64), min_size=n, max_size=n))
    return np.array(a), np.array(b)


@pytest.mark.parametrize(
    "x, y, expected", [([0, 1], [0.5, 2], 1.5), ([-3, 0, 7], [-3, 0, 7], 0.0), ([0], [3], 3.0)]
)
def test_examples(x, y, expected):
    assert w1_sorted(x, y) == expected
    assert w1_assignment_oracle(x, y) == expected


def test_empty_measures():
    assert w1_sorted([], []) == 0.0


def test_unequal_mass_rejected():
    with pytest.raises(ValueError):
        w1_sorted([0, 1], [0])
    with pytest.raises(ValueError):
        w1_assignment_oracle([0, 1], [0])


def test_oracle_size_cap():
    x = np.arange(ORACLE_MAX_ATOMS + 1.0)
    with pytest.raises(ValueError):
        w1_assignment_oracle(x, x)


@given(equal_pairs())
def test_sorted_matches_oracle(pair):
    x, y = pair
    assert abs(w1_sorted(x, y) - w1_assignment_oracle(x, y)) <= 1e-9


@given(equal_pairs(), st.floats(-50, 50, allow_nan=False))
def test_translation_invariance(pair, c):
    x, y = pair
    # a shared shift moves each matched pair together
    assert w1_sorted(x + c, y + c) == pytest.approx(w1_sorted(x, y), rel=1e-12, abs=1e-9)


@given(equal_pairs(), atoms)
def test_mass_addition_invariance(pair, extra):
    x, y = pair
    g = np.array(extra)
    assert abs(w1_sorted(np.r_[x, g], np.r_[y, g]) - w1_sorted(x, y)) <= 1e-12 * max(1.0, w1_sorted(x, y)) * 100


@given(equal_pairs())
def test_symmetric_nonnegative(pair):
    x, y = pair
    w = w1_sorted(x, y)
    assert w == w1_sorted(y, x) and w >= 0
    assert (w == 0) == np.array_equal(np.sort(x), np.sort(y))


def test_triangle_inequality(rng):
    for _ in range(500):
        n = int(rng.integers(1, 9))
        x, y, z = (rng.normal(size=n) * 10 for _ in range(3))
        assert w1_sorted(x, z) <= w1_sorted(x, y) + w1_sorted(y, z) + 1e-12


def test_conditionally_negative_definite(rng):
    for _ in range(200):
        n_measures, n_atoms = int(rng.integers(2, 9)), int(rng.integers(1, 7))
        family = [rng.normal(size=n_atoms) * 5 for _ in range(n_measures)]
        dist = np.array([[w1_sorted(a, b) for b in family] for a in family])
        a = rng.normal(size=n_measures)
        a -= a.mean()
        assert a @ dist @ a <= 1e-8
