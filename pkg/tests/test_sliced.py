import math

import numpy as np
import pytest
from hypothesis import given

from conftest import diagrams
from oracles import sw_quadrature
from pdsw.datasets import random_diagram
from pdsw.diagrams import PersistenceDiagram, perturb_general_position
from pdsw.metrics import diagram_distance
from pdsw.sliced import (
    DegeneracyError,
    direction,
    project_and_sort,
    sliced_wasserstein,
    sw_approx,
    sw_exact,
    sw_numeric_oracle,
)

A = PersistenceDiagram([(0, 2)])
EMPTY = PersistenceDiagram()
HAND = 2 * math.sqrt(2) / math.pi


def test_project_and_sort_examples():
    assert project_and_sort(A, EMPTY, math.pi / 2).tolist() == [2.0]
    assert project_and_sort(A, PersistenceDiagram([(4, 6)]), math.pi / 2).tolist() == [2.0, 5.0]
    two = PersistenceDiagram([(0, 2), (1, 3)])
    assert project_and_sort(two, EMPTY, 0.0).tolist() == [0.0, 1.0]


def test_direction_domain():
    assert direction(-math.pi / 2) == (0.0, -1.0)
    with pytest.raises(ValueError):
        direction(2.0)


def test_single_point_against_empty():
    assert abs(sw_exact(A, EMPTY) - HAND) <= 1e-12
    assert sw_approx(A, EMPTY, 1) == 1.0
    assert abs(sw_approx(A, EMPTY, 1000) - HAND) <= 0.005
    assert abs(sw_numeric_oracle(A, EMPTY, 10**6) - HAND) <= 1e-4


def test_identical_diagrams_give_zero():
    d = PersistenceDiagram([(0, 2), (1, 3)])
    assert sw_exact(d, d) == 0.0
    for m in (1, 7, 100):
        assert sw_approx(d, d, m) == 0.0
        assert sw_numeric_oracle(d, d, m) == 0.0


def test_diagonal_point_cancels():
    d2 = PersistenceDiagram([(0, 2), (1, 1)])
    assert sw_exact(A, d2) <= 1e-12
    assert sw_numeric_oracle(A, d2, 10**4) <= 1e-9


def test_empty_vs_empty():
    assert sw_exact(EMPTY, EMPTY) == 0.0
    assert sw_approx(EMPTY, EMPTY, 3) == 0.0


@pytest.mark.parametrize("m", [0, -1, 2.5, True])
def test_bad_direction_count(m):
    with pytest.raises(ValueError):
        sw_approx(A, EMPTY, m)
    with pytest.raises(ValueError):
        sw_numeric_oracle(A, EMPTY, m)


def test_result_wrapper():
    r = sliced_wasserstein(A, EMPTY, "approx", 1)
    assert (r.value, r.method, r.directions) == (1.0, "approx", 1)
    assert float(sliced_wasserstein(A, EMPTY)) == sw_exact(A, EMPTY)
    with pytest.raises(ValueError):
        sliced_wasserstein(A, EMPTY, "bogus")


def test_exact_matches_quadrature_oracle(rng):
    for _ in range(25):
        d1, d2 = random_diagram(rng, 4), random_diagram(rng, 4)
        assert abs(sw_exact(d1, d2) - sw_quadrature(d1.points, d2.points)) <= 1e-7


def test_degenerate_inputs_match_quadrature():
    # collinear off-diagonal points and repeated points
    d1 = PersistenceDiagram([(0, 1), (0, 2), (0, 3), (0, 3)])
    d2 = PersistenceDiagram([(0, 1.5), (1, 2), (2, 3)])
    assert abs(sw_exact(d1, d2) - sw_quadrature(d1.points, d2.points)) <= 1e-7


def test_strict_mode_flags_aligned_points():
    d1 = PersistenceDiagram([(0, 1), (0, 2), (0, 3)])
    d2 = PersistenceDiagram([(0.5, 4)])
    with pytest.raises(DegeneracyError):
        sw_exact(d1, d2, strict=True)
    g1 = perturb_general_position(d1, 1e-6, 0)
    assert math.isfinite(sw_exact(g1, d2, strict=True))


@given(diagrams(), diagrams())
def test_symmetry_bitwise(d1, d2):
    assert sw_exact(d1, d2) == sw_exact(d2, d1)
    assert sw_approx(d1, d2, 11) == sw_approx(d2, d1, 11)


@given(diagrams(), diagrams())
def test_stability_and_discriminativity(d1, d2):
    sw = sw_exact(d1, d2)
    d = diagram_distance(d1, d2, 1, size_cap=None)
    n = 2 * max(len(d1), len(d2))
    assert sw >= 0
    assert sw <= 2 * math.sqrt(2) * d + 1e-9
    assert d / (2 * (1 + n * (n - 1))) <= sw + 1e-9


@given(diagrams(min_size=1), diagrams())
def test_diagonal_neutrality(d1, d2):
    c = float(d1.points[0, 0])
    padded = PersistenceDiagram(np.vstack([d1.points, [[c, c], [c + 1, c + 1]]]))
    assert abs(sw_exact(padded, d2) - sw_exact(d1, d2)) <= 1e-9


def test_conditionally_negative_definite_both_modes(rng):
    for _ in range(30):
        fam = [random_diagram(rng, 6) for _ in range(int(rng.integers(2, 9)))]
        a = rng.normal(size=len(fam))
        a -= a.mean()
        for fn in (sw_exact, lambda x, y: sw_approx(x, y, 12)):
            dist = np.array([[fn(x, y) for y in fam] for x in fam])
            assert a @ dist @ a <= 1e-8


def test_injectivity_probe(rng):
    for _ in range(200):
        d1, d2 = random_diagram(rng, 6, 1), random_diagram(rng, 6, 1)
        if diagram_distance(d1, d2) > 0.1:
            assert sw_exact(d1, d2) > 0


def test_approximation_error_shrinks(rng):
    errs = {10: [], 100: []}
    for _ in range(50):
        d1, d2 = random_diagram(rng, 10, 1), random_diagram(rng, 10, 1)
        ex = sw_exact(d1, d2)
        for m in errs:
            errs[m].append(abs(sw_approx(d1, d2, m) / ex - 1))
    assert max(errs[10]) <= 0.05 and max(errs[100]) <= 0.005
    assert np.mean(errs[100]) < np.mean(errs[10])
