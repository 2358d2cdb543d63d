import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from pdsw.datasets import random_diagram
from pdsw.diagrams import PersistenceDiagram
from pdsw.kernels import (
    GramMatrix,
    KernelSpec,
    check_psd,
    default_workers,
    distance_matrix,
    gram_matrix,
    k_gauss_d1,
    k_pss,
    k_pwg,
    k_sw,
    nearest_rank_quantile,
    pairwise_matrix,
    rbf_from_distances,
    rkhs_distance,
    sw_sigma_grid,
)
from pdsw.metrics import diagram_distance
from pdsw.sliced import sw_exact

A = PersistenceDiagram([(0, 2)])
EMPTY = PersistenceDiagram()
SW_A = 2 * math.sqrt(2) / math.pi


def test_k_sw_examples():
    assert k_sw(A, A, 1.0) == 1.0
    assert k_sw(A, EMPTY, 1.0) == pytest.approx(math.exp(-SW_A / 2), abs=1e-12)
    assert k_sw(A, EMPTY, 1.0) == pytest.approx(0.637527, abs=5e-7)
    vals = [k_sw(A, EMPTY, s) for s in (0.5, 1, 2, 10, 100)]
    assert all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] < 1


def test_k_pss_examples():
    assert k_pss(A, EMPTY, 1.0) == 0.0
    unit = PersistenceDiagram([(0, 1)])
    assert k_pss(unit, unit, 1 / 8) == pytest.approx((1 - math.exp(-2)) / math.pi, abs=1e-12)
    on_diag = PersistenceDiagram([(0.7, 0.7)])
    assert k_pss(unit, on_diag, 0.3) == 0.0
    with pytest.raises(ValueError):
        k_pss(A, A, 0.0)


def test_k_pwg_examples():
    assert k_pwg(A, A, 1, 1, 1, 1) == 1.0
    unit = PersistenceDiagram([(0, 1)])
    for rho in (0.1, 1.0, 7.0):
        assert k_pwg(unit, EMPTY, 1, 1, rho, 1) == pytest.approx(math.exp(-math.pi / 8), abs=1e-12)
    assert k_pwg(unit, EMPTY, 1, 1, 1, 1, squared=True) == pytest.approx(
        math.exp(-((math.pi / 4) ** 2) / 2), abs=1e-12
    )
    padded = PersistenceDiagram([(0, 1), (3, 3)])
    assert k_pwg(padded, EMPTY, 1, 1, 1, 1) == k_pwg(unit, EMPTY, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        k_pwg(A, A, 1, 1, -1, 1)


def test_k_gauss_d1_example():
    assert k_gauss_d1(A, A, 1.0) == 1.0
    assert k_gauss_d1(A, EMPTY, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_rkhs_distance_examples():
    spec = KernelSpec.sw(1.0)
    assert rkhs_distance(spec, A, A) == 0.0
    k12 = k_sw(A, EMPTY, 1.0)
    assert rkhs_distance(spec, A, EMPTY) == pytest.approx(math.sqrt(2 - 2 * k12), abs=1e-12)
    assert rkhs_distance(spec, A, EMPTY) == pytest.approx(0.851437, abs=5e-7)
    assert rkhs_distance(KernelSpec.pss(1.0), EMPTY, EMPTY) == 0.0


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec.sw(0.0)
    with pytest.raises(ValueError):
        KernelSpec.sw(1.0, "approx")
    with pytest.raises(ValueError):
        KernelSpec("nope")
    with pytest.raises(ValueError):
        KernelSpec.pwg(1, 1, 1, 0)


def test_sigma_grid_constant_input():
    grid = sw_sigma_grid([4.0] * 10)
    assert grid == sorted([0.02, 0.2, 2.0, 20.0, 200.0] * 3)
    assert len(grid) == 15


def test_sigma_grid_degenerate():
    with pytest.raises(ValueError):
        sw_sigma_grid([])
    with pytest.raises(ValueError):
        sw_sigma_grid([0.0, 0.0, 0.0])
    # zero first decile is dropped, the rest survives
    grid = sw_sigma_grid([0.0] * 2 + [1.0] * 18)
    assert len(grid) == 10 and min(grid) > 0


def test_sigma_grid_uniform_1_to_100():
    values = np.arange(1, 101.0)
    roots = [math.sqrt(10), math.sqrt(50), math.sqrt(90)]
    expected = sorted(r * f for r in roots for f in (0.01, 0.1, 1, 10, 100))
    assert sw_sigma_grid(values) == pytest.approx(expected, rel=1e-15)


def test_nearest_rank_matches_inverted_cdf(rng):
    for n in range(1, 200):
        x = rng.normal(size=n)
        for q in (0.1, 0.5, 0.9):
            assert nearest_rank_quantile(x, q) == np.quantile(x, q, method="inverted_cdf")


def test_gram_small_cases():
    assert gram_matrix([A], KernelSpec.sw(1.0)).values.tolist() == [[1.0]]
    g = gram_matrix([A, EMPTY], KernelSpec.sw(1.0))
    k = k_sw(A, EMPTY, 1.0)
    assert g.values.tolist() == [[1.0, k], [k, 1.0]]
    assert g.ids == ["0", "1"]


def test_gram_matrix_shape_guard():
    with pytest.raises(ValueError):
        GramMatrix(["a"], np.eye(2))


@pytest.mark.parametrize(
    "spec",
    [KernelSpec.sw(0.7), KernelSpec.sw(0.7, "approx", 8), KernelSpec.pss(0.5),
     KernelSpec.pwg(1, 1, 0.5, 1), KernelSpec.gauss_d1(0.7)],
)
def test_gram_entries_match_direct_evaluation(spec, rng):
    from pdsw.kernels import evaluate_kernel

    fam = [random_diagram(rng, 5) for _ in range(5)]
    g = gram_matrix(fam, spec).values
    direct = np.array([[evaluate_kernel(spec, a, b) for b in fam] for a in fam])
    assert np.array_equal(g, g.T)
    assert np.allclose(g, direct, rtol=0, atol=1e-15)
    if spec.family != "pss":
        assert np.all(np.diag(g) == 1.0) and np.all(g > 0) and np.all(g <= 1)


def test_gram_worker_invariance(rng):
    fam = [random_diagram(rng, 6) for _ in range(9)]
    spec = KernelSpec.sw(1.0)
    g1 = gram_matrix(fam, spec, workers=1).values
    g3 = gram_matrix(fam, spec, workers=3).values
    assert g1.tobytes() == g3.tobytes()


def test_pair_errors_name_indices():
    big = PersistenceDiagram(np.column_stack([np.zeros(40), np.arange(1, 41.0)]))
    with pytest.raises(ValueError, match=r"pair \(0, 1\)"):
        distance_matrix([big, big], "d1")


def test_pairwise_matrix_options():
    m = pairwise_matrix([A, EMPTY], lambda a, b: 5.0, workers=1, include_diagonal=False, diagonal_value=-1)
    assert m.tolist() == [[-1, 5], [5, -1]]


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("PDSW_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("PDSW_WORKERS", "0")
    with pytest.raises(ValueError):
        default_workers()
    monkeypatch.delenv("PDSW_WORKERS")
    assert default_workers() == 1


def test_check_psd_examples():
    assert check_psd(np.eye(3)) == (1.0, True)
    lam, ok = check_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert lam == pytest.approx(-1.0) and not ok
    with pytest.raises(ValueError):
        check_psd(np.array([[1.0, 0.0], [1.0, 1.0]]))


def test_check_psd_iterative_path(rng):
    x = rng.normal(size=(40, 40))
    m = x @ x.T - 3 * np.eye(40)
    lam, _ = check_psd(m)
    assert lam == pytest.approx(np.linalg.eigvalsh(m)[0], rel=1e-6)


def test_sw_gram_psd_over_grid_and_powers(rng):
    for _ in range(50):
        fam = [random_diagram(rng, 8) for _ in range(int(rng.integers(2, 11)))]
        dist = distance_matrix(fam, "sw-exact")
        values = dist[np.triu_indices(len(fam), 1)]
        if not np.any(values > 0):
            continue
        for sigma in sw_sigma_grid(values):
            g = rbf_from_distances(dist, sigma)
            assert check_psd(g)[1]
            for gamma in (0.3, 2.5):
                assert check_psd(g**gamma)[1]


def test_rkhs_distance_triangle_and_monotone(rng):
    spec = KernelSpec.sw(1.0)
    for _ in range(100):
        x, y, z = (random_diagram(rng, 6) for _ in range(3))
        assert rkhs_distance(spec, x, z) <= rkhs_distance(spec, x, y) + rkhs_distance(spec, y, z) + 1e-9
    ks = np.linspace(0.01, 1, 50)
    d = np.sqrt(2 - 2 * ks)
    assert np.all(np.diff(d) < 0)


def test_gauss_d1_gram_can_be_indefinite_documented(rng):
    # no assertion on the sign: the d1 RBF is not positive definite in general
    fam = [random_diagram(rng, 5) for _ in range(8)]
    lam, _ = check_psd(gram_matrix(fam, KernelSpec.gauss_d1(0.1)))
    assert math.isfinite(lam)


def test_metric_distortion_trend(rng):
    from statsmodels.nonparametric.smoothers_lowess import lowess

    pairs = [(random_diagram(rng, 8, 1), random_diagram(rng, 8, 1)) for _ in range(300)]
    d1 = np.array([diagram_distance(a, b) for a, b in pairs])
    sw = np.array([sw_exact(a, b) for a, b in pairs])
    spec = KernelSpec.sw(math.sqrt(np.median(sw)))
    dk = np.array([rkhs_distance(spec, a, b) for a, b in pairs])
    assert spearmanr(d1, np.log(dk))[0] >= 0.9
    trend = lowess(np.log(dk), d1, frac=0.5, return_sorted=True)
    assert np.all(np.diff(trend[:, 1]) > 0)


def test_reexponentiation_is_bitwise_identical(rng):
    fam = [random_diagram(rng, 6) for _ in range(8)]
    dist = distance_matrix(fam, "sw-exact")
    for sigma in (0.1, 1.0, 3.3):
        cached = gram_matrix(fam, KernelSpec.sw(sigma), distances=dist).values
        direct = gram_matrix(fam, KernelSpec.sw(sigma)).values
        assert cached.tobytes() == direct.tobytes()
