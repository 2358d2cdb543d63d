"""Repeated train/test evaluation with cross-validated kernel parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import SIGMA_FACTORS, sw_sigma_grid
from .svm import C_GRID, _best, grid_scores, svm_predict_many, svm_train

__all__ = ["ClassificationReport", "holdout_split", "classify_distances", "classify_grams"]


@dataclass
class ClassificationReport:
    accuracies: list = field(default_factory=list)
    selected: list = field(default_factory=list)  # (C, kernel parameter) per run
    test_sizes: list = field(default_factory=list)
    n_classes: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))

    def format(self) -> str:
        return (
            f"accuracy (%): {100 * self.mean:.1f} ± {100 * self.std:.1f} "
            f"over {len(self.accuracies)} runs ({self.n_classes} classes)"
        )


def holdout_split(labels, test_fraction: float, rng: np.random.Generator):
    """Stratified random split; each class keeps at least one item on each side."""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction!r}")
    labels = np.asarray(labels)
    train, test = [], []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        if idx.size < 2:
            raise ValueError(f"class {c!r} has fewer than 2 members")
        n_test = min(idx.size - 1, max(1, int(round(test_fraction * idx.size))))
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


class _RbfSubset:
    def __init__(self, dist: np.ndarray, idx: np.ndarray):
        self.dist = dist[np.ix_(idx, idx)]

    def __call__(self, sigma: float) -> np.ndarray:
        return np.exp(-self.dist / (2.0 * sigma * sigma))


class _GramSubset:
    def __init__(self, grams: dict, idx: np.ndarray):
        self.grams = {k: g[np.ix_(idx, idx)] for k, g in grams.items()}

    def __call__(self, key) -> np.ndarray:
        return self.grams[key]


def _run_seed(seed: int, run: int) -> int:
    return int(np.random.SeedSequence([seed, run]).generate_state(1)[0])


def _shuffled(labels, seed: int) -> np.ndarray:
    return np.random.default_rng([seed, 0x5EED]).permutation(labels)


def _evaluate(labels, runs, seed, test_fraction, c_grid, folds, workers, shuffle_labels, setup):
    labels = np.asarray(labels)
    if shuffle_labels:
        labels = _shuffled(labels, seed)
    report = ClassificationReport(n_classes=int(np.unique(labels).size))
    for run in range(runs):
        train, test = holdout_split(labels, test_fraction, np.random.default_rng([seed, run]))
        params, gram_for, full_for = setup(train)
        scores = grid_scores(
            gram_for, params, labels[train], c_grid, folds, _run_seed(seed, run), workers=workers
        )
        C, param = _best(scores)
        full = full_for(param)
        model = svm_train(full[np.ix_(train, train)], labels[train], C, psd_tol=None)
        pred = svm_predict_many(model, full[np.ix_(test, train)])
        report.accuracies.append(float(np.mean(pred == labels[test])))
        report.selected.append((C, param))
        report.test_sizes.append(int(test.size))
    return report


def classify_distances(
    distances,
    labels,
    runs: int = 10,
    seed: int = 0,
    test_fraction: float = 0.3,
    c_grid=C_GRID,
    folds: int = 10,
    sigma_factors=SIGMA_FACTORS,
    workers: int = 1,
    shuffle_labels: bool = False,
) -> ClassificationReport:
    """Evaluate an RBF kernel on a cached distance matrix.

    In every run the bandwidth grid comes from the quantiles of the training
    distances, and each bandwidth only re-exponentiates the cache.
    """
    dist = np.asarray(distances, dtype=np.float64)

    def setup(train):
        tri = dist[np.ix_(train, train)][np.triu_indices(train.size, 1)]
        grid = sw_sigma_grid(tri, sigma_factors)
        return grid, _RbfSubset(dist, train), lambda s: np.exp(-dist / (2.0 * s * s))

    return _evaluate(labels, runs, seed, test_fraction, c_grid, folds, workers, shuffle_labels, setup)


def classify_grams(
    grams: dict,
    labels,
    runs: int = 10,
    seed: int = 0,
    test_fraction: float = 0.3,
    c_grid=C_GRID,
    folds: int = 10,
    workers: int = 1,
    shuffle_labels: bool = False,
) -> ClassificationReport:
    """Evaluate kernels given as full Gram matrices keyed by parameter value."""
    keys = sorted(grams)

    def setup(train):
        return keys, _GramSubset(grams, train), grams.__getitem__

    return _evaluate(labels, runs, seed, test_fraction, c_grid, folds, workers, shuffle_labels, setup)
