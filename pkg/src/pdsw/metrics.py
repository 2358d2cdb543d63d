"""Exact diagram distances d_p and the bottleneck distance.

Both are solved on the usual augmented bipartite problem: each side gets one
diagonal slot per point of the other side, a point may be matched to another
point (l-infinity cost) or to its own diagonal slot (half its persistence),
and diagonal slots match each other for free.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .diagrams import as_diagram

__all__ = [
    "PartialMatching",
    "DEFAULT_SIZE_CAP",
    "augmented_cost_matrix",
    "diagram_distance",
    "optimal_matching",
    "bottleneck",
    "brute_force_distance",
]

DEFAULT_SIZE_CAP = 64


class PartialMatching(list):
    """List of ``(i, j)`` index pairs; unlisted points go to the diagonal."""


def _check_size(n1: int, n2: int, size_cap: int | None) -> None:
    if size_cap is not None and n1 + n2 > size_cap:
        raise ValueError(
            f"exact matching limited to {size_cap} points in total, got {n1 + n2}; "
            "raise size_cap to override"
        )


def augmented_cost_matrix(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Square ``(n1+n2)`` matrix of l-infinity ground costs (not raised to p)."""
    n1, n2 = len(p1), len(p2)
    n = n1 + n2
    cost = np.full((n, n), np.inf)
    if n1 and n2:
        cost[:n1, :n2] = np.abs(p1[:, None, :] - p2[None, :, :]).max(axis=2)
    half1 = (p1[:, 1] - p1[:, 0]) / 2
    half2 = (p2[:, 1] - p2[:, 0]) / 2
    cost[np.arange(n1), n2 + np.arange(n1)] = half1
    cost[n1 + np.arange(n2), np.arange(n2)] = half2
    cost[n1:, n2:] = 0.0
    return cost


def _assignment(p1, p2, p):
    cost = augmented_cost_matrix(p1, p2)
    powered = cost**p
    rows, cols = linear_sum_assignment(powered)
    return rows, cols, powered[rows, cols]


def diagram_distance(d1, d2, p: int = 1, size_cap: int | None = DEFAULT_SIZE_CAP) -> float:
    """p-th diagram distance via an exact assignment solve.

    Parameters
    ----------
    d1, d2 : PersistenceDiagram or array-like
    p : int
        Positive order of the distance.
    size_cap : int or None
        Maximum of ``len(d1) + len(d2)``; ``None`` disables the guard.
    """
    if p <= 0:
        raise ValueError(f"p must be positive, got {p!r}")
    p1, p2 = as_diagram(d1).points, as_diagram(d2).points
    _check_size(len(p1), len(p2), size_cap)
    if len(p1) + len(p2) == 0:
        return 0.0
    _, _, costs = _assignment(p1, p2, p)
    total = float(np.sort(costs).sum())
    return total ** (1.0 / p)


def optimal_matching(d1, d2, p: int = 1, size_cap: int | None = DEFAULT_SIZE_CAP) -> PartialMatching:
    """Point-to-point pairs of an optimal d_p matching."""
    p1, p2 = as_diagram(d1).points, as_diagram(d2).points
    _check_size(len(p1), len(p2), size_cap)
    n1, n2 = len(p1), len(p2)
    if n1 + n2 == 0:
        return PartialMatching()
    rows, cols, _ = _assignment(p1, p2, p)
    return PartialMatching(
        (int(r), int(c)) for r, c in zip(rows, cols) if r < n1 and c < n2
    )


def _perfect_matching_exists(cost: np.ndarray, threshold: float) -> bool:
    graph = csr_matrix(cost <= threshold)
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck(d1, d2, size_cap: int | None = DEFAULT_SIZE_CAP) -> float:
    """Bottleneck distance: smallest achievable maximum single-pair cost.

    Binary search over the distinct finite entries of the augmented cost
    matrix, testing each threshold for a perfect matching.
    """
    p1, p2 = as_diagram(d1).points, as_diagram(d2).points
    _check_size(len(p1), len(p2), size_cap)
    if len(p1) + len(p2) == 0:
        return 0.0
    cost = augmented_cost_matrix(p1, p2)
    candidates = np.unique(cost[np.isfinite(cost)])
    lo, hi = 0, candidates.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching_exists(cost, candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def brute_force_distance(d1, d2, p: float = 1) -> float:
    """Enumerate every partial bijection; reference for tiny diagrams.

    ``p = np.inf`` gives the bottleneck distance.
    """
    p1, p2 = as_diagram(d1).points, as_diagram(d2).points
    n1, n2 = len(p1), len(p2)
    if n1 + n2 > 10:
        raise ValueError("brute force limited to 10 points in total")
    half1 = (p1[:, 1] - p1[:, 0]) / 2
    half2 = (p2[:, 1] - p2[:, 0]) / 2
    best = np.inf
    for k in range(min(n1, n2) + 1):
        for a in itertools.combinations(range(n1), k):
            for b in itertools.permutations(range(n2), k):
                matched = [float(np.abs(p1[i] - p2[j]).max()) for i, j in zip(a, b)]
                rest = [half1[i] for i in range(n1) if i not in a]
                rest += [half2[j] for j in range(n2) if j not in b]
                costs = np.array(matched + rest)
                if costs.size == 0:
                    value = 0.0
                elif p == np.inf:
                    value = float(costs.max())
                else:
                    value = float((costs**p).sum()) ** (1.0 / p)
                best = min(best, value)
    return float(best)
