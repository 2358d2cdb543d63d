"""1-Wasserstein distance between equal-mass empirical measures on the line.

Atoms carry unit mass, so a measure is just a vector of positions. For two
measures with the same number of atoms the optimal coupling matches the
i-th smallest atom of one with the i-th smallest atom of the other.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

__all__ = ["w1_sorted", "w1_assignment_oracle", "ORACLE_MAX_ATOMS"]

ORACLE_MAX_ATOMS = 8


def _atoms(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    return arr


def w1_sorted(mu, nu) -> float:
    """W1 between two unit-mass empirical measures of equal size.

    Parameters
    ----------
    mu, nu : array-like of float
        Atom positions.

    Returns
    -------
    float
        ``sum_i |x_(i) - y_(i)|`` over jointly sorted atoms.
    """
    x, y = _atoms(mu), _atoms(nu)
    if x.size != y.size:
        raise ValueError(f"measures must have equal mass, got {x.size} and {y.size} atoms")
    x = np.sort(x, kind="stable")
    y = np.sort(y, kind="stable")
    return float(np.abs(x - y).sum())


def w1_assignment_oracle(mu, nu) -> float:
    """Brute-force W1: minimum over all bijections between the atoms.

    Only meant as a reference for small inputs (at most
    ``ORACLE_MAX_ATOMS`` atoms per side).
    """
    x, y = _atoms(mu), _atoms(nu)
    if x.size != y.size:
        raise ValueError(f"measures must have equal mass, got {x.size} and {y.size} atoms")
    if x.size > ORACLE_MAX_ATOMS:
        raise ValueError(f"oracle limited to {ORACLE_MAX_ATOMS} atoms, got {x.size}")
    if x.size == 0:
        return 0.0
    costs = np.abs(x[None, :] - y[_permutations(y.size)]).sum(axis=1)
    return float(costs.min())


@functools.lru_cache(maxsize=None)
def _permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)
