"""Wall-clock timing of the exact and approximate SW routines."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .diagrams import PersistenceDiagram
from .sliced import sw_approx, sw_exact

__all__ = ["TimingRow", "RatioRow", "fixed_size_diagram", "median_time", "benchmark", "approximation_ratios"]


@dataclass(frozen=True)
class TimingRow:
    method: str
    size: int
    directions: int | None
    median_seconds: float


@dataclass(frozen=True)
class RatioRow:
    directions: int
    pairs: int
    mean: float
    min: float
    max: float
    max_abs_error: float


def fixed_size_diagram(rng: np.random.Generator, n: int, scale: float = 1.0) -> PersistenceDiagram:
    """Random diagram with exactly `n` off-diagonal points."""
    b = rng.uniform(0, scale, n)
    return PersistenceDiagram(np.column_stack([b, b + rng.uniform(0.01 * scale, scale, n)]))


def median_time(fn, *args, repeats: int = 5) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def benchmark(sizes, directions, repeats: int = 5, seed: int = 0) -> list[TimingRow]:
    """Median times of sw_exact per size and of sw_approx per (size, M).

    Every size uses one fixed random pair drawn from ``(seed, size)``.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    rows = []
    for n in sizes:
        if n < 1:
            raise ValueError(f"sizes must be positive, got {n}")
        rng = np.random.default_rng([seed, n])
        d1, d2 = fixed_size_diagram(rng, n), fixed_size_diagram(rng, n)
        rows.append(TimingRow("sw_exact", n, None, median_time(sw_exact, d1, d2, repeats=repeats)))
        for m in directions:
            rows.append(TimingRow("sw_approx", n, m, median_time(sw_approx, d1, d2, m, repeats=repeats)))
    return rows


def approximation_ratios(directions, pairs: int = 50, max_points: int = 20, seed: int = 0) -> list[RatioRow]:
    """Statistics of ``sw_approx(M) / sw_exact`` over random diagram pairs."""
    rng = np.random.default_rng([seed, 1 << 20])
    data = []
    for _ in range(pairs):
        n1, n2 = rng.integers(1, max_points + 1, size=2)
        data.append((fixed_size_diagram(rng, int(n1)), fixed_size_diagram(rng, int(n2))))
    exact = np.array([sw_exact(a, b) for a, b in data])
    rows = []
    for m in directions:
        r = np.array([sw_approx(a, b, m) for a, b in data]) / exact
        rows.append(RatioRow(m, pairs, float(r.mean()), float(r.min()), float(r.max()), float(np.abs(r - 1).max())))
    return rows
