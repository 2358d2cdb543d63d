"""Synthetic data: linked twist map orbits and their 0-dimensional persistence.

Orbit datasets are reproducible: every orbit draws its initial position from
numpy's default bit generator (PCG64) seeded with ``[seed, class, orbit]``.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagrams import PersistenceDiagram, read_diagram, write_diagram

__all__ = [
    "ORBIT_LABELS",
    "GENERATOR",
    "LabeledDiagram",
    "linked_twist_orbit",
    "rips_0dim_persistence",
    "generate_orbit_dataset",
    "write_orbit_dataset",
    "load_dataset",
    "random_diagram",
]

ORBIT_LABELS = (2.5, 3.5, 4.0, 4.1, 4.3)
GENERATOR = "numpy.random.default_rng(PCG64) seeded with [seed, class_index, orbit_index]"


@dataclass(frozen=True)
class LabeledDiagram:
    diagram: PersistenceDiagram
    label: float
    seed: int
    points: int


def linked_twist_orbit(r: float, x0: float, y0: float, n: int, include_seed: bool = False) -> np.ndarray:
    """Iterate the linked twist map.

    ``x' = x + r y (1 - y) mod 1``, then ``y' = y + r x' (1 - x') mod 1``.

    Returns
    -------
    ndarray of shape (n, 2)
        The first `n` iterates, or the seed followed by ``n - 1`` iterates
        when `include_seed` is set.
    """
    if not r > 0:
        raise ValueError(f"r must be positive, got {r!r}")
    if not (0 <= x0 < 1 and 0 <= y0 < 1):
        raise ValueError(f"initial position must lie in [0, 1)^2, got ({x0!r}, {y0!r})")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    out = np.empty((n, 2))
    x, y = float(x0), float(y0)
    start = 0
    if include_seed:
        out[0] = x, y
        start = 1
    for k in range(start, n):
        x = (x + r * y * (1.0 - y)) % 1.0
        y = (y + r * x * (1.0 - x)) % 1.0
        out[k] = x, y
    return out


def rips_0dim_persistence(points) -> PersistenceDiagram:
    """0-dimensional Rips persistence of a point cloud.

    Every point is born at 0 and components die at the Euclidean merge
    radius (single linkage), so the deaths are the edge weights of a minimum
    spanning tree. The one class that never dies is left out.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("need a non-empty (n, d) point cloud")
    n = len(pts)
    # Prim's algorithm on the dense distance matrix
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = np.sqrt(((pts - pts[0]) ** 2).sum(axis=1))
    best[0] = np.inf
    deaths = np.empty(n - 1)
    for k in range(n - 1):
        j = int(np.argmin(best))
        deaths[k] = best[j]
        in_tree[j] = True
        best[j] = np.inf
        dist = np.sqrt(((pts - pts[j]) ** 2).sum(axis=1))
        upd = ~in_tree & (dist < best)
        best[upd] = dist[upd]
    deaths.sort()
    return PersistenceDiagram(np.column_stack([np.zeros(n - 1), deaths]))


def generate_orbit_dataset(
    seed: int,
    per_class: int,
    points_per_orbit: int,
    labels=ORBIT_LABELS,
    include_seed: bool = False,
    workers: int = 1,
) -> list[LabeledDiagram]:
    """Orbit diagrams for every label, `per_class` random initial positions each.

    Orbits are independent, so with ``workers > 1`` they are computed in a
    process pool; the result does not depend on the worker count.
    """
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    if points_per_orbit < 2:
        raise ValueError(f"points_per_orbit must be >= 2, got {points_per_orbit}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    jobs = [
        (seed, c, k, float(r), points_per_orbit, include_seed)
        for c, r in enumerate(labels)
        for k in range(per_class)
    ]
    if workers == 1:
        diagrams = [_orbit_diagram(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            diagrams = list(pool.map(_orbit_diagram, *zip(*jobs), chunksize=max(1, len(jobs) // (4 * workers))))
    out = []
    for (_, _, k, r, _, _), dgm in zip(jobs, diagrams):
        dgm.id = f"{r}/{k:03d}"
        out.append(LabeledDiagram(dgm, r, seed, points_per_orbit))
    return out


def _orbit_diagram(seed, c, k, r, points, include_seed) -> PersistenceDiagram:
    rng = np.random.default_rng([seed, c, k])
    x0, y0 = rng.random(2)
    return rips_0dim_persistence(linked_twist_orbit(r, x0, y0, points, include_seed))


def write_orbit_dataset(items: list[LabeledDiagram], out) -> Path:
    """Write ``<out>/<label>/<index>.dgm`` files, ``manifest.tsv`` and ``dataset.json``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for item in items:
        rel = Path(f"{item.diagram.id}.dgm")
        (out / rel.parent).mkdir(parents=True, exist_ok=True)
        write_diagram(item.diagram, out / rel)
        rows.append((rel.as_posix(), repr(item.label), str(item.seed), str(item.points)))
    manifest = out / "manifest.tsv"
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(("path", "label", "seed", "points"))
        writer.writerows(rows)
    meta = {"generator": GENERATOR, "diagrams": len(rows), "homology": "0-dimensional Rips"}
    with open(out / "dataset.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_dataset(directory) -> list[LabeledDiagram]:
    """Read a dataset directory through its ``manifest.tsv``."""
    directory = Path(directory)
    items = []
    with open(directory / "manifest.tsv", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            dgm = read_diagram(directory / row["path"])
            dgm.id = row["path"][: -len(".dgm")] if row["path"].endswith(".dgm") else row["path"]
            items.append(LabeledDiagram(dgm, float(row["label"]), int(row["seed"]), int(row["points"])))
    return items


def random_diagram(rng: np.random.Generator, max_points: int, min_points: int = 0, scale: float = 1.0):
    """Random diagram with births in [0, scale) and persistences in [0, scale)."""
    n = int(rng.integers(min_points, max_points + 1))
    b = rng.uniform(0, scale, n)
    return PersistenceDiagram(np.column_stack([b, b + rng.uniform(0, scale, n)]))
