"""Persistence diagram data model, `.dgm` text I/O and diagonal geometry."""

from __future__ import annotations

import io
import math
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, TextIO

import numpy as np

__all__ = [
    "DiagramFormatError",
    "DiagramPoint",
    "PersistenceDiagram",
    "as_diagram",
    "parse_diagram",
    "read_diagram",
    "serialize_diagram",
    "write_diagram",
    "project_diagonal",
    "persistence",
    "perturb_general_position",
    "in_general_position",
]


class DiagramFormatError(ValueError):
    """Raised when `.dgm` text is malformed or holds an invalid point."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DiagramPoint(NamedTuple):
    birth: float
    death: float


def _validate_array(points: np.ndarray) -> None:
    if not np.all(np.isfinite(points)):
        raise ValueError("diagram coordinates must be finite")
    bad = np.flatnonzero(points[:, 1] < points[:, 0])
    if bad.size:
        b, d = points[bad[0]]
        raise ValueError(f"point {bad[0]} has death < birth: ({b!r}, {d!r})")


class PersistenceDiagram:
    """Finite multiset of (birth, death) points.

    Points are stored as a read-only ``(n, 2)`` float64 array. Order is kept
    as given but carries no meaning; duplicates are allowed.

    Parameters
    ----------
    points : array-like of shape (n, 2)
        Birth/death pairs. Every pair must be finite with death >= birth.
    id : str, optional
        Free-form label (file stem, dataset key, ...).
    """

    __slots__ = ("_points", "id")

    def __init__(self, points: Iterable = (), id: str | None = None):
        arr = np.array(points, dtype=np.float64)
        if arr.size == 0:
            arr = np.empty((0, 2), dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"expected an (n, 2) array of points, got shape {arr.shape}")
        _validate_array(arr)
        arr.setflags(write=False)
        self._points = arr
        self.id = id

    @property
    def points(self) -> np.ndarray:
        return self._points

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self) -> Iterator[DiagramPoint]:
        for b, d in self._points:
            yield DiagramPoint(float(b), float(d))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._points
        return self._points.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return np.array_equal(self._points, other._points)

    def __hash__(self):
        return hash(self._points.tobytes())

    def __repr__(self) -> str:
        label = f", id={self.id!r}" if self.id is not None else ""
        return f"PersistenceDiagram({self._points.tolist()!r}{label})"


def as_diagram(d) -> PersistenceDiagram:
    """Return `d` unchanged if it is a diagram, else build one from array-like input."""
    if isinstance(d, PersistenceDiagram):
        return d
    return PersistenceDiagram(d)


def _parse_float(token: str, lineno: int, clamp_essential: float | None) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DiagramFormatError(f"not a number: {token!r}", lineno) from None
    if value == math.inf and clamp_essential is not None:
        value = float(clamp_essential)
    if not math.isfinite(value):
        raise DiagramFormatError(f"non-finite coordinate {token!r}", lineno)
    return value


def parse_diagram(
    text: str | TextIO,
    id: str | None = None,
    clamp_essential: float | None = None,
) -> PersistenceDiagram:
    """Parse `.dgm` text: one ``birth death`` pair per line.

    Blank lines are skipped and ``#`` starts a comment. With
    `clamp_essential`, ``+inf`` coordinates are replaced by that value
    before validation; otherwise they are rejected.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    rows = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise DiagramFormatError(f"expected 2 numbers, found {len(tokens)}", lineno)
        b = _parse_float(tokens[0], lineno, clamp_essential)
        d = _parse_float(tokens[1], lineno, clamp_essential)
        if d < b:
            raise DiagramFormatError(f"death {d!r} < birth {b!r}", lineno)
        rows.append((b, d))
    return PersistenceDiagram(rows, id=id)


def read_diagram(path, clamp_essential: float | None = None) -> PersistenceDiagram:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return parse_diagram(fh, id=path.stem, clamp_essential=clamp_essential)


def serialize_diagram(d) -> str:
    d = as_diagram(d)
    return "".join(f"{b:.17g} {e:.17g}\n" for b, e in d.points.tolist())


def write_diagram(d, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_diagram(d))


def project_diagonal(p) -> DiagramPoint:
    """Orthogonal projection of a point onto the diagonal ``{(x, x)}``."""
    m = (p[0] + p[1]) / 2.0
    return DiagramPoint(m, m)


def diagonal_projections(points: np.ndarray) -> np.ndarray:
    """Vectorised :func:`project_diagonal` for an ``(n, 2)`` array."""
    m = points.sum(axis=1) / 2.0
    return np.column_stack([m, m])


def persistence(p) -> float:
    return p[1] - p[0]


def perturb_general_position(d, epsilon: float, seed: int) -> PersistenceDiagram:
    """Shift every coordinate by an independent draw from U(-epsilon, epsilon).

    Draws that would put a point below the diagonal are redrawn for that
    point, so the result stays a valid diagram and every coordinate stays
    within `epsilon` of the input.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    d = as_diagram(d)
    rng = np.random.default_rng(seed)
    pts = d.points.copy()
    out = pts + rng.uniform(-epsilon, epsilon, size=pts.shape)
    bad = out[:, 1] < out[:, 0]
    while np.any(bad):
        idx = np.flatnonzero(bad)
        out[idx] = pts[idx] + rng.uniform(-epsilon, epsilon, size=(idx.size, 2))
        bad = out[:, 1] < out[:, 0]
    return PersistenceDiagram(out, id=d.id)


def in_general_position(d, rtol: float = 1e-13) -> bool:
    """True if no three points are collinear.

    The check runs over the diagram points together with their diagonal
    projections. Triples lying entirely on the diagonal are ignored: the
    projections of any three points are collinear by construction.
    """
    pts = as_diagram(d).points
    if len(pts) == 0:
        return True
    allp = np.vstack([pts, diagonal_projections(pts)])
    on_diag = allp[:, 0] == allp[:, 1]
    scale = max(1.0, float(np.abs(allp).max()))
    n = len(allp)
    for i in range(n - 2):
        a = allp[i]
        u = allp[i + 1 :] - a
        # cross products of every (j, k) pair with j < k, both after i
        cross = np.outer(u[:, 0], u[:, 1]) - np.outer(u[:, 1], u[:, 0])
        j, k = np.triu_indices(len(u), 1)
        hits = np.abs(cross[j, k]) <= rtol * scale * scale
        if not np.any(hits):
            continue
        diag_only = on_diag[i] & on_diag[i + 1 + j] & on_diag[i + 1 + k]
        if np.any(hits & ~diag_only):
            return False
    return True
