"""Sliced Wasserstein distance between persistence diagrams.

Both diagrams are first augmented with the diagonal projections of the other
one, which equalises their masses. For a direction ``theta`` on the
half-circle the two augmented point sets are projected on the line spanned by
``(cos theta, sin theta)`` and compared with the 1-D Wasserstein distance;
SW is the average of that quantity over ``theta in [-pi/2, pi/2]``.

Three evaluators are provided:

``sw_approx``
    fixed grid starting at ``-pi/2`` with step ``pi / M`` (left Riemann sum),
``sw_numeric_oracle``
    midpoint grid, used as an independent check of the exact value,
``sw_exact``
    closed-form integration over the angular intervals between consecutive
    critical angles (angles at which two projections swap order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagrams import as_diagram, diagonal_projections

__all__ = [
    "DegeneracyError",
    "SwResult",
    "direction",
    "project_and_sort",
    "sw_approx",
    "sw_numeric_oracle",
    "sw_exact",
    "sliced_wasserstein",
    "ANGLE_TOL",
]

HALF_PI = np.pi / 2
# critical angles closer than this are treated as one simultaneous event
ANGLE_TOL = 1e-12
# projected values materialised per block by the grid evaluators; small blocks stay in cache
_CHUNK_VALUES = 1 << 16


class DegeneracyError(ValueError):
    """Simultaneous critical angles met while running in strict mode."""


@dataclass(frozen=True)
class SwResult:
    value: float
    method: str  # "exact", "approx" or "numeric"
    directions: int | None = None

    def __float__(self) -> float:
        return self.value


def direction(theta: float) -> tuple[float, float]:
    """Unit vector for an angle in ``[-pi/2, pi/2]``; exact at the endpoints."""
    if not -HALF_PI <= theta <= HALF_PI:
        raise ValueError(f"angle {theta!r} outside [-pi/2, pi/2]")
    if theta == HALF_PI:
        return 0.0, 1.0
    if theta == -HALF_PI:
        return 0.0, -1.0
    return math.cos(theta), math.sin(theta)


def _augment(d1, d2) -> tuple[np.ndarray, np.ndarray]:
    p1, p2 = as_diagram(d1).points, as_diagram(d2).points
    a1 = np.vstack([p1, diagonal_projections(p2)])
    a2 = np.vstack([p2, diagonal_projections(p1)])
    return a1, a2


def project_and_sort(d, augment, theta: float) -> np.ndarray:
    """Sorted projections of `d` plus the diagonal projections of `augment`."""
    pts = np.vstack([as_diagram(d).points, diagonal_projections(as_diagram(augment).points)])
    c, s = direction(theta)
    return np.sort(pts[:, 0] * c + pts[:, 1] * s, kind="stable")


def _grid_directions(fractions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # angles are pi * fractions with fractions in [-1/2, 1/2]
    theta = np.pi * fractions
    c, s = np.cos(theta), np.sin(theta)
    ends = np.abs(fractions) == 0.5
    c[ends] = 0.0
    s[ends] = np.sign(fractions[ends])
    return c, s


def _grid_sum(a1: np.ndarray, a2: np.ndarray, fractions: np.ndarray) -> float:
    """Sum over the given directions of W1 between the projected point sets."""
    n = a1.shape[0]
    if n == 0:
        return 0.0
    c, s = _grid_directions(fractions)
    step = max(1, _CHUNK_VALUES // n)
    norms = []
    for lo in range(0, fractions.size, step):
        cc, ss = c[lo : lo + step, None], s[lo : lo + step, None]
        v1 = np.sort(a1[:, 0] * cc + a1[:, 1] * ss, axis=1)
        v2 = np.sort(a2[:, 0] * cc + a2[:, 1] * ss, axis=1)
        norms.append(np.abs(v1 - v2).sum(axis=1))
    return math.fsum(np.concatenate(norms))


def _check_directions(m) -> int:
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ValueError(f"direction count must be an integer >= 1, got {m!r}")
    return int(m)


def sw_approx(d1, d2, directions: int) -> float:
    """Approximate SW from `directions` equally spaced angles.

    The angles are ``-pi/2 + i * pi / M`` for ``i = 0..M-1``; the result is
    ``(1/pi) * sum_i (pi/M) * ||V1(theta_i) - V2(theta_i)||_1``, i.e. the
    mean of the per-direction distances.
    """
    m = _check_directions(directions)
    a1, a2 = _augment(d1, d2)
    fractions = -0.5 + np.arange(m) / m
    return _grid_sum(a1, a2, fractions) / m


def sw_numeric_oracle(d1, d2, directions: int) -> float:
    """Midpoint-rule SW with `directions` cells; converges to :func:`sw_exact`."""
    m = _check_directions(directions)
    a1, a2 = _augment(d1, d2)
    fractions = -0.5 + (np.arange(m) + 0.5) / m
    return _grid_sum(a1, a2, fractions) / m


# ---------------------------------------------------------------------------
# exact evaluation


def _critical_angles(pts: np.ndarray):
    """Angles in (-pi/2, pi/2) at which two points share a projection.

    Returns the angles sorted ascending with the corresponding point pairs.
    Pairs of identical points never change order and are skipped.
    """
    j, k = np.triu_indices(len(pts), 1)
    dx = pts[k, 0] - pts[j, 0]
    dy = pts[k, 1] - pts[j, 1]
    flip = (dy < 0) | ((dy == 0) & (dx < 0))
    dx = np.where(flip, -dx, dx)
    dy = np.where(flip, -dy, dy)
    # theta orthogonal to (dx, dy) with dy >= 0 lies in [-pi/2, pi/2)
    ang = np.arctan2(-dx, dy)
    # events at the start of the sweep are absorbed into the initial order
    keep = ((dx != 0) | (dy != 0)) & (ang > -HALF_PI + ANGLE_TOL)
    ang, j, k = ang[keep], j[keep], k[keep]
    order = np.argsort(ang, kind="stable")
    return ang[order], j[order], k[order]


def _projection(pts: np.ndarray, theta: float) -> np.ndarray:
    return pts[:, 0] * math.cos(theta) + pts[:, 1] * math.sin(theta)


def _sweep(pts: np.ndarray, strict: bool):
    """Track which point occupies each rank of the sorted projections.

    Returns ``(rank, point, start)`` records: from angle ``start`` on (until
    the next record for the same rank), rank ``rank`` holds ``point``.
    Records for a given rank appear in increasing angle order.
    """
    n = len(pts)
    ang, ej, ek = _critical_angles(pts)
    if ang.size:
        first = np.flatnonzero(np.concatenate([[True], np.diff(ang) > ANGLE_TOL]))
    else:
        first = np.empty(0, dtype=np.intp)
    group_angle = ang[first].tolist()
    bounds = group_angle + [HALF_PI]
    group_start = first.tolist() + [ang.size]

    mid0 = (-HALF_PI + bounds[0]) / 2
    order_arr = np.argsort(_projection(pts, mid0), kind="stable")
    order = order_arr.tolist()
    pos = [0] * n
    for r, p in enumerate(order):
        pos[p] = r

    rec_rank = list(range(n))
    rec_point = list(order)
    rec_start = [-HALF_PI] * n
    ej, ek = ej.tolist(), ek.tolist()
    on_diag = (pts[:, 0] == pts[:, 1]).tolist()

    for g, theta in enumerate(group_angle):
        a, b = group_start[g], group_start[g + 1]
        if b - a == 1:
            p, q = ej[a], ek[a]
            i, r = pos[p], pos[q]
            if i - r == 1 or r - i == 1:
                order[i], order[r] = q, p
                pos[p], pos[q] = r, i
                rec_rank += (i, r)
                rec_point += (q, p)
                rec_start += (theta, theta)
                continue
            involved = {p, q}
        else:
            involved = set(ej[a:b]) | set(ek[a:b])
            if strict and not all(on_diag[p] for p in involved):
                raise DegeneracyError(
                    f"{b - a} simultaneous critical angles near {theta:.17g}; "
                    "perturb the diagrams into general position first"
                )
        # points sharing a projection at theta form contiguous runs of the
        # order; re-sorting the covering span at the middle of the next
        # interval yields the order that holds until the next event
        ranks = [pos[p] for p in involved]
        lo, hi = min(ranks), max(ranks) + 1
        block = order[lo:hi]
        mid = (theta + bounds[g + 1]) / 2
        keys = _projection(pts[block], mid)
        new = [block[t] for t in np.argsort(keys, kind="stable").tolist()]
        for off, (old_p, new_p) in enumerate(zip(block, new)):
            if old_p != new_p:
                r = lo + off
                order[r] = new_p
                pos[new_p] = r
                rec_rank.append(r)
                rec_point.append(new_p)
                rec_start.append(theta)

    rank = np.asarray(rec_rank, dtype=np.intp)
    by_rank = np.argsort(rank, kind="stable")
    return rank[by_rank], np.asarray(rec_point, dtype=np.intp)[by_rank], np.asarray(rec_start)[by_rank]


def _abs_cos_integral(lo, hi, vx, vy) -> np.ndarray:
    """``int_lo^hi |vx cos t + vy sin t| dt`` in closed form, elementwise.

    The integrand is ``|v| |cos(t - phi)|``. Sub-intervals where the cosine
    keeps its sign use ``sin(w) - sin(u)`` in product form; intervals that
    cross a zero of the cosine use the antiderivative
    ``G(x) = 2k + (-1)^k sin(x)``, ``k = floor(x/pi + 1/2)``, which adds up
    the pieces on either side of each crossing.
    """
    flip = (vx < 0) | ((vx == 0) & (vy < 0))
    vx = np.where(flip, -vx, vx)
    vy = np.where(flip, -vy, vy)
    norm = np.hypot(vx, vy)
    phi = np.arctan2(vy, vx)
    u = lo - phi
    w = hi - phi
    ku = np.floor(u / np.pi + 0.5)
    kw = np.floor(w / np.pi + 0.5)
    sign_u = 1.0 - 2.0 * np.mod(ku, 2)
    sign_w = 1.0 - 2.0 * np.mod(kw, 2)
    same = ku == kw
    direct = np.abs(2.0 * np.cos((u + w) / 2) * np.sin((w - u) / 2))
    across = (2 * kw + sign_w * np.sin(w)) - (2 * ku + sign_u * np.sin(u))
    return norm * np.where(same, direct, across)


def sw_exact(d1, d2, strict: bool = False) -> float:
    """Exact SW via an angular sweep over critical angles.

    Parameters
    ----------
    d1, d2 : PersistenceDiagram or array-like of shape (n, 2)
    strict : bool
        If True, raise :class:`DegeneracyError` when several critical
        angles coincide (three or more aligned points), except for alignments
        that only involve points on the diagonal. By default such groups are
        resolved exactly by re-ordering the aligned block.

    Notes
    -----
    Runs in ``O(n^2 log n)`` for ``n = |d1| + |d2|``.
    """
    a1, a2 = _augment(d1, d2)
    n = a1.shape[0]
    if n == 0:
        return 0.0
    r1, pt1, st1 = _sweep(a1, strict)
    r2, pt2, st2 = _sweep(a2, strict)
    cut1 = np.searchsorted(r1, np.arange(1, n))
    cut2 = np.searchsorted(r2, np.arange(1, n))
    los, his, vxs, vys = [], [], [], []
    for s1, p1, s2, p2 in zip(
        np.split(st1, cut1), np.split(pt1, cut1), np.split(st2, cut2), np.split(pt2, cut2)
    ):
        bps = np.union1d(s1, s2)
        i1 = np.searchsorted(s1, bps, side="right") - 1
        i2 = np.searchsorted(s2, bps, side="right") - 1
        v = a1[p1[i1]] - a2[p2[i2]]
        los.append(bps)
        his.append(np.append(bps[1:], HALF_PI))
        vxs.append(v[:, 0])
        vys.append(v[:, 1])
    pieces = _abs_cos_integral(
        np.concatenate(los), np.concatenate(his), np.concatenate(vxs), np.concatenate(vys)
    )
    return math.fsum(pieces) / np.pi


def sliced_wasserstein(d1, d2, mode: str = "exact", directions: int | None = None) -> SwResult:
    """Dispatch to one of the evaluators and tag the value with its method."""
    if mode == "exact":
        return SwResult(sw_exact(d1, d2), "exact")
    if mode == "approx":
        return SwResult(sw_approx(d1, d2, directions), "approx", int(directions))
    if mode == "numeric":
        return SwResult(sw_numeric_oracle(d1, d2, directions), "numeric", int(directions))
    raise ValueError(f"unknown SW mode {mode!r}")
