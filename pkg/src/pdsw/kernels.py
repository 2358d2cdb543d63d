"""Kernels on persistence diagrams and the pairwise Gram engine.

Families
--------
``sw``        exp(-SW / (2 sigma^2)), SW exact or approximated
``pss``       persistence scale space (heat diffusion) kernel
``pwg``       persistence weighted Gaussian kernel
``gauss-d1``  exp(-d1 / (2 sigma^2)); not positive definite in general
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .diagrams import as_diagram
from .metrics import DEFAULT_SIZE_CAP, diagram_distance
from .sliced import sw_approx, sw_exact

__all__ = [
    "FAMILIES",
    "KernelSpec",
    "GramMatrix",
    "k_sw",
    "k_pss",
    "k_pwg",
    "k_gauss_d1",
    "rbf_from_distances",
    "evaluate_kernel",
    "rkhs_distance",
    "nearest_rank_quantile",
    "sw_sigma_grid",
    "SIGMA_FACTORS",
    "pairwise_matrix",
    "distance_matrix",
    "gram_matrix",
    "check_psd",
    "default_workers",
]

FAMILIES = ("sw", "pss", "pwg", "gauss-d1")
SIGMA_FACTORS = (0.01, 0.1, 1.0, 10.0, 100.0)


def _positive(name: str, value) -> float:
    if value is None or not value > 0 or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its parameters.

    Only the parameters of the selected family are used. Construct through
    the classmethods for readability, e.g. ``KernelSpec.sw(1.0, "approx", 6)``.
    """

    family: str
    sigma: float | None = None
    mode: str = "exact"
    directions: int | None = None
    t: float | None = None
    K: float | None = None
    p: float | None = None
    rho: float | None = None
    tau: float | None = None
    squared: bool = False
    size_cap: int | None = field(default=DEFAULT_SIZE_CAP, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.family in ("sw", "gauss-d1"):
            _positive("sigma", self.sigma)
        if self.family == "sw":
            if self.mode not in ("exact", "approx"):
                raise ValueError(f"SW mode must be 'exact' or 'approx', got {self.mode!r}")
            if self.mode == "approx" and (self.directions is None or self.directions < 1):
                raise ValueError("approximate SW needs directions >= 1")
        if self.family == "pss":
            _positive("t", self.t)
        if self.family == "pwg":
            for name in ("K", "p", "rho", "tau"):
                _positive(name, getattr(self, name))

    @classmethod
    def sw(cls, sigma: float, mode: str = "exact", directions: int | None = None) -> "KernelSpec":
        return cls("sw", sigma=sigma, mode=mode, directions=directions)

    @classmethod
    def pss(cls, t: float) -> "KernelSpec":
        return cls("pss", t=t)

    @classmethod
    def pwg(cls, K: float, p: float, rho: float, tau: float, squared: bool = False) -> "KernelSpec":
        return cls("pwg", K=K, p=p, rho=rho, tau=tau, squared=squared)

    @classmethod
    def gauss_d1(cls, sigma: float, size_cap: int | None = DEFAULT_SIZE_CAP) -> "KernelSpec":
        return cls("gauss-d1", sigma=sigma, size_cap=size_cap)

    @property
    def distance_based(self) -> bool:
        """True when the kernel is an RBF of a cacheable diagram distance."""
        return self.family in ("sw", "gauss-d1")

    def distance(self, d1, d2) -> float:
        if self.family == "sw":
            if self.mode == "exact":
                return sw_exact(d1, d2)
            return sw_approx(d1, d2, self.directions)
        if self.family == "gauss-d1":
            return diagram_distance(d1, d2, 1, size_cap=self.size_cap)
        raise ValueError(f"{self.family} is not distance based")

    def with_sigma(self, sigma: float) -> "KernelSpec":
        return KernelSpec(**{**self.__dict__, "sigma": sigma})


@dataclass
class GramMatrix:
    ids: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = len(self.ids)
        if self.values.shape != (n, n):
            raise ValueError(f"{n} ids but values have shape {self.values.shape}")

    def __len__(self) -> int:
        return len(self.ids)


def rbf_from_distances(dist, sigma: float) -> np.ndarray:
    """``exp(-dist / (2 sigma^2))`` elementwise."""
    sigma = _positive("sigma", sigma)
    return np.exp(-np.asarray(dist, dtype=np.float64) / (2.0 * sigma * sigma))


def k_sw(d1, d2, sigma: float, mode: str = "exact", directions: int | None = None) -> float:
    """Sliced Wasserstein kernel; SW enters the exponent to the first power."""
    spec = KernelSpec.sw(sigma, mode, directions)
    return float(rbf_from_distances(spec.distance(d1, d2), sigma))


def k_pss(d1, d2, t: float) -> float:
    """Persistence scale space kernel.

    ``1/(8 pi t) sum_p sum_q exp(-|p-q|^2 / 8t) - exp(-|p-qbar|^2 / 8t)``
    where ``qbar`` is ``q`` mirrored across the diagonal.
    """
    t = _positive("t", t)
    p1, p2 = as_diagram(d1).points, as_diagram(d2).points
    if len(p1) == 0 or len(p2) == 0:
        return 0.0
    mirror = p2[:, ::-1]
    sq = ((p1[:, None, :] - p2[None, :, :]) ** 2).sum(axis=2)
    sq_bar = ((p1[:, None, :] - mirror[None, :, :]) ** 2).sum(axis=2)
    total = np.exp(-sq / (8 * t)) - np.exp(-sq_bar / (8 * t))
    return float(total.sum() / (8 * np.pi * t))


def _pwg_weights(pts: np.ndarray, K: float, p: float) -> np.ndarray:
    return np.arctan(K * (pts[:, 1] - pts[:, 0]) ** p)


def _gauss_block(a: np.ndarray, b: np.ndarray, rho: float) -> np.ndarray:
    sq = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-sq / (2 * rho * rho))


def k_pwg(d1, d2, K: float, p: float, rho: float, tau: float, squared: bool = False) -> float:
    """Persistence weighted Gaussian kernel.

    Diagrams are embedded as ``sum_x arctan(K pers(x)^p) k_rho(., x)`` in the
    RKHS of a Gaussian kernel of width `rho`; the result is
    ``exp(-||mu1 - mu2|| / (2 tau^2))``, or with the squared norm when
    `squared` is set.
    """
    for name, value in (("K", K), ("p", p), ("rho", rho), ("tau", tau)):
        _positive(name, value)
    p1, p2 = as_diagram(d1).points, as_diagram(d2).points
    w1, w2 = _pwg_weights(p1, K, p), _pwg_weights(p2, K, p)
    sq = w1 @ _gauss_block(p1, p1, rho) @ w1 + w2 @ _gauss_block(p2, p2, rho) @ w2
    sq -= 2 * (w1 @ _gauss_block(p1, p2, rho) @ w2)
    sq = max(0.0, float(sq))
    dist = sq if squared else math.sqrt(sq)
    return math.exp(-dist / (2 * tau * tau))


def k_gauss_d1(d1, d2, sigma: float, size_cap: int | None = DEFAULT_SIZE_CAP) -> float:
    """RBF of the first diagram distance. Diagnostic baseline only."""
    return float(rbf_from_distances(diagram_distance(d1, d2, 1, size_cap=size_cap), sigma))


def evaluate_kernel(spec: KernelSpec, d1, d2) -> float:
    if spec.distance_based:
        return float(rbf_from_distances(spec.distance(d1, d2), spec.sigma))
    if spec.family == "pss":
        return k_pss(d1, d2, spec.t)
    return k_pwg(d1, d2, spec.K, spec.p, spec.rho, spec.tau, spec.squared)


def rkhs_distance(spec: KernelSpec, d1, d2) -> float:
    """Distance between the feature-space embeddings of two diagrams."""
    k11 = evaluate_kernel(spec, d1, d1)
    k22 = evaluate_kernel(spec, d2, d2)
    k12 = evaluate_kernel(spec, d1, d2)
    return math.sqrt(max(0.0, k11 + k22 - 2.0 * k12))


def nearest_rank_quantile(values, q: float) -> float:
    """Inclusive nearest-rank quantile: the ``ceil(q n)``-th smallest value."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise ValueError("quantile of an empty sample")
    # rounding keeps products such as 0.1 * 30 from landing one rank too high
    rank = max(1, math.ceil(round(q * x.size, 9)))
    return float(x[rank - 1])


def sw_sigma_grid(pairwise_sw: Sequence[float], factors=SIGMA_FACTORS) -> list[float]:
    """Bandwidth grid from the first decile, median and last decile of SW values.

    Each of the three quantiles is square-rooted and multiplied by every
    factor; nonpositive candidates are dropped.
    """
    values = np.asarray(pairwise_sw, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("need at least one SW value to build a sigma grid")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("SW values must be finite and nonnegative")
    roots = [math.sqrt(nearest_rank_quantile(values, q)) for q in (0.1, 0.5, 0.9)]
    grid = sorted(r * f for r in roots for f in factors)
    grid = [g for g in grid if g > 0]
    if not grid:
        raise ValueError("all SW quantiles are zero; no valid bandwidth")
    return grid


# ---------------------------------------------------------------------------
# pairwise engine


def default_workers() -> int:
    env = os.environ.get("PDSW_WORKERS")
    if env:
        workers = int(env)
        if workers < 1:
            raise ValueError(f"PDSW_WORKERS must be >= 1, got {env!r}")
        return workers
    return 1


def _eval_chunk(fn, diagrams, pairs):
    out = np.empty(len(pairs))
    for n, (i, j) in enumerate(pairs):
        try:
            out[n] = fn(diagrams[i], diagrams[j])
        except Exception as exc:
            kind = ValueError if isinstance(exc, ValueError) else RuntimeError
            raise kind(f"evaluation failed on pair ({i}, {j}): {exc}") from exc
    return out


def pairwise_matrix(
    diagrams: Sequence,
    fn: Callable,
    workers: int | None = None,
    include_diagonal: bool = True,
    diagonal_value: float = 0.0,
) -> np.ndarray:
    """Symmetric matrix ``M[i, j] = fn(d_i, d_j)`` over the upper triangle.

    Each unordered pair is evaluated once and mirrored. With more than one
    worker the pair list is cut into contiguous chunks evaluated in a
    process pool; entries do not depend on the schedule. `fn` must be
    picklable when ``workers > 1``.
    """
    diagrams = [as_diagram(d) for d in diagrams]
    n = len(diagrams)
    k = 0 if include_diagonal else 1
    rows, cols = np.triu_indices(n, k)
    pairs = list(zip(rows.tolist(), cols.tolist()))
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(pairs) < 2:
        vals = _eval_chunk(fn, diagrams, pairs)
    else:
        n_chunks = min(len(pairs), 4 * workers)
        bounds = np.linspace(0, len(pairs), n_chunks + 1).astype(int)
        chunks = [pairs[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_eval_chunk, [fn] * len(chunks), [diagrams] * len(chunks), chunks))
        vals = np.concatenate(parts) if parts else np.empty(0)
    mat = np.full((n, n), float(diagonal_value))
    mat[rows, cols] = vals
    mat[cols, rows] = vals
    return mat


def _sw_exact_pair(a, b):
    return sw_exact(a, b)


def _d1_pair(a, b, size_cap):
    return diagram_distance(a, b, 1, size_cap=size_cap)


def distance_matrix(
    diagrams: Sequence,
    metric: str = "sw-exact",
    directions: int | None = None,
    workers: int | None = None,
    size_cap: int | None = DEFAULT_SIZE_CAP,
) -> np.ndarray:
    """Pairwise diagram distances with a zero diagonal.

    `metric` is one of ``"sw-exact"``, ``"sw-approx"`` (needs `directions`)
    or ``"d1"``.
    """
    if metric == "sw-exact":
        fn = _sw_exact_pair
    elif metric == "sw-approx":
        if directions is None:
            raise ValueError("sw-approx needs a direction count")
        fn = partial(sw_approx, directions=directions)
    elif metric == "d1":
        fn = partial(_d1_pair, size_cap=size_cap)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return pairwise_matrix(diagrams, fn, workers, include_diagonal=False)


def _spec_distance_matrix(diagrams, spec: KernelSpec, workers) -> np.ndarray:
    if spec.family == "sw":
        metric = "sw-exact" if spec.mode == "exact" else "sw-approx"
        return distance_matrix(diagrams, metric, spec.directions, workers)
    return distance_matrix(diagrams, "d1", workers=workers, size_cap=spec.size_cap)


def gram_matrix(
    diagrams: Sequence,
    spec: KernelSpec,
    workers: int | None = None,
    distances: np.ndarray | None = None,
    ids: Sequence | None = None,
) -> GramMatrix:
    """Kernel matrix over a diagram collection.

    For distance-based families the distance matrix is computed once (or
    taken from `distances`) and exponentiated, so sweeping ``sigma`` only
    costs one ``exp`` per entry.
    """
    diagrams = [as_diagram(d) for d in diagrams]
    if ids is None:
        ids = [d.id if d.id is not None else str(i) for i, d in enumerate(diagrams)]
    if spec.distance_based:
        if distances is None:
            distances = _spec_distance_matrix(diagrams, spec, workers)
        values = rbf_from_distances(distances, spec.sigma)
    else:
        values = pairwise_matrix(diagrams, partial(evaluate_kernel, spec), workers)
    return GramMatrix(list(ids), values)


def check_psd(g, tol: float = 1e-8) -> tuple[float, bool]:
    """Smallest eigenvalue of a symmetric matrix and whether it is ``>= -tol``.

    Uses Lanczos iterations (ARPACK) for the extreme eigenvalue; small
    matrices and non-converged runs fall back to a dense solve.
    """
    values = g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {values.shape}")
    if values.size == 0:
        return 0.0, True
    asym = float(np.abs(values - values.T).max())
    if asym > 1e-9:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    sym = (values + values.T) / 2
    n = sym.shape[0]
    lam = None
    if n > 16:
        try:
            lam = float(eigsh(sym, k=1, which="SA", tol=1e-10, return_eigenvectors=False)[0])
        except ArpackNoConvergence:
            warnings.warn("ARPACK did not converge; using a dense eigen-solve", RuntimeWarning)
    if lam is None:
        lam = float(np.linalg.eigvalsh(sym)[0])
    return lam, lam >= -tol
