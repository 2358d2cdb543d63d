"""C-SVM on precomputed kernels, one-vs-one multiclass, and grid search.

The binary solver is SMO with second-order working set selection on the
dual problem

    min_a  1/2 a^T Q a - e^T a,   Q_ij = y_i y_j K_ij,
    s.t.   0 <= a_i <= C,  y^T a = 0,

stopping when the maximal KKT violation drops below `tol`.
"""

from __future__ import annotations

import itertools
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

__all__ = [
    "LabeledGram",
    "BinaryModel",
    "SvmModel",
    "C_GRID",
    "svm_train_binary",
    "svm_train",
    "svm_predict",
    "svm_predict_many",
    "dual_objective",
    "stratified_half_split",
    "grid_scores",
    "cross_validate",
]

C_GRID = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
_TAU = 1e-12


@dataclass
class LabeledGram:
    """Square matrix over training items plus one label per row.

    With ``is_distance=True`` the matrix holds diagram distances and Gram
    matrices are produced by ``exp(-D / (2 sigma^2))`` for each bandwidth.
    """

    values: np.ndarray
    labels: np.ndarray
    is_distance: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        n = self.labels.shape[0]
        if self.values.shape != (n, n):
            raise ValueError(f"{n} labels for a matrix of shape {self.values.shape}")

    def gram(self, sigma: float | None = None) -> np.ndarray:
        if not self.is_distance:
            return self.values
        if sigma is None or not sigma > 0:
            raise ValueError(f"distance matrix needs a positive sigma, got {sigma!r}")
        return np.exp(-self.values / (2.0 * sigma * sigma))


@dataclass
class BinaryModel:
    classes: tuple  # (label scored +1, label scored -1)
    alpha: np.ndarray
    y: np.ndarray
    bias: float
    objective: float
    iterations: int
    support: np.ndarray = field(init=False)
    dual_coef: np.ndarray = field(init=False)

    def __post_init__(self):
        self.support = np.flatnonzero(self.alpha > 0)
        self.dual_coef = self.alpha[self.support] * self.y[self.support]

    def decision(self, kernel_rows: np.ndarray) -> np.ndarray:
        """Decision values; `kernel_rows` has one column per training item."""
        return kernel_rows[..., self.support] @ self.dual_coef + self.bias


@dataclass
class SvmModel:
    classes: np.ndarray
    pairs: list  # (index of class a, index of class b, training indices, BinaryModel)
    n_train: int


def dual_objective(K: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    ya = y * alpha
    return float(0.5 * ya @ K @ ya - alpha.sum())


def _binary_targets(labels: np.ndarray):
    classes = np.unique(labels)
    if classes.size != 2:
        raise ValueError(f"binary training needs exactly 2 classes, got {classes.size}")
    y = np.where(labels == classes[0], 1.0, -1.0)
    return (classes[0], classes[1]), y


def _check_psd_warn(K: np.ndarray, tol: float) -> None:
    lam = float(np.linalg.eigvalsh((K + K.T) / 2)[0]) if K.size else 0.0
    if lam < -tol:
        warnings.warn(
            f"Gram matrix is not positive semi-definite (min eigenvalue {lam:.3g}); "
            "the SVM dual may be non-convex",
            RuntimeWarning,
            stacklevel=3,
        )


@numba.njit(cache=True)
def _smo(Q, y, C, tol, max_iter):
    n = y.size
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while it < max_iter:
        # maximal violating index i over I_up, smallest -yG over I_low
        i = -1
        m_up = -np.inf
        m_low = np.inf
        for t in range(n):
            v = -y[t] * G[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v > m_up:
                    m_up = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                if v < m_low:
                    m_low = v
        if i < 0 or m_up - m_low < tol:
            break
        # second-order choice of j
        j = -1
        best = np.inf
        step = 0.0
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                b = m_up + y[t] * G[t]
                if b > 0:
                    a = Q[i, i] + Q[t, t] - 2.0 * y[i] * y[t] * Q[i, t]
                    if a <= 0:
                        a = _TAU
                    score = -(b * b) / a
                    if score < best:
                        best = score
                        j = t
                        step = b / a
        if j < 0:
            break
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(step, lim_i, lim_j)
        di = y[i] * step
        dj = -y[j] * step
        alpha[i] = min(C, max(0.0, alpha[i] + di))
        alpha[j] = min(C, max(0.0, alpha[j] + dj))
        for t in range(n):
            G[t] += Q[t, i] * di + Q[t, j] * dj
        it += 1
    return alpha, G, it


def svm_train_binary(
    K,
    labels,
    C: float,
    tol: float = 1e-3,
    max_iter: int | None = None,
    psd_tol: float | None = 1e-8,
) -> BinaryModel:
    """Train a binary C-SVM on a precomputed kernel matrix.

    Parameters
    ----------
    K : (n, n) array
        Symmetric kernel matrix over the training items.
    labels : (n,) array
        Two distinct labels; the smaller one is scored positive.
    C : float
        Box constraint.
    tol : float
        Stopping tolerance on the maximal KKT violation.
    psd_tol : float or None
        Warn when the smallest eigenvalue of `K` is below ``-psd_tol``;
        ``None`` skips the check.
    """
    if not C > 0:
        raise ValueError(f"C must be positive, got {C!r}")
    K = np.asarray(K, dtype=np.float64)
    labels = np.asarray(labels)
    classes, y = _binary_targets(labels)
    n = y.size
    if K.shape != (n, n):
        raise ValueError(f"kernel shape {K.shape} does not match {n} labels")
    if psd_tol is not None:
        _check_psd_warn(K, psd_tol)
    if max_iter is None:
        max_iter = max(100_000, 100 * n)

    Q = (y[:, None] * y[None, :]) * K
    alpha, G, it = _smo(Q, y, float(C), float(tol), int(max_iter))
    if it >= max_iter:
        warnings.warn(f"SMO reached max_iter={max_iter} before convergence", RuntimeWarning)

    # bias from free vectors, else midpoint of the feasible interval
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (~at_upper & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub) and np.isfinite(lb) else 0.0
    objective = float(0.5 * alpha @ (G - 1.0))
    return BinaryModel(classes, alpha, y, -rho, objective, it)


def svm_train(K, labels, C: float, tol: float = 1e-3, psd_tol: float | None = 1e-8) -> SvmModel:
    """One-vs-one multiclass C-SVM (binary problems for every class pair)."""
    K = np.asarray(K, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("training needs at least 2 classes")
    if psd_tol is not None:
        _check_psd_warn(K, psd_tol)
    pairs = []
    for a, b in itertools.combinations(range(classes.size), 2):
        idx = np.flatnonzero((labels == classes[a]) | (labels == classes[b]))
        model = svm_train_binary(K[np.ix_(idx, idx)], labels[idx], C, tol, psd_tol=None)
        pairs.append((a, b, idx, model))
    return SvmModel(classes, pairs, labels.size)


def svm_predict_many(model: SvmModel | BinaryModel, kernel_rows) -> np.ndarray:
    """Predict labels for rows of kernel values against the training items."""
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=np.float64))
    if isinstance(model, BinaryModel):
        if rows.shape[1] != model.alpha.size:
            raise ValueError(f"kernel row has length {rows.shape[1]}, expected {model.alpha.size}")
        f = model.decision(rows)
        return np.where(f > 0, model.classes[0], model.classes[1])
    if rows.shape[1] != model.n_train:
        raise ValueError(f"kernel row has length {rows.shape[1]}, expected {model.n_train}")
    votes = np.zeros((rows.shape[0], model.classes.size), dtype=np.int64)
    for a, b, idx, binary in model.pairs:
        f = binary.decision(rows[:, idx])
        winner = np.where(f > 0, a, b)
        np.add.at(votes, (np.arange(rows.shape[0]), winner), 1)
    # argmax returns the lowest class index among tied vote counts
    return model.classes[np.argmax(votes, axis=1)]


def svm_predict(model: SvmModel | BinaryModel, kernel_row):
    """Predict the label of one item from its kernel values against the training set."""
    row = np.asarray(kernel_row, dtype=np.float64)
    if row.ndim != 1:
        raise ValueError("svm_predict takes a single kernel row")
    return svm_predict_many(model, row[None, :])[0]


def stratified_half_split(labels, rng: np.random.Generator):
    """Random 50/50 split within each class (odd classes give the extra item to training)."""
    labels = np.asarray(labels)
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            raise ValueError(f"class {c!r} has fewer than 2 members; cannot stratify")
        perm = rng.permutation(idx)
        h = (idx.size + 1) // 2
        train.append(perm[:h])
        test.append(perm[h:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def _fold_rng(seed: int, fold: int) -> np.random.Generator:
    return np.random.default_rng([seed, fold])


def _param_scores(gram: np.ndarray, labels, c_grid, splits, tol) -> list[float]:
    scores = []
    for C in c_grid:
        accs = []
        for train, test in splits:
            model = svm_train(gram[np.ix_(train, train)], labels[train], C, tol, psd_tol=None)
            pred = svm_predict_many(model, gram[np.ix_(test, train)])
            accs.append(float(np.mean(pred == labels[test])))
        scores.append(float(np.mean(accs)))
    return scores


def _scores_for_param(gram_for, param, labels, c_grid, splits, tol):
    return _param_scores(gram_for(param), labels, c_grid, splits, tol)


def grid_scores(
    gram_for: Callable,
    params: Sequence,
    labels,
    c_grid: Sequence[float] = C_GRID,
    folds: int = 10,
    seed: int = 0,
    tol: float = 1e-3,
    workers: int = 1,
) -> dict:
    """Mean held-out accuracy for every ``(C, param)`` combination.

    For each fold a stratified random 50/50 split is drawn from a stream
    seeded by ``(seed, fold)``; all combinations share the same splits.
    ``gram_for(param)`` returns the full Gram matrix for one kernel
    parameter. With ``workers > 1``, `gram_for` must be picklable.
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    labels = np.asarray(labels)
    splits = [stratified_half_split(labels, _fold_rng(seed, f)) for f in range(folds)]
    params = list(params)
    if workers > 1 and len(params) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_scores_for_param, gram_for, p, labels, c_grid, splits, tol) for p in params
            ]
            per_param = [f.result() for f in futures]
    else:
        per_param = [_scores_for_param(gram_for, p, labels, c_grid, splits, tol) for p in params]
    return {(C, p): per_param[k][c] for k, p in enumerate(params) for c, C in enumerate(c_grid)}


def _best(scores: dict):
    def key(item):
        (C, p), _ = item
        return (C, -np.inf if p is None else p)

    best, best_acc = None, -np.inf
    for combo, acc in sorted(scores.items(), key=key):
        if acc > best_acc:
            best, best_acc = combo, acc
    return best


def cross_validate(
    lg: LabeledGram,
    c_grid: Sequence[float] = C_GRID,
    sigma_grid: Sequence[float] | None = None,
    folds: int = 10,
    seed: int = 0,
    tol: float = 1e-3,
    workers: int = 1,
) -> tuple:
    """Select ``(C, sigma)`` by repeated stratified 50/50 splits.

    For a distance matrix every bandwidth is applied by re-exponentiating
    the cached distances. For a plain Gram, pass ``sigma_grid=None`` and
    the returned sigma is ``None``. Ties go to the smaller C, then the
    smaller sigma.
    """
    if lg.is_distance:
        if not sigma_grid:
            raise ValueError("a distance matrix needs a sigma grid")
        params = list(sigma_grid)
    else:
        params = [None]
    scores = grid_scores(lg.gram, params, lg.labels, c_grid, folds, seed, tol, workers)
    return _best(scores)
