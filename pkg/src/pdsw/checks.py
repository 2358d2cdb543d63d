"""Randomized property suites behind ``pdsw check``.

Every property reports its worst margin over the trials (bound minus
observed value; negative means violated). Failing properties dump their
worst counterexample into a failure directory: diagrams as ``.dgm`` files,
1-D measures as one atom per line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels as kn
from . import metrics as mt
from . import sliced as sl
from . import wasserstein as wl
from .datasets import random_diagram
from .diagrams import PersistenceDiagram, perturb_general_position, write_diagram

__all__ = ["SUITES", "PropertyResult", "run_suite", "dump_counterexample"]

SUITES = ("wasserstein", "sw", "kernels")


@dataclass
class PropertyResult:
    name: str
    worst_margin: float = math.inf
    trials: int = 0
    counterexample: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.worst_margin >= 0

    def update(self, margin: float, **objects) -> None:
        self.trials += 1
        if margin < self.worst_margin or not self.counterexample:
            if margin < self.worst_margin:
                self.worst_margin = float(margin)
            self.counterexample = objects

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst margin {self.worst_margin:.3e} over {self.trials} trials"


def _measure_pair(rng: np.random.Generator, max_atoms: int = 6):
    n = int(rng.integers(1, max_atoms + 1))
    return rng.normal(size=n) * rng.uniform(0.1, 10), rng.normal(size=n) * rng.uniform(0.1, 10)


def _diagram_pair(rng, max_points: int = 8):
    return random_diagram(rng, max_points, 1), random_diagram(rng, max_points, 1)


def _zero_sum(rng, n: int) -> np.ndarray:
    a = rng.normal(size=n)
    return a - a.mean()


def _cnd_margin(dist: np.ndarray, a: np.ndarray, tol: float) -> float:
    return tol - float(a @ dist @ a)


def wasserstein_suite(trials: int, rng: np.random.Generator) -> list[PropertyResult]:
    oracle = PropertyResult("sorted W1 matches assignment oracle (tol 1e-9)")
    translation = PropertyResult("W1 invariant under common translation (tol 1e-9)")
    triangle = PropertyResult("W1 triangle inequality (tol 1e-9)")
    for _ in range(trials):
        mu, nu = _measure_pair(rng)
        w = wl.w1_sorted(mu, nu)
        oracle.update(1e-9 - abs(w - wl.w1_assignment_oracle(mu, nu)), mu=mu, nu=nu)
        shift = rng.normal() * 10
        translation.update(1e-9 * max(1.0, w) - abs(wl.w1_sorted(mu + shift, nu + shift) - w), mu=mu, nu=nu)
        xi = rng.normal(size=len(mu)) * rng.uniform(0.1, 10)
        bound = wl.w1_sorted(mu, xi) + wl.w1_sorted(xi, nu)
        triangle.update(bound + 1e-9 - w, mu=mu, nu=nu, xi=xi)
    return [oracle, translation, triangle]


def sw_suite(trials: int, rng: np.random.Generator) -> list[PropertyResult]:
    stability = PropertyResult("SW <= 2 sqrt(2) d1 (tol 1e-9)")
    discrim = PropertyResult("d1 / (2 (1 + 2N(2N-1))) <= SW (tol 1e-9)")
    symmetry = PropertyResult("SW symmetric (exact, bitwise)")
    neutral = PropertyResult("diagonal points do not change SW (tol 1e-9)")
    ratio = PropertyResult("approx(M=100) within 0.5% of exact")
    cnd = PropertyResult("SW conditionally negative definite (tol 1e-8)")
    oracle = PropertyResult("exact sweep matches midpoint oracle M=1e4 (tol 1e-3)")
    for t in range(trials):
        d1, d2 = _diagram_pair(rng)
        sw = sl.sw_exact(d1, d2)
        dd = mt.diagram_distance(d1, d2, 1, size_cap=None)
        stability.update(2 * math.sqrt(2) * dd + 1e-9 - sw, d1=d1, d2=d2)
        n = 2 * max(len(d1), len(d2))
        discrim.update(sw + 1e-9 - dd / (2 * (1 + n * (n - 1))), d1=d1, d2=d2)
        symmetry.update(0.0 if sl.sw_exact(d2, d1) == sw else -abs(sl.sw_exact(d2, d1) - sw), d1=d1, d2=d2)
        c = rng.uniform(0, 2)
        padded = PersistenceDiagram(np.vstack([d1.points, [[c, c]]]))
        neutral.update(1e-9 - abs(sl.sw_exact(padded, d2) - sw), d1=d1, d2=d2)
        if sw > 1e-9:
            ratio.update(0.005 - abs(sl.sw_approx(d1, d2, 100) / sw - 1), d1=d1, d2=d2)
        if t % 10 == 0:
            fam = [random_diagram(rng, 6) for _ in range(int(rng.integers(2, 7)))]
            dist = kn.pairwise_matrix(fam, sl.sw_exact, workers=1, include_diagonal=False)
            cnd.update(_cnd_margin(dist, _zero_sum(rng, len(fam)), 1e-8), **{f"d{i}": d for i, d in enumerate(fam)})
            g1 = perturb_general_position(random_diagram(rng, 6), 1e-6, int(rng.integers(1 << 31)))
            g2 = perturb_general_position(random_diagram(rng, 6), 1e-6, int(rng.integers(1 << 31)))
            ex = sl.sw_exact(g1, g2)
            oracle.update(1e-3 * max(1.0, ex) - abs(ex - sl.sw_numeric_oracle(g1, g2, 10_000)), d1=g1, d2=g2)
    return [stability, discrim, symmetry, neutral, ratio, cnd, oracle]


def kernels_suite(trials: int, rng: np.random.Generator) -> list[PropertyResult]:
    psd = PropertyResult("k_SW Gram PSD over the sigma grid (tol 1e-8)")
    unit = PropertyResult("RBF kernels: k(d, d) = 1 and 0 < k <= 1")
    pss_sym = PropertyResult("k_PSS symmetric (tol 1e-12)")
    triangle = PropertyResult("SW RKHS distance triangle inequality (tol 1e-9)")
    for t in range(max(1, trials // 10)):
        fam = [random_diagram(rng, 8) for _ in range(int(rng.integers(2, 11)))]
        dist = kn.pairwise_matrix(fam, sl.sw_exact, workers=1, include_diagonal=False)
        positive = dist[np.triu_indices(len(fam), 1)]
        if np.any(positive > 0):
            for sigma in kn.sw_sigma_grid(positive):
                lam, _ = kn.check_psd(kn.rbf_from_distances(dist, sigma))
                psd.update(lam + 1e-8, **{f"d{i}": d for i, d in enumerate(fam)})
    specs = [
        kn.KernelSpec.sw(1.0),
        kn.KernelSpec.pwg(1.0, 1.0, 1.0, 1.0),
        kn.KernelSpec.gauss_d1(1.0, size_cap=None),
    ]
    for _ in range(trials):
        d1, d2 = _diagram_pair(rng)
        for spec in specs:
            self_k = kn.evaluate_kernel(spec, d1, d1)
            k12 = kn.evaluate_kernel(spec, d1, d2)
            margin = min(1e-12 - abs(self_k - 1), k12, 1 - k12 + 1e-15)
            unit.update(margin, d1=d1, d2=d2)
        t_ = float(rng.uniform(0.01, 2))
        pss_sym.update(1e-12 - abs(kn.k_pss(d1, d2, t_) - kn.k_pss(d2, d1, t_)), d1=d1, d2=d2)
        d3 = random_diagram(rng, 8)
        spec = specs[0]
        a, b, c = (kn.rkhs_distance(spec, x, y) for x, y in ((d1, d2), (d1, d3), (d3, d2)))
        triangle.update(b + c + 1e-9 - a, d1=d1, d2=d2, d3=d3)
    return [psd, unit, pss_sym, triangle]


_RUNNERS = {"wasserstein": wasserstein_suite, "sw": sw_suite, "kernels": kernels_suite}


def run_suite(suite: str, trials: int = 100, seed: int = 0) -> list[PropertyResult]:
    """Run one suite (or ``"all"``) with a generator seeded by ``(seed, suite)``."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    names = SUITES if suite == "all" else (suite,)
    results = []
    for name in names:
        if name not in _RUNNERS:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
        results += _RUNNERS[name](trials, np.random.default_rng([seed, SUITES.index(name)]))
    return results


def _slug(name: str) -> str:
    keep = [ch if ch.isalnum() else "_" for ch in name.lower()]
    return "_".join(filter(None, "".join(keep).split("_")))[:60]


def dump_counterexample(result: PropertyResult, directory) -> Path:
    """Write the worst counterexample of `result` under `directory`."""
    out = Path(directory) / _slug(result.name)
    out.mkdir(parents=True, exist_ok=True)
    for key, obj in result.counterexample.items():
        if isinstance(obj, PersistenceDiagram):
            write_diagram(obj, out / f"{key}.dgm")
        else:
            atoms = np.asarray(obj, dtype=np.float64).ravel()
            (out / f"{key}.txt").write_text("".join(f"{v:.17g}\n" for v in atoms), encoding="utf-8")
    return out
