"""Command-line interface: ``pdsw <command> ...``.

Exit codes: 0 success, 1 property failure, 2 I/O or parse error,
3 precondition violation.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import checks
from .bench import approximation_ratios, benchmark
from .datasets import ORBIT_LABELS, generate_orbit_dataset, write_orbit_dataset
from .diagrams import DiagramFormatError, read_diagram
from .kernels import (
    FAMILIES,
    SIGMA_FACTORS,
    KernelSpec,
    default_workers,
    distance_matrix,
    gram_matrix,
)
from .metrics import bottleneck, diagram_distance
from .pipeline import classify_distances, classify_grams
from .sliced import sw_approx, sw_exact
from .svm import C_GRID

EXIT_OK, EXIT_PROPERTY, EXIT_IO, EXIT_PRECONDITION = 0, 1, 2, 3
METRICS = ("sw-exact", "sw-approx", "d1", "dp", "bottleneck")


class InputFormatError(Exception):
    """Malformed CSV or manifest input."""


# ---------------------------------------------------------------------------
# helpers


def _positive_int(name: str, value) -> None:
    if value is not None and value < 1:
        raise ValueError(f"--{name} must be >= 1, got {value}")


def _positive_floats(name: str, values) -> None:
    for v in values or ():
        if not v > 0 or not np.isfinite(v):
            raise ValueError(f"--{name} values must be finite and positive, got {v}")


def _workers(args) -> int:
    if args.workers is None:
        return default_workers()
    _positive_int("workers", args.workers)
    return args.workers


def _size_cap(args):
    return None if args.size_cap == 0 else args.size_cap


def _read_inputs(directory, clamp_essential):
    """Diagrams under `directory` with their ids and optional labels.

    A ``manifest.tsv`` fixes order and labels; otherwise every ``*.dgm``
    below the directory is read in sorted path order.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    manifest = directory / "manifest.tsv"
    if manifest.exists():
        with open(manifest, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh, delimiter="\t"))
        if rows and not {"path", "label"} <= set(rows[0]):
            raise InputFormatError(f"{manifest}: needs 'path' and 'label' columns")
        paths = [r["path"] for r in rows]
        try:
            labels = [float(r["label"]) for r in rows]
        except ValueError as exc:
            raise InputFormatError(f"{manifest}: {exc}") from None
    else:
        paths = sorted(p.relative_to(directory).as_posix() for p in directory.rglob("*.dgm"))
        labels = None
    if not paths:
        raise InputFormatError(f"no .dgm files in {directory}")
    diagrams, ids = [], []
    for rel in paths:
        try:
            dgm = read_diagram(directory / rel, clamp_essential=clamp_essential)
        except DiagramFormatError as exc:
            raise DiagramFormatError(f"{rel}: {exc}", exc.line) from None
        ids.append(rel[: -len(".dgm")] if rel.endswith(".dgm") else rel)
        dgm.id = ids[-1]
        diagrams.append(dgm)
    return diagrams, ids, labels


def _fmt17(v: float) -> str:
    return format(float(v), ".17g")


def write_matrix_csv(path, ids, values) -> None:
    """``id,<ids>`` header, then one ``<id>,v1,...,vn`` row per id."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["id", *ids]) + "\n")
        for i, row in zip(ids, np.asarray(values)):
            fh.write(",".join([i, *map(_fmt17, row)]) + "\n")


def read_matrix_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["id"]:
        raise InputFormatError(f"{path}: first line must start with 'id'")
    ids = rows[0][1:]
    if len(rows) - 1 != len(ids) or [r[0] for r in rows[1:] if r] != ids:
        raise InputFormatError(f"{path}: row ids must match the header")
    try:
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    if values.shape != (len(ids), len(ids)):
        raise InputFormatError(f"{path}: expected a {len(ids)}x{len(ids)} matrix")
    return ids, values


def read_labels(path) -> dict:
    """``id,label`` per line; labels are parsed as numbers when possible."""
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise InputFormatError(f"{path}:{lineno}: expected 'id,label'")
            try:
                out[row[0]] = float(row[1])
            except ValueError:
                out[row[0]] = row[1]
    return out


def _spec_from_args(args, sigma=None) -> KernelSpec:
    family = args.kernel
    if family == "sw":
        return KernelSpec.sw(sigma if sigma is not None else args.sigma, args.mode, args.directions)
    if family == "gauss-d1":
        return KernelSpec.gauss_d1(sigma if sigma is not None else args.sigma, _size_cap(args))
    if family == "pss":
        return KernelSpec.pss(args.t)
    return KernelSpec.pwg(args.pwg_K, args.pwg_p, args.rho, args.tau, args.pwg_squared)


def _distance_metric(args) -> str:
    if args.kernel == "sw":
        return "sw-exact" if args.mode == "exact" else "sw-approx"
    return "d1"


# ---------------------------------------------------------------------------
# commands


def cmd_dist(args) -> int:
    if args.metric == "sw-approx" and args.directions is None:
        raise ValueError("--metric sw-approx needs --directions")
    _positive_int("directions", args.directions)
    d1 = read_diagram(args.a, clamp_essential=args.clamp_essential)
    d2 = read_diagram(args.b, clamp_essential=args.clamp_essential)
    cap = _size_cap(args)
    if args.metric == "sw-exact":
        value = sw_exact(d1, d2)
    elif args.metric == "sw-approx":
        value = sw_approx(d1, d2, args.directions)
    elif args.metric == "d1":
        value = diagram_distance(d1, d2, 1, size_cap=cap)
    elif args.metric == "dp":
        if args.p is None:
            raise ValueError("--metric dp needs --p")
        value = diagram_distance(d1, d2, args.p, size_cap=cap)
    else:
        value = bottleneck(d1, d2, size_cap=cap)
    print(format(value, ".12g"))
    return EXIT_OK


def cmd_gram(args) -> int:
    workers = _workers(args)
    diagrams, ids, _ = _read_inputs(args.input, args.clamp_essential)
    spec = _spec_from_args(args)
    if args.emit_distances and not spec.distance_based:
        raise ValueError(f"--emit-distances needs a distance-based kernel, not {args.kernel}")
    t0 = time.perf_counter()
    dist = None
    if spec.distance_based:
        dist = distance_matrix(diagrams, _distance_metric(args), args.directions, workers, _size_cap(args))
    gram = gram_matrix(diagrams, spec, workers, distances=dist, ids=ids)
    elapsed = time.perf_counter() - t0
    write_matrix_csv(args.out, ids, gram.values)
    if args.emit_distances:
        write_matrix_csv(args.emit_distances, ids, dist)
    print(f"wrote {len(ids)}x{len(ids)} Gram matrix to {args.out}")
    # timing goes to stderr so stdout stays reproducible
    print(f"pairwise computation: {elapsed:.3f} s", file=sys.stderr)
    return EXIT_OK


def cmd_orbits(args) -> int:
    workers = _workers(args)
    items = generate_orbit_dataset(
        args.seed, args.per_class, args.points, ORBIT_LABELS, args.include_seed, workers=workers
    )
    manifest = write_orbit_dataset(items, args.out)
    print(
        f"wrote {len(items)} diagrams ({len(ORBIT_LABELS)} classes x {args.per_class} orbits, "
        f"{args.points} points each, seed {args.seed}); manifest: {manifest}"
    )
    return EXIT_OK


def _param_grams(args, diagrams, workers) -> dict:
    if args.kernel == "pss":
        grid = args.t_grid
        _positive_floats("t-grid", grid)
        return {t: gram_matrix(diagrams, KernelSpec.pss(t), workers).values for t in grid}
    _positive_floats("rho-grid", args.rho_grid)
    _positive_floats("tau-grid", args.tau_grid)
    out = {}
    for rho in args.rho_grid:
        for tau in args.tau_grid:
            spec = KernelSpec.pwg(args.pwg_K, args.pwg_p, rho, tau, args.pwg_squared)
            out[(rho, tau)] = gram_matrix(diagrams, spec, workers).values
    return out


def _labels_for(ids, path) -> np.ndarray:
    table = read_labels(path)
    missing = [i for i in ids if i not in table]
    if missing:
        raise InputFormatError(f"{path}: no label for {missing[0]!r}")
    return np.array([table[i] for i in ids])


def cmd_classify(args) -> int:
    workers = _workers(args)
    for name in ("runs", "folds"):
        _positive_int(name, getattr(args, name))
    _positive_floats("c-grid", args.c_grid)
    _positive_floats("sigma-factors", args.sigma_factors)
    common = dict(
        runs=args.runs,
        seed=args.seed,
        test_fraction=args.test_fraction,
        c_grid=tuple(args.c_grid),
        folds=args.folds,
        workers=workers,
        shuffle_labels=args.shuffle_labels,
    )
    if args.gram or args.distances:
        if not args.labels:
            raise ValueError("--gram and --distances need --labels")
        ids, values = read_matrix_csv(args.gram or args.distances)
        labels = _labels_for(ids, args.labels)
        if args.gram:
            report = classify_grams({None: values}, labels, **common)
        else:
            report = classify_distances(values, labels, sigma_factors=tuple(args.sigma_factors), **common)
        name = "precomputed"
    else:
        if not args.dataset:
            raise ValueError("give a dataset directory, or --gram/--distances with --labels")
        diagrams, ids, labels = _read_inputs(args.dataset, args.clamp_essential)
        if args.labels:
            labels = _labels_for(ids, args.labels)
        if labels is None:
            raise ValueError("dataset has no manifest.tsv; pass --labels")
        labels = np.asarray(labels)
        if args.kernel in ("sw", "gauss-d1"):
            if args.kernel == "sw" and args.mode == "approx":
                _positive_int("directions", args.directions)
                if args.directions is None:
                    raise ValueError("approximate SW needs --directions")
            dist = distance_matrix(diagrams, _distance_metric(args), args.directions, workers, _size_cap(args))
            report = classify_distances(dist, labels, sigma_factors=tuple(args.sigma_factors), **common)
        else:
            report = classify_grams(_param_grams(args, diagrams, workers), labels, **common)
        name = {"sw": f"k_SW ({args.mode}{'' if args.mode == 'exact' else f', M={args.directions}'})",
                "gauss-d1": "Gaussian on d1", "pss": "k_PSS", "pwg": "k_PWG"}[args.kernel]
    for run, (acc, (C, param)) in enumerate(zip(report.accuracies, report.selected)):
        print(f"run {run}: accuracy {100 * acc:.2f}%  C={C:g}  param={param!r}")
    print(f"{name}{' [shuffled labels]' if args.shuffle_labels else ''} {report.format()}")
    return EXIT_OK


def cmd_check(args) -> int:
    _positive_int("trials", args.trials)
    results = checks.run_suite(args.suite, args.trials, args.seed)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r.line())
    for r in failed:
        where = checks.dump_counterexample(r, args.failure_dir)
        print(f"counterexample for '{r.name}' written to {where}")
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return EXIT_PROPERTY if failed else EXIT_OK


def cmd_bench(args) -> int:
    _positive_int("repeats", args.repeats)
    _positive_int("pairs", args.pairs)
    for v in args.sizes:
        _positive_int("sizes", v)
    for v in args.directions:
        _positive_int("directions", v)
    print("method\tN\tM\tmedian_seconds")
    for row in benchmark(args.sizes, args.directions, args.repeats, args.seed):
        m = "-" if row.directions is None else row.directions
        print(f"{row.method}\t{row.size}\t{m}\t{row.median_seconds:.6g}")
    print()
    print("M\tpairs\tratio_mean\tratio_min\tratio_max\tmax_abs_error")
    for r in approximation_ratios(args.directions, args.pairs, max(args.sizes), args.seed):
        print(f"{r.directions}\t{r.pairs}\t{r.mean:.6f}\t{r.min:.6f}\t{r.max:.6f}\t{r.max_abs_error:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_kernel_args(p, default_kernel="sw"):
    p.add_argument("--kernel", choices=FAMILIES, default=default_kernel)
    p.add_argument("--mode", choices=("exact", "approx"), default="exact", help="SW evaluation mode")
    p.add_argument("--directions", type=int, help="direction count M for approximate SW")
    p.add_argument("--size-cap", type=int, default=64, help="d1 matching size guard; 0 disables")
    p.add_argument("--pwg-K", type=float, default=1.0)
    p.add_argument("--pwg-p", type=float, default=1.0)
    p.add_argument("--pwg-squared", action="store_true", help="use the squared embedding norm")


def _add_common(p, workers=True):
    p.add_argument("--clamp-essential", type=float, metavar="VALUE", help="replace inf deaths by VALUE")
    if workers:
        p.add_argument("--workers", type=int, help="worker processes (default: $PDSW_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdsw", description="Sliced Wasserstein kernels for persistence diagrams")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="distance between two .dgm files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--metric", choices=METRICS, default="sw-exact")
    p.add_argument("--directions", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--size-cap", type=int, default=64, help="exact matching size guard; 0 disables")
    _add_common(p, workers=False)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("gram", help="Gram matrix CSV over a directory of .dgm files")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--emit-distances", metavar="CSV", help="also write the distance matrix")
    _add_kernel_args(p)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0, help="PSS diffusion time")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("orbits", help="generate the linked twist map orbit dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--points", type=int, default=300)
    p.add_argument("--out", required=True)
    p.add_argument("--include-seed", action="store_true", help="keep the initial position in the orbit")
    p.add_argument("--workers", type=int, help="worker processes (default: $PDSW_WORKERS or 1)")
    p.set_defaults(func=cmd_orbits)

    p = sub.add_parser("classify", help="repeated train/test SVM evaluation")
    p.add_argument("dataset", nargs="?", help="directory with manifest.tsv")
    p.add_argument("--gram", help="precomputed Gram CSV (with --labels)")
    p.add_argument("--distances", help="precomputed SW distance CSV (with --labels)")
    p.add_argument("--labels", help="id,label file")
    _add_kernel_args(p)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--c-grid", type=float, nargs="+", default=list(C_GRID))
    p.add_argument("--sigma-factors", type=float, nargs="+", default=list(SIGMA_FACTORS))
    p.add_argument("--t-grid", type=float, nargs="+", default=[0.01, 0.1, 1.0, 10.0, 100.0])
    p.add_argument("--rho-grid", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    p.add_argument("--tau-grid", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    p.add_argument("--shuffle-labels", action="store_true", help="permutation control")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("check", help="randomized property suites")
    p.add_argument("--suite", choices=(*checks.SUITES, "all"), default="all")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--failure-dir", default="pdsw-failures")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="timing table for exact and approximate SW")
    p.add_argument("--sizes", type=int, nargs="+", default=[25, 50, 100, 200])
    p.add_argument("--directions", type=int, nargs="+", default=[1, 10, 100])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--pairs", type=int, default=50, help="random pairs for the ratio statistics")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DiagramFormatError, InputFormatError, OSError) as exc:
        print(f"pdsw {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"pdsw {args.command}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


def run() -> None:
    sys.exit(main())
