"""Command line entry point: ``rivertree <command> ...``.

Exit codes: 0 success, 2 input error, 3 no feasible tree.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .arborescence import min_arborescence
from .ensemble import autotune, parameter_grid
from .errors import InfeasibleError
from .io import (FormatError, read_observations, read_tree, write_observations,
                 write_scores, write_tree)
from .metrics import format_pair, tree_reports
from .model import simulate_setting
from .pipeline import PRESETS, DeclusterConfig, decluster_raw, read_raw
from .qtree import QTreeParams, fit, scores_for
from .scores import KINDS

log = logging.getLogger("rivertree")

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


def parse_grid(text: str) -> list[float]:
    """``"0.7:0.9:0.025"`` (inclusive range) or ``"0.05,0.1"``."""
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:stop:step") from None
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        count = int(round((stop - start) / step)) + 1
        return [round(start + k * step, 10) for k in range(count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _versions() -> dict:
    import pandas
    import scipy

    return {"rivertree": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "pandas": pandas.__version__}


def write_manifest(args, inputs: dict, outputs: dict, extra: dict | None = None) -> None:
    params = {k: v for k, v in vars(args).items()
              if k not in ("func", "manifest") and not callable(v)}
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items() if p},
        "outputs": {name: str(p) for name, p in outputs.items() if p},
        "versions": _versions(),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        manifest.update(extra)
    text = json.dumps(manifest, indent=2, default=str)
    target = args.manifest
    if target is None:
        primary = next((p for p in outputs.values() if p), None)
        target = f"{primary}.manifest.json" if primary else None
    if target is None:
        print(text, file=sys.stderr)
    else:
        Path(target).write_text(text + "\n")


def _params(args) -> QTreeParams:
    return QTreeParams(r_low=args.r_low, alpha=args.alpha, kind=args.score,
                       r_high=args.r_high, floor=args.floor)


def cmd_simulate(args) -> int:
    overrides = {"noise_ratio": args.k, "missing": args.q}
    data, tree, weights = simulate_setting(args.setting, args.d, args.n, seed=args.seed, **overrides)
    write_observations(data, args.output)
    if args.truth:
        write_tree(tree, args.truth)
    if args.weights:
        with open(args.weights, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["source", "target", "weight"])
            for j in range(tree.d):
                if tree.child[j] != -1:
                    w.writerow([tree.labels[j], tree.labels[tree.child[j]], repr(float(weights[j]))])
    write_manifest(args, {}, {"data": args.output, "truth": args.truth, "weights": args.weights})
    return 0


def cmd_fit(args) -> int:
    data = read_observations(args.input)
    params = _params(args)
    if args.scores_out:
        write_scores(scores_for(data, params), args.scores_out)
    tree = fit(data, params)
    if args.output:
        write_tree(tree, args.output)
    else:
        sys.stdout.write(_tree_text(tree))
    write_manifest(args, {"input": args.input}, {"tree": args.output, "scores": args.scores_out})
    return 0


def _tree_text(tree) -> str:
    from .io import tree_to_csv

    return tree_to_csv(tree)


def cmd_autotune(args) -> int:
    data = read_observations(args.input)
    grid = parameter_grid(args.r_low, args.alpha_grid, kind=args.score,
                          r_high=args.r_high, floor=args.floor)
    result = autotune(data, grid, f=args.f, m=args.m, seed=args.seed)
    if args.output:
        write_tree(result.centroid, args.output)
    else:
        sys.stdout.write(_tree_text(result.centroid))
    if args.diagnostics:
        with open(args.diagnostics, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r_low", "alpha", "variability", "tree_term", "reach_term",
                        "variability_symdiff", "n_trees", "n_failed", "centroid_edges"])
            for p in result.diagnostics:
                edges = ";".join(f"{a}>{b}" for a, b in p.centroid.label_edges()) if p.centroid else ""
                w.writerow([p.params.r_low, p.params.alpha, p.variability, p.tree_term,
                            p.reach_term, p.variability_symdiff, p.n_trees, p.n_failed, edges])
    best = result.best_params
    print(f"selected r_low={best.r_low} alpha={best.alpha}", file=sys.stderr)
    write_manifest(args, {"input": args.input},
                   {"tree": args.output, "diagnostics": args.diagnostics},
                   {"selected": {"r_low": best.r_low, "alpha": best.alpha}})
    return 0


def cmd_decluster(args) -> int:
    cfg = PRESETS[args.preset] if args.preset else DeclusterConfig()
    months = None
    if args.months is not None:
        months = frozenset(int(v) for v in args.months.split(",")) if args.months else None
        cfg = DeclusterConfig(cfg.slot, cfg.half_window, months, cfg.log_transform,
                              cfg.conservative_missing)
    cfg = cfg.with_overrides(
        slot=f"{args.slot_hours}h" if args.slot_hours else None,
        half_window=args.half_window,
        log_transform=args.log,
        conservative_missing=args.conservative_missing,
    )
    raw = read_raw(args.input, args.format)
    data = decluster_raw(raw, cfg)
    write_observations(data, args.output)
    print(f"{data.n} events, {data.d} nodes, {100 * (1 - data.mask.mean()) if data.n else 0:.1f}% missing",
          file=sys.stderr)
    write_manifest(args, {"input": args.input}, {"data": args.output},
                   {"config": {"slot": str(cfg.slot), "half_window": cfg.half_window,
                               "months": sorted(cfg.months) if cfg.months else None,
                               "log_transform": cfg.log_transform,
                               "conservative_missing": cfg.conservative_missing}})
    return 0


METRIC_ROWS = ("nSHD", "FPR", "FDR", "TPR")


def cmd_evaluate(args) -> int:
    est = read_tree(args.est)
    truth = read_tree(args.true, labels=est.labels if set(est.labels) else None)
    tree_r, reach_r = tree_reports(truth, est)
    pretty = format_pair(tree_r, reach_r)
    for name in METRIC_ROWS:
        print(f"{name:5s} {pretty[name]}")
    rows = [{"graph": "tree", **tree_r.as_dict()}, {"graph": "reachability", **reach_r.as_dict()}]
    _write_rows(rows, args.csv)
    write_manifest(args, {"true": args.true, "est": args.est}, {"csv": args.csv})
    return 0


def _write_rows(rows, path):
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    finally:
        if path:
            fh.close()


def cmd_compare(args) -> int:
    data = read_observations(args.input)
    truth = read_tree(args.true, labels=data.labels)
    kinds = args.kinds or list(KINDS)
    table = {}
    rows = []
    for kind in kinds:
        params = QTreeParams(r_low=args.r_low, alpha=args.alpha, kind=kind,
                             r_high=args.r_high if kind == "lqg" else None, floor=args.floor)
        scores = scores_for(data, params)
        if args.scores_dir:
            Path(args.scores_dir).mkdir(parents=True, exist_ok=True)
            write_scores(scores, Path(args.scores_dir) / f"{kind}.csv")
        try:
            tree = min_arborescence(scores).tree
        except InfeasibleError as exc:
            log.warning("%s: %s", kind, exc)
            table[kind] = {name: "infeasible" for name in METRIC_ROWS}
            continue
        tree_r, reach_r = tree_reports(truth, tree)
        table[kind] = format_pair(tree_r, reach_r)
        rows.append({"score": kind, "graph": "tree", **tree_r.as_dict()})
        rows.append({"score": kind, "graph": "reachability", **reach_r.as_dict()})
    width = max(12, *(len(v) + 2 for col in table.values() for v in col.values()))
    print("      " + "".join(f"{k:>{width}s}" for k in table))
    for name in METRIC_ROWS:
        print(f"{name:6s}" + "".join(f"{table[k][name]:>{width}s}" for k in table))
    if args.output and rows:
        _write_rows(rows, args.output)
    write_manifest(args, {"input": args.input, "true": args.true},
                   {"table": args.output, "scores_dir": args.scores_dir})
    return 0


def _add_score_options(p, alpha_default=0.9):
    p.add_argument("--r-low", type=float, default=0.05)
    p.add_argument("--r-high", type=float, default=None, help="upper level for --score lqg")
    p.add_argument("--alpha", type=float, default=alpha_default)
    p.add_argument("--floor", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rivertree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--manifest", default=None,
                       help="run-manifest path (default: <output>.manifest.json)")

    p = sub.add_parser("simulate", help="sample data from a random max-linear tree")
    p.add_argument("--setting", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=float, default=0.3, help="noise-to-signal ratio")
    p.add_argument("--q", type=float, default=0.0, help="i.i.d. missing fraction")
    p.add_argument("--output", required=True)
    p.add_argument("--truth", help="write the generating tree here")
    p.add_argument("--weights", help="write edge weights here")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="estimate a tree for fixed parameters")
    p.add_argument("--input", required=True)
    p.add_argument("--score", choices=KINDS, default="qtm")
    _add_score_options(p)
    p.add_argument("--output")
    p.add_argument("--scores-out", help="also export the score matrix")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("autotune", help="choose parameters by subsample variability")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha-grid", type=parse_grid, default=parse_grid("0.7:0.9:0.025"))
    p.add_argument("--r-low", type=parse_grid, default=[0.05])
    p.add_argument("--r-high", type=float, default=None)
    p.add_argument("--score", choices=("qtm", "lqg"), default="qtm")
    p.add_argument("--floor", type=int, default=10)
    p.add_argument("--f", type=float, default=0.75)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--output")
    p.add_argument("--diagnostics")
    common(p)
    p.set_defaults(func=cmd_autotune)

    p = sub.add_parser("decluster", help="turn raw series into event maxima")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("long", "wide"), default="long")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--slot-hours", type=float)
    p.add_argument("--half-window", type=int)
    p.add_argument("--months", help="comma-separated months, empty for all")
    p.add_argument("--log", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--conservative-missing", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--output", required=True)
    common(p)
    p.set_defaults(func=cmd_decluster)

    p = sub.add_parser("evaluate", help="compare an estimated tree with the truth")
    p.add_argument("--true", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--csv", help="machine-readable metrics (default: stdout)")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="all score kinds through optimum branching")
    p.add_argument("--input", required=True)
    p.add_argument("--true", required=True)
    p.add_argument("--kinds", nargs="+", choices=KINDS)
    _add_score_options(p)
    p.set_defaults(r_high=0.2)
    p.add_argument("--scores-dir")
    p.add_argument("--output")
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FormatError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
