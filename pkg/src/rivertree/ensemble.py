"""Subsample aggregation of fitted trees and variability-based tuning."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .arborescence import min_arborescence, reachability
from .errors import InfeasibleError
from .metrics import shd
from .model import ObservationMatrix, RootedTree
from .qtree import QTreeParams, fit

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TreeEnsemble:
    trees: tuple[RootedTree, ...]
    params: QTreeParams | None = None
    n_failed: int = 0
    fraction: float | None = None
    repetitions: int | None = None

    def __post_init__(self):
        if not self.trees:
            raise ValueError("an ensemble needs at least one tree")
        labels = self.trees[0].labels
        if any(t.labels != labels for t in self.trees):
            raise ValueError("ensemble trees must share the node set")

    @property
    def m(self) -> int:
        return len(self.trees)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.trees[0].labels


@dataclass(frozen=True)
class EnsembleSummary:
    """Centroid tree and the variability of an ensemble around it.

    ``variability = tree_term + reach_term``. The ``*_symdiff`` fields repeat
    both terms with the edge-vector Hamming distance (a reversal counts 2)
    for comparison.
    """

    centroid: RootedTree
    variability: float
    tree_term: float
    reach_term: float
    tree_term_symdiff: float = 0.0
    reach_term_symdiff: float = 0.0


def subsample_fit(data: ObservationMatrix, params: QTreeParams, f: float, m: int,
                  seed=None, stream: Sequence[int] = ()) -> TreeEnsemble:
    """Fit ``m`` trees on row subsets of size ``floor(n*f)`` drawn without replacement.

    Repetition ``l`` draws from its own generator seeded by
    ``(seed, *stream, l)``, so results do not depend on evaluation order.
    Infeasible subsamples are skipped and counted in ``n_failed``.
    """
    if not 0 < f <= 1:
        raise ValueError("f must lie in (0, 1]")
    if m < 1:
        raise ValueError("m must be at least 1")
    size = int(np.floor(data.n * f))
    if size < 2:
        raise ValueError(f"subsample size floor(n*f) = {size} is below 2")
    if seed is None:
        seed = np.random.SeedSequence().entropy
    base = [int(seed)]
    trees = []
    failed = 0
    if size == data.n:
        # every "subsample" is the full data set
        try:
            trees = [fit(data, params)] * m
        except InfeasibleError:
            failed = m
    for rep in range(m if size < data.n else 0):
        rng = np.random.default_rng(base + [int(s) for s in stream] + [rep])
        sub = data.take(np.sort(rng.choice(data.n, size=size, replace=False)))
        try:
            trees.append(fit(sub, params))
        except InfeasibleError:
            failed += 1
    if failed:
        log.warning("%d of %d subsample fits were infeasible and dropped", failed, m)
    if not trees:
        raise InfeasibleError(f"all {m} subsample fits were infeasible")
    return TreeEnsemble(tuple(trees), params, failed, f, m)


def stability_matrix(ens: TreeEnsemble | Iterable[RootedTree]) -> np.ndarray:
    """``s[i, j]`` = number of trees containing the edge ``j -> i``."""
    trees = ens.trees if isinstance(ens, TreeEnsemble) else tuple(ens)
    d = trees[0].d
    s = np.zeros((d, d), dtype=int)
    for t in trees:
        child = np.asarray(t.child)
        src = np.flatnonzero(child >= 0)
        s[child[src], src] += 1
    return s


def centroid(ens: TreeEnsemble) -> RootedTree:
    """Maximum root-directed spanning tree of the stability matrix.

    This is the tree minimizing the summed edge-vector Hamming distance to
    the ensemble whenever that maximum is unique.
    """
    s = stability_matrix(ens).astype(float)
    np.fill_diagonal(s, np.nan)
    tree = min_arborescence(s, maximize=True).tree
    return tree.relabel(ens.labels)


def _symdiff(a, b) -> int:
    return len(a ^ b)


def variability(ens: TreeEnsemble, center: RootedTree | None = None) -> EnsembleSummary:
    """Normalized mean distance of the trees and of their reachability graphs
    from the centroid.

    The tree term divides the mean SHD by the centroid's edge count, the
    reachability term by the edge count of the centroid's reachability
    graph.
    """
    center = center if center is not None else centroid(ens)
    m = ens.m
    c_edges = center.edges
    c_reach = reachability(center)
    e_t = len(c_edges)
    e_r = len(c_reach)
    t_shd = t_sym = r_shd = r_sym = 0
    for t in ens.trees:
        edges, reach = t.edges, reachability(t)
        t_shd += shd(edges, c_edges)
        t_sym += _symdiff(edges, c_edges)
        r_shd += shd(reach, c_reach)
        r_sym += _symdiff(reach, c_reach)

    def norm(total, e):
        return total / (e * m) if e else 0.0

    tree_term, reach_term = norm(t_shd, e_t), norm(r_shd, e_r)
    return EnsembleSummary(center, tree_term + reach_term, tree_term, reach_term,
                           norm(t_sym, e_t), norm(r_sym, e_r))


@dataclass(frozen=True)
class GridPoint:
    params: QTreeParams
    variability: float
    tree_term: float
    reach_term: float
    variability_symdiff: float
    centroid: RootedTree | None
    n_trees: int
    n_failed: int


@dataclass
class AutotuneResult:
    best_params: QTreeParams
    centroid: RootedTree
    diagnostics: list[GridPoint] = field(default_factory=list)


def parameter_grid(r_lows: Iterable[float], alphas: Iterable[float], **fixed) -> list[QTreeParams]:
    return [QTreeParams(r_low=r, alpha=a, **fixed) for r in r_lows for a in alphas]


def autotune(data: ObservationMatrix, grid: Sequence[QTreeParams], f: float = 0.75,
             m: int = 1000, seed=None) -> AutotuneResult:
    """Pick the grid point whose subsample ensemble varies least.

    Equal variabilities go to the smaller ``alpha``, then the smaller
    ``r_low``. Grid points where every subsample fit is infeasible are kept
    in the diagnostics with infinite variability.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("parameter grid is empty")
    if seed is None:
        seed = np.random.SeedSequence().entropy
    points = []
    for g, params in enumerate(grid):
        try:
            ens = subsample_fit(data, params, f, m, seed=seed, stream=(g,))
        except InfeasibleError:
            points.append(GridPoint(params, np.inf, np.inf, np.inf, np.inf, None, 0, m))
            continue
        summary = variability(ens)
        points.append(GridPoint(params, summary.variability, summary.tree_term, summary.reach_term,
                                summary.tree_term_symdiff + summary.reach_term_symdiff,
                                summary.centroid, ens.m, ens.n_failed))
    feasible = [p for p in points if p.centroid is not None]
    if not feasible:
        raise InfeasibleError("every grid point was infeasible")
    best = min(feasible, key=lambda p: (p.variability, p.params.alpha, p.params.r_low))
    return AutotuneResult(best.params, best.centroid, points)
