"""Optimum root-directed spanning trees and reachability graphs.

Costs follow the score convention ``cost[i, j]`` = cost of the edge
``j -> i``.  A root-directed tree gives every non-root node exactly one
outgoing edge, so in column form the problem is Chu-Liu/Edmonds with the
roles of rows and columns swapped: each node picks the cheapest row of its
column, cycles are contracted, and the contraction is unwound at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .model import RootedTree, default_labels

# slack when comparing a root's lower bound with the incumbent optimum
_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class Arborescence:
    tree: RootedTree
    total_score: float


def _cycle(best: np.ndarray, root: int):
    """Return the node list of one cycle in ``j -> best[j]``, or None."""
    d = best.shape[0]
    state = np.zeros(d, dtype=np.int8)  # 0 new, 1 on current walk, 2 done
    state[root] = 2
    for start in range(d):
        if state[start]:
            continue
        walk = []
        k = start
        while state[k] == 0:
            state[k] = 1
            walk.append(k)
            k = best[k]
        if state[k] == 1:
            return walk[walk.index(k):]
        for node in walk:
            state[node] = 2
    return None


def _edmonds(cost: np.ndarray, root: int) -> np.ndarray:
    """Minimum root-directed spanning tree for a fixed root.

    ``cost`` must have an infinite diagonal and admit a feasible tree.
    Returns ``child`` with ``child[root] == -1``.
    """
    best = np.argmin(cost, axis=0)
    best[root] = -1
    cycle = _cycle(best, root)
    if cycle is None:
        return best

    cyc = np.array(cycle)
    in_cycle = np.zeros(cost.shape[0], dtype=bool)
    in_cycle[cyc] = True
    others = np.flatnonzero(~in_cycle)
    m = others.size

    reduced = np.full((m + 1, m + 1), np.inf)
    reduced[:m, :m] = cost[np.ix_(others, others)]
    # leaving the cycle from k replaces the cycle edge k -> best[k]
    leave = cost[np.ix_(others, cyc)] - cost[best[cyc], cyc][None, :]
    reduced[:m, m] = leave.min(axis=1)
    exit_from = cyc[leave.argmin(axis=1)]
    enter = cost[np.ix_(cyc, others)]
    reduced[m, :m] = enter.min(axis=0)
    enter_at = cyc[enter.argmin(axis=0)]

    new_root = int(np.searchsorted(others, root))
    sub = _edmonds(reduced, new_root)

    child = best.copy()
    for a, j in enumerate(others):
        t = sub[a]
        if t == -1:
            child[j] = -1
        elif t == m:
            child[j] = enter_at[a]
        else:
            child[j] = others[t]
    t = sub[m]
    child[exit_from[t]] = others[t]
    return child


def _reaches(allowed: np.ndarray, root: int) -> np.ndarray:
    """Nodes with a directed path of allowed edges into ``root``."""
    reached = np.zeros(allowed.shape[0], dtype=bool)
    reached[root] = True
    frontier = reached.copy()
    while frontier.any():
        new = allowed[frontier].any(axis=0) & ~reached
        reached |= new
        frontier = new
    return reached


def _as_cost(scores, maximize: bool | None):
    labels = getattr(scores, "labels", None)
    if hasattr(scores, "cost"):
        cost = np.array(scores.cost(), dtype=float)
    else:
        w = np.array(scores, dtype=float)
        if maximize:
            cost = np.where(np.isfinite(w), -w, np.inf)
        else:
            cost = w
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("score matrix must be square")
    cost = np.where(np.isnan(cost), np.inf, cost)
    np.fill_diagonal(cost, np.inf)
    if np.any(cost == -np.inf):
        raise ValueError("costs must not be -inf")
    d = cost.shape[0]
    return cost, tuple(labels) if labels else default_labels(d)


def min_arborescence(scores, maximize: bool | None = None) -> Arborescence:
    """Minimum-score root-directed spanning tree over every choice of root.

    Parameters
    ----------
    scores : ScoreMatrix or array_like
        Either an object with a ``cost()`` method and ``labels`` (costs to
        minimize, forbidden edges infinite), or a square array ``w`` with
        ``w[i, j]`` scoring ``j -> i``; non-finite entries are forbidden.
    maximize : bool, optional
        For raw arrays only: maximize ``w`` instead of minimizing it.

    Notes
    -----
    Edmonds is run per root, skipping roots whose trivial lower bound (sum
    of column minima) already exceeds the incumbent. Equal totals go to the
    lower root index, then the lexicographically smaller edge list.
    """
    cost, labels = _as_cost(scores, maximize)
    d = cost.shape[0]
    if d == 1:
        return Arborescence(RootedTree((-1,), labels), 0.0)

    allowed = np.isfinite(cost)
    col_min = cost.min(axis=0)
    finite_min = np.where(np.isfinite(col_min), col_min, 0.0)
    n_dead = ~np.isfinite(col_min)
    # a node without any allowed outgoing edge can only be the root
    bound = np.where(
        n_dead.sum() - n_dead > 0, np.inf, finite_min.sum() - finite_min
    )

    best_key = None
    best_child = None
    best_cover = (-1, None)
    for r in np.argsort(bound, kind="stable"):
        r = int(r)
        if not np.isfinite(bound[r]):
            break
        if best_key is not None and bound[r] > best_key[0] + _BOUND_SLACK * (1 + abs(best_key[0])):
            break
        reach = _reaches(allowed, r)
        if not reach.all():
            if reach.sum() > best_cover[0]:
                best_cover = (int(reach.sum()), r, reach)
            continue
        child = _edmonds(cost, r)
        edges = sorted((j, int(child[j])) for j in range(d) if child[j] != -1)
        total = math.fsum(cost[i, j] for j, i in edges)
        key = (total, r, edges)
        if best_key is None or key < best_key:
            best_key, best_child = key, child

    if best_key is None:
        if best_cover[1] is None:
            dead = np.flatnonzero(n_dead)
            raise InfeasibleError(
                "nodes without any admissible outgoing edge: "
                + ", ".join(labels[k] for k in dead),
                [labels[k] for k in dead],
            )
        _, r, reach = best_cover
        stuck = [labels[k] for k in np.flatnonzero(~reach)]
        raise InfeasibleError(
            f"no spanning tree avoids forbidden edges; nodes {stuck} cannot reach "
            f"the best candidate root {labels[r]}",
            stuck,
        )

    tree = RootedTree(tuple(int(c) for c in best_child), labels)
    total = best_key[0]
    if _maximizing(scores, maximize):
        total = -total
    return Arborescence(tree, float(total))


def _maximizing(scores, maximize):
    if hasattr(scores, "cost"):
        return bool(getattr(scores, "maximize", False))
    return bool(maximize)


def max_arborescence(scores) -> Arborescence:
    """Maximum-score tree for a raw array of scores."""
    return min_arborescence(scores, maximize=True)


def reachability_matrix(tree: RootedTree) -> np.ndarray:
    """``R[i, j]`` true iff there is a directed path ``j ~> i``."""
    d = tree.d
    r = np.zeros((d, d), dtype=bool)
    for j in range(d):
        k = tree.child[j]
        while k != -1:
            r[k, j] = True
            k = tree.child[k]
    return r


def reachability(tree: RootedTree) -> frozenset[tuple[int, int]]:
    """Reachability graph as ``(source, target)`` index pairs."""
    r = reachability_matrix(tree)
    i, j = np.nonzero(r)
    return frozenset(zip(j.tolist(), i.tolist()))
