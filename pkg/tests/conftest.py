"""Shared brute-force oracles."""

import itertools

import numpy as np
import pytest

from rivertree.model import RootedTree


def all_rooted_trees(d):
    """Every root-directed spanning tree on ``d`` nodes (there are d**(d-1))."""
    out = []
    for root in range(d):
        others = [j for j in range(d) if j != root]
        for targets in itertools.product(range(d), repeat=len(others)):
            child = [-1] * d
            ok = True
            for j, t in zip(others, targets):
                if t == j:
                    ok = False
                    break
                child[j] = t
            if not ok:
                continue
            try:
                out.append(RootedTree(tuple(child)))
            except ValueError:
                pass
    return out


def tree_cost(tree, w):
    return sum(w[i, j] for j, i in tree.edges)


def brute_force_min(w):
    """All trees within rounding of the minimum cost over the full enumeration."""
    trees = all_rooted_trees(w.shape[0])
    costs = np.array([tree_cost(t, w) for t in trees])
    best = costs.min()
    return best, [t for t, c in zip(trees, costs) if c <= best + 1e-12]


def closure_by_squaring(adj):
    """Transitive closure ``R[i, j]`` (j reaches i) by boolean matrix squaring."""
    r = adj.astype(bool)
    while True:
        nxt = r | ((r.astype(int) @ r.astype(int)) > 0)
        if np.array_equal(nxt, r):
            return r
        r = nxt


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
