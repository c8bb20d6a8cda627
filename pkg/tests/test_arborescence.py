import networkx as nx
import numpy as np
import pytest

from rivertree.arborescence import (max_arborescence, min_arborescence, reachability,
                                    reachability_matrix)
from rivertree.errors import InfeasibleError
from rivertree.model import RootedTree, random_rooted_tree

from conftest import brute_force_min, closure_by_squaring, tree_cost


def random_costs(rng, d):
    w = rng.uniform(size=(d, d))
    np.fill_diagonal(w, np.inf)
    return w


class TestMinArborescence:
    def test_two_nodes(self):
        w = np.array([[np.inf, 1.0], [2.0, np.inf]])
        # w[0,1] = 1 scores 2 -> 1 (index 1 -> 0)
        a = min_arborescence(w)
        assert a.tree.label_edges() == [("2", "1")]
        assert a.tree.root == 0 and a.total_score == 1.0

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_brute_force(self, rng, d):
        for _ in range(40):
            w = random_costs(rng, d)
            best, trees = brute_force_min(w)
            a = min_arborescence(w)
            assert len(trees) == 1
            assert a.tree == trees[0]
            assert a.total_score == pytest.approx(best, abs=1e-12)

    def test_brute_force_with_forbidden_edges(self, rng):
        for _ in range(60):
            w = random_costs(rng, 4)
            w[rng.uniform(size=w.shape) < 0.3] = np.inf
            best, trees = brute_force_min(w)
            if not np.isfinite(best):
                with pytest.raises(InfeasibleError):
                    min_arborescence(w)
                continue
            a = min_arborescence(w)
            assert a.tree in trees
            assert a.total_score == pytest.approx(best)

    def test_constant_shift(self, rng):
        w = random_costs(rng, 6)
        a = min_arborescence(w)
        b = min_arborescence(w + 3.5)
        assert a.tree == b.tree
        assert b.total_score == pytest.approx(a.total_score + 5 * 3.5)

    def test_maximize_is_negation(self, rng):
        w = random_costs(rng, 7)
        np.fill_diagonal(w, np.nan)
        a = max_arborescence(w)
        c = -w
        np.fill_diagonal(c, np.inf)
        b = min_arborescence(c)
        assert a.tree == b.tree
        assert a.total_score == pytest.approx(-b.total_score)

    def test_total_score_is_edge_sum(self, rng):
        w = random_costs(rng, 9)
        a = min_arborescence(w)
        assert a.total_score == pytest.approx(tree_cost(a.tree, w))
        assert len(a.tree.edges) == 8

    @pytest.mark.parametrize("d", [10, 25])
    def test_matches_networkx(self, rng, d):
        for _ in range(3):
            w = random_costs(rng, d)
            best = None
            for r in range(d):
                # networkx builds arborescences directed away from the root,
                # so reverse every edge
                g = nx.DiGraph()
                g.add_weighted_edges_from((i, j, w[i, j]) for i in range(d) for j in range(d)
                                          if i != j and j != r)
                t = nx.minimum_spanning_arborescence(g)
                total = sum(w[i, j] for i, j in t.edges)
                best = total if best is None else min(best, total)
            assert min_arborescence(w).total_score == pytest.approx(best)

    def test_single_node(self):
        a = min_arborescence(np.array([[np.inf]]))
        assert a.tree.d == 1 and a.total_score == 0.0

    def test_ties_are_stable(self):
        w = np.zeros((4, 4))
        np.fill_diagonal(w, np.inf)
        a = min_arborescence(w)
        assert a.tree.root == 0
        assert a.tree == min_arborescence(w.copy()).tree

    def test_infeasible_names_nodes(self):
        w = np.full((3, 3), np.inf)
        w[1, 0] = 1.0  # only 1 -> 2 is allowed, node 3 is cut off
        with pytest.raises(InfeasibleError) as exc:
            min_arborescence(w)
        assert "3" in exc.value.nodes

    def test_forbidding_an_edge_never_helps(self, rng):
        for _ in range(30):
            w = random_costs(rng, 6)
            a = min_arborescence(w)
            j, i = sorted(a.tree.edges)[0]
            w2 = w.copy()
            w2[i, j] = np.inf
            assert min_arborescence(w2).total_score >= a.total_score - 1e-12

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            min_arborescence(np.ones((2, 3)))


class TestReachability:
    def test_chain(self):
        t = RootedTree((1, 2, -1))
        assert reachability(t) == {(0, 1), (0, 2), (1, 2)}

    def test_star(self):
        t = RootedTree((2, 2, -1, 2))
        assert reachability(t) == {(0, 2), (1, 2), (3, 2)}

    def test_matches_matrix_closure(self):
        for s in range(20):
            t = random_rooted_tree(6, seed=s)
            assert np.array_equal(reachability_matrix(t), closure_by_squaring(t.adjacency()))

    def test_size_is_total_depth(self):
        t = random_rooted_tree(40, seed=2)
        assert len(reachability(t)) == t.depths().sum()

    def test_reversal_is_not_a_rooted_tree(self):
        # two leaves feeding one root; reversing gives the root two children
        t = RootedTree((2, 2, -1))
        reversed_edges = [(i, j) for j, i in t.edges]
        with pytest.raises(ValueError):
            RootedTree.from_edges(reversed_edges, t.labels)
