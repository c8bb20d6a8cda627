"""Structural comparison of directed edge sets.

Graphs are sets of ``(source, target)`` pairs over a common node set of size
``d``; trees and reachability graphs are handled the same way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .arborescence import reachability
from .model import RootedTree


def _edge_set(edges: Iterable) -> frozenset:
    es = frozenset(tuple(e) for e in edges)
    for a, b in es:
        if a == b:
            raise ValueError(f"self-loop on {a!r}")
    return es


def shd(true_edges, est_edges, nodes=None) -> int:
    """Structural Hamming distance: fewest additions, deletions and reversals.

    Each unordered node pair is scored on its own. A single edge against its
    reversal costs 1; otherwise the cost is the number of directed edges
    present in exactly one of the graphs.
    """
    g, h = _edge_set(true_edges), _edge_set(est_edges)
    if nodes is not None:
        nodes = set(nodes)
        stray = {v for e in g | h for v in e} - nodes
        if stray:
            raise ValueError(f"edges mention nodes outside the node set: {sorted(map(str, stray))}")
    total = 0
    for a, b in {frozenset(e) for e in g ^ h}:
        a, b = sorted((a, b), key=repr)
        in_g = ((a, b) in g, (b, a) in g)
        in_h = ((a, b) in h, (b, a) in h)
        if sum(in_g) == 1 and sum(in_h) == 1 and in_g != in_h:
            total += 1
        else:
            total += sum(x != y for x, y in zip(in_g, in_h))
    return total


@dataclass(frozen=True)
class MetricReport:
    nshd: float
    fdr: float
    fpr: float
    tpr: float
    shd: int
    false_edges: int
    true_edges: int
    empty_estimate: bool = False

    def as_dict(self) -> dict:
        return {"nSHD": self.nshd, "FDR": self.fdr, "FPR": self.fpr, "TPR": self.tpr,
                "SHD": self.shd, "false": self.false_edges, "correct": self.true_edges,
                "empty_estimate": self.empty_estimate}


def metric_report(true_edges, est_edges, d: int) -> MetricReport:
    """nSHD, FDR, FPR and TPR of an estimated graph against the truth.

    An empty estimate has no discoveries; its FDR is reported as 0 and
    ``empty_estimate`` is set.
    """
    g, h = _edge_set(true_edges), _edge_set(est_edges)
    s = shd(g, h)
    false = len(h - g)
    correct = len(h & g)
    denom = len(h) + len(g)
    negatives = d * (d - 1) - len(g)
    return MetricReport(
        nshd=s / denom if denom else 0.0,
        fdr=false / len(h) if h else 0.0,
        fpr=false / negatives if negatives else 0.0,
        tpr=correct / len(g) if g else 1.0,
        shd=s,
        false_edges=false,
        true_edges=correct,
        empty_estimate=not h,
    )


def _check_same_nodes(true_tree: RootedTree, est_tree: RootedTree):
    if set(true_tree.labels) != set(est_tree.labels):
        raise ValueError("trees are defined on different node sets")


def _label_edges(edges, labels):
    return {(labels[j], labels[i]) for j, i in edges}


def tree_reports(true_tree: RootedTree, est_tree: RootedTree) -> tuple[MetricReport, MetricReport]:
    """Metrics on the trees and on their reachability graphs."""
    _check_same_nodes(true_tree, est_tree)
    d = true_tree.d
    tree = metric_report(_label_edges(true_tree.edges, true_tree.labels),
                         _label_edges(est_tree.edges, est_tree.labels), d)
    reach = metric_report(_label_edges(reachability(true_tree), true_tree.labels),
                          _label_edges(reachability(est_tree), est_tree.labels), d)
    return tree, reach


def format_pair(tree: MetricReport, reach: MetricReport, digits: int = 2) -> dict[str, str]:
    """Render each metric as ``tree(reachability)``, e.g. ``0.18(0.09)``."""
    out = {}
    for name, attr in (("nSHD", "nshd"), ("FPR", "fpr"), ("FDR", "fdr"), ("TPR", "tpr")):
        out[name] = f"{getattr(tree, attr):.{digits}f}({getattr(reach, attr):.{digits}f})"
    return out
