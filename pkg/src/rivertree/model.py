"""Root-directed trees and the max-linear generative model on them.

Everything here works on the log scale: a node's value is the maximum of its
own innovation and of each parent's value shifted by the edge weight, plus
optional Gaussian observation noise.

Node indices are integers ``0..d-1``; labels are carried alongside for I/O.
Matrices indexed ``[i, j]`` always refer to the ordered pair "from j to i",
so ``kleene_star(...).matrix[i, j]`` is the path weight of ``j ~> i``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

INNOVATIONS = ("gumbel", "normal", "mixed")


def default_labels(d: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(1, d + 1))


@dataclass(frozen=True)
class RootedTree:
    """A root-directed spanning tree.

    Parameters
    ----------
    child : tuple of int
        ``child[j]`` is the node that ``j`` flows into, ``-1`` for the root.
    labels : tuple of str
        Node labels, in index order.
    """

    child: tuple[int, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        child = tuple(int(c) for c in self.child)
        labels = tuple(str(s) for s in self.labels) or default_labels(len(child))
        object.__setattr__(self, "child", child)
        object.__setattr__(self, "labels", labels)
        d = len(child)
        if d == 0:
            raise ValueError("a tree needs at least one node")
        if len(labels) != d:
            raise ValueError(f"{len(labels)} labels for {d} nodes")
        if len(set(labels)) != d:
            raise ValueError("node labels must be unique")
        roots = [j for j, c in enumerate(child) if c == -1]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        for j, c in enumerate(child):
            if c != -1 and not (0 <= c < d) or c == j:
                raise ValueError(f"invalid child {c} for node {j}")
        # every node must reach the root in at most d-1 steps
        for j in range(d):
            k, steps = j, 0
            while child[k] != -1:
                k = child[k]
                steps += 1
                if steps >= d:
                    raise ValueError(f"node {labels[j]} does not reach the root (cycle)")

    @classmethod
    def from_edges(cls, edges, labels: Sequence[str]) -> "RootedTree":
        """Build a tree from ``(source, target)`` index pairs."""
        child = [-1] * len(labels)
        for j, i in edges:
            if child[j] != -1:
                raise ValueError(f"node {labels[j]} has more than one outgoing edge")
            child[j] = i
        return cls(tuple(child), tuple(labels))

    @classmethod
    def from_label_edges(cls, edges, labels: Sequence[str]) -> "RootedTree":
        index = {s: k for k, s in enumerate(labels)}
        return cls.from_edges([(index[j], index[i]) for j, i in edges], labels)

    @property
    def d(self) -> int:
        return len(self.child)

    @property
    def root(self) -> int:
        return self.child.index(-1)

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.labels

    @property
    def child_of(self) -> dict[str, str]:
        return {self.labels[j]: self.labels[c] for j, c in enumerate(self.child) if c != -1}

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        """Edges as ``(source, target)`` index pairs."""
        return frozenset((j, c) for j, c in enumerate(self.child) if c != -1)

    def label_edges(self) -> list[tuple[str, str]]:
        return sorted((self.labels[j], self.labels[i]) for j, i in self.edges)

    def parents(self, i: int) -> list[int]:
        return [j for j, c in enumerate(self.child) if c == i]

    def depths(self) -> np.ndarray:
        """Number of edges from each node down to the root."""
        depth = np.full(self.d, -1, dtype=int)
        depth[self.root] = 0
        for j in range(self.d):
            path = []
            k = j
            while depth[k] < 0:
                path.append(k)
                k = self.child[k]
            base = depth[k]
            for offset, node in enumerate(reversed(path), start=1):
                depth[node] = base + offset
        return depth

    def topological_order(self) -> np.ndarray:
        """Sources first: every node appears after all of its parents."""
        return np.argsort(-self.depths(), kind="stable")

    def adjacency(self) -> np.ndarray:
        """Boolean matrix ``A[i, j]`` true iff ``j -> i``."""
        a = np.zeros((self.d, self.d), dtype=bool)
        for j, i in self.edges:
            a[i, j] = True
        return a

    def relabel(self, labels: Sequence[str]) -> "RootedTree":
        return RootedTree(self.child, tuple(labels))


def random_rooted_tree(d: int, seed=None, labels: Sequence[str] | None = None) -> RootedTree:
    """Uniform labeled spanning tree with a uniformly chosen root.

    The undirected tree is decoded from a uniform Pruefer sequence, which
    gives each of the ``d**(d-2)`` labeled trees equal probability; orienting
    every edge toward a uniform root then makes all ``d**(d-1)`` rooted
    arborescences equally likely.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    rng = np.random.default_rng(seed)
    labels = tuple(labels) if labels is not None else default_labels(d)
    if d == 1:
        return RootedTree((-1,), labels)

    neighbours: list[list[int]] = [[] for _ in range(d)]
    if d == 2:
        neighbours[0].append(1)
        neighbours[1].append(0)
    else:
        prufer = rng.integers(0, d, size=d - 2)
        degree = np.ones(d, dtype=int)
        np.add.at(degree, prufer, 1)
        leaves = [k for k in range(d) if degree[k] == 1]
        heapq.heapify(leaves)
        for v in prufer:
            leaf = heapq.heappop(leaves)
            neighbours[leaf].append(int(v))
            neighbours[int(v)].append(leaf)
            degree[v] -= 1
            if degree[v] == 1:
                heapq.heappush(leaves, int(v))
        u, w = heapq.heappop(leaves), heapq.heappop(leaves)
        neighbours[u].append(w)
        neighbours[w].append(u)

    root = int(rng.integers(0, d))
    child = [-1] * d
    seen = {root}
    stack = [root]
    while stack:
        i = stack.pop()
        for j in neighbours[i]:
            if j not in seen:
                seen.add(j)
                child[j] = i
                stack.append(j)
    return RootedTree(tuple(child), labels)


def sample_edge_weights(tree: RootedTree, lo: float, hi: float, seed=None) -> np.ndarray:
    """Uniform log-scale edge weights.

    Returns an array ``c`` of length ``d`` where ``c[j]`` is the weight of the
    edge leaving ``j``; the root entry is NaN.
    """
    if lo > hi:
        raise ValueError("lo must not exceed hi")
    rng = np.random.default_rng(seed)
    c = rng.uniform(lo, hi, size=tree.d)
    c[tree.root] = np.nan
    return c


def _check_weights(tree: RootedTree, weights) -> np.ndarray:
    c = np.asarray(weights, dtype=float)
    if c.shape != (tree.d,):
        raise ValueError(f"weights must have shape ({tree.d},), got {c.shape}")
    non_root = np.arange(tree.d) != tree.root
    if not np.all(np.isfinite(c[non_root])):
        raise ValueError("edge weights must be finite on every edge")
    return c


@dataclass(frozen=True)
class KleeneStar:
    """Path-weight closure of a weighted tree.

    ``matrix[i, j]`` is the summed weight along ``j ~> i``; ``-inf`` marks
    "no path" and the diagonal holds the empty-path weight 0.
    """

    matrix: np.ndarray
    labels: tuple[str, ...]

    def paths(self) -> dict[tuple[int, int], float]:
        """Defined off-diagonal entries keyed by ``(j, i)``."""
        out = {}
        d = self.matrix.shape[0]
        for i in range(d):
            for j in range(d):
                if i != j and np.isfinite(self.matrix[i, j]):
                    out[(j, i)] = float(self.matrix[i, j])
        return out

    def reachable(self) -> np.ndarray:
        r = np.isfinite(self.matrix)
        np.fill_diagonal(r, False)
        return r


def kleene_star(tree: RootedTree, weights) -> KleeneStar:
    c = _check_weights(tree, weights)
    d = tree.d
    m = np.full((d, d), -np.inf)
    np.fill_diagonal(m, 0.0)
    for j in range(d):
        acc, k = 0.0, j
        while tree.child[k] != -1:
            acc += c[k]
            k = tree.child[k]
            m[k, j] = acc
    return KleeneStar(m, tree.labels)


def max_linear(tree: RootedTree, weights, innovations: np.ndarray) -> np.ndarray:
    """Evaluate the recursive max-plus structural equations row by row."""
    c = _check_weights(tree, weights)
    z = np.asarray(innovations, dtype=float)
    x = z.copy()
    for j in tree.topological_order():
        i = tree.child[j]
        if i != -1:
            np.maximum(x[:, i], c[j] + x[:, j], out=x[:, i])
    return x


@dataclass(frozen=True)
class GenerativeConfig:
    """Distributional settings for :func:`simulate`.

    ``innovation`` is ``"gumbel"`` (scale ``beta``, location 0), ``"normal"``
    (standard normal) or ``"mixed"`` (a random ``gumbel_fraction`` of nodes
    Gumbel, the rest standard normal). ``noise_ratio`` scales the Gaussian
    noise relative to the median per-node standard deviation of the
    noise-free sample; ``missing`` is the i.i.d. per-cell masking probability.
    """

    innovation: str = "gumbel"
    beta: float = 1.0
    lo: float = float(np.log(0.1))
    hi: float = 0.0
    noise_ratio: float = 0.3
    missing: float = 0.0
    seed: int | None = 0
    gumbel_fraction: float = 0.5

    def __post_init__(self):
        if self.innovation not in INNOVATIONS:
            raise ValueError(f"innovation must be one of {INNOVATIONS}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.lo > self.hi:
            raise ValueError("weight interval has lo > hi")
        if self.noise_ratio < 0:
            raise ValueError("noise_ratio must be nonnegative")
        if not 0 <= self.missing < 1:
            raise ValueError("missing must lie in [0, 1)")
        if not 0 <= self.gumbel_fraction <= 1:
            raise ValueError("gumbel_fraction must lie in [0, 1]")

    @classmethod
    def setting(cls, number: int, **overrides) -> "GenerativeConfig":
        """Named simulation settings.

        1: Gumbel(1, 0) innovations, weights uniform on [log 0.1, 0].
        2: as 1 with weights uniform on [log 0.1, log 0.3] (weak dependence).
        3: half Gumbel(1, 0), half standard normal innovations, weights as 1.
        """
        presets = {
            1: dict(innovation="gumbel", lo=float(np.log(0.1)), hi=0.0),
            2: dict(innovation="gumbel", lo=float(np.log(0.1)), hi=float(np.log(0.3))),
            3: dict(innovation="mixed", lo=float(np.log(0.1)), hi=0.0),
        }
        if number not in presets:
            raise ValueError(f"unknown setting {number}; choose 1, 2 or 3")
        return cls(**{**presets[number], **overrides})


@dataclass(frozen=True)
class ObservationMatrix:
    """``n x d`` observations with an explicit mask (true = observed).

    Zero rows are allowed so that an empty declustering result can be
    represented; estimators check their own minimum row counts. Masked cells are stored as NaN in ``values`` so an accidental read
    cannot silently produce a number.
    """

    values: np.ndarray
    mask: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.shape != values.shape:
            raise ValueError("mask shape does not match values")
        mask &= ~np.isnan(values)
        values[~mask] = np.nan
        labels = tuple(str(s) for s in self.labels) or default_labels(values.shape[1])
        if len(labels) != values.shape[1]:
            raise ValueError(f"{len(labels)} labels for {values.shape[1]} columns")
        values.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_array(cls, values, labels=None) -> "ObservationMatrix":
        """Wrap an array, treating NaN as missing."""
        values = np.asarray(values, dtype=float)
        return cls(values, ~np.isnan(values), tuple(labels) if labels is not None else ())

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def complete(self) -> bool:
        return bool(self.mask.all())

    def take(self, rows) -> "ObservationMatrix":
        rows = np.asarray(rows)
        return ObservationMatrix(self.values[rows], self.mask[rows], self.labels)

    def shift(self, t) -> "ObservationMatrix":
        """Add a per-node constant to every observed cell."""
        return ObservationMatrix(self.values + np.asarray(t, dtype=float), self.mask, self.labels)


def simulate(tree: RootedTree, weights, config: GenerativeConfig, n: int,
             return_innovations: bool = False):
    """Draw ``n`` i.i.d. rows from the noisy max-linear tree model.

    Innovations are drawn first, the noise-free sample is evaluated, its
    median per-node standard deviation sets the noise scale, then noise and
    the missingness mask are drawn, all from one generator seeded by
    ``config.seed``.

    Returns
    -------
    (ObservationMatrix, RootedTree) or (ObservationMatrix, RootedTree, ndarray)
        The third element, when requested, holds the innovations.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    c = _check_weights(tree, weights)
    rng = np.random.default_rng(config.seed)
    d = tree.d

    if config.innovation == "gumbel":
        z = rng.gumbel(0.0, config.beta, size=(n, d))
    elif config.innovation == "normal":
        z = rng.standard_normal((n, d))
    else:
        n_gumbel = int(np.floor(config.gumbel_fraction * d + 0.5))
        is_gumbel = np.zeros(d, dtype=bool)
        is_gumbel[rng.permutation(d)[:n_gumbel]] = True
        z = np.where(is_gumbel, rng.gumbel(0.0, config.beta, size=(n, d)),
                     rng.standard_normal((n, d)))

    x = max_linear(tree, c, z)
    if config.noise_ratio > 0:
        if n < 2:
            raise ValueError("noise calibration needs at least two rows")
        sigma = float(np.median(np.std(x, axis=0, ddof=1)))
        x = x + rng.normal(0.0, config.noise_ratio * sigma, size=(n, d))
    if config.missing > 0:
        mask = rng.random((n, d)) >= config.missing
    else:
        mask = np.ones((n, d), dtype=bool)

    data = ObservationMatrix(x, mask, tree.labels)
    if return_innovations:
        return data, tree, z
    return data, tree


def simulate_setting(setting: int, d: int, n: int, seed=None, **overrides):
    """Random tree, random weights and a sample for a named setting.

    The seed is split into independent streams for the tree, the weights and
    the sample. Returns ``(data, tree, weights)``.
    """
    tree_seed, weight_seed, sample_seed = np.random.SeedSequence(seed).spawn(3)
    config = GenerativeConfig.setting(setting, seed=sample_seed, **overrides)
    tree = random_rooted_tree(d, tree_seed)
    weights = sample_edge_weights(tree, config.lo, config.hi, weight_seed)
    data, _ = simulate(tree, weights, config, n)
    return data, tree, weights


def noise_free_cstar_estimate(data: ObservationMatrix, tol: float = 1e-9):
    """Minimum pairwise differences and where that minimum repeats.

    Returns
    -------
    c_hat : ndarray
        ``c_hat[i, j] = min over rows of (x_i - x_j)``.
    support : ndarray of bool
        True where at least two rows lie within ``tol`` of that minimum; on
        noise-free data this marks exactly the pairs ``j ~> i`` once each
        such path has been active twice. The diagonal is false.
    """
    if not data.complete:
        raise ValueError("noise-free estimate requires complete data")
    if data.n < 2:
        raise ValueError("need at least two rows")
    x = data.values
    d = data.d
    c_hat = np.zeros((d, d))
    support = np.zeros((d, d), dtype=bool)
    for j in range(d):
        diff = x - x[:, [j]]
        low = diff.min(axis=0)
        c_hat[:, j] = low
        support[:, j] = (diff <= low + tol).sum(axis=0) >= 2
    np.fill_diagonal(c_hat, 0.0)
    np.fill_diagonal(support, False)
    return c_hat, support


def tree_from_reachability(reach: np.ndarray, labels: Sequence[str] | None = None) -> RootedTree:
    """Invert the transitive closure of a root-directed tree.

    ``reach[i, j]`` is true iff ``j ~> i``. Each node's child is its
    reachable node with the largest reachable set of its own.
    """
    reach = np.asarray(reach, dtype=bool)
    d = reach.shape[0]
    labels = tuple(labels) if labels is not None else default_labels(d)
    out_size = reach.sum(axis=0)
    child = []
    for j in range(d):
        targets = np.flatnonzero(reach[:, j])
        if targets.size == 0:
            child.append(-1)
        else:
            child.append(int(targets[np.argmax(out_size[targets])]))
    tree = RootedTree(tuple(child), labels)
    from .arborescence import reachability_matrix

    if not np.array_equal(reachability_matrix(tree), reach & ~np.eye(d, dtype=bool)):
        raise ValueError("matrix is not the reachability relation of a rooted tree")
    return tree
