"""Pairwise edge scores built from thresholded difference sets.

For an ordered pair ``(i, j)`` the difference set collects ``x_i - x_j`` over
the rows where both nodes are observed and ``x_j`` exceeds its own
``alpha``-quantile. If ``j`` flows into ``i`` the set piles up near its
minimum, which the two gap scores measure (small = concentrated). The
extremal correlation ``chi``, the causal tail coefficient ``gamma`` and the
plain Pearson correlation are provided as comparison scores (large = edge).

All quantiles use linear interpolation between order statistics
(``numpy.quantile(method="linear")``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .model import ObservationMatrix

FORBIDDEN = math.inf
DEFAULT_FLOOR = 10
KINDS = ("qtm", "lqg", "chi", "gamma", "corr")
MAXIMIZED = frozenset({"chi", "gamma", "corr"})
QUANTILE_METHOD = "linear"


def quantile(values, level, axis=None):
    return np.quantile(values, level, axis=axis, method=QUANTILE_METHOD)


@dataclass(frozen=True)
class PairDifferenceSet:
    values: np.ndarray
    i: int
    j: int
    alpha: float

    @property
    def n(self) -> int:
        return int(self.values.size)


def _check_alpha(alpha):
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")


def _check_levels(r_low, r_high=None):
    if not 0 < r_low < 1:
        raise ValueError(f"r_low must lie in (0, 1), got {r_low}")
    if r_high is not None and not r_low < r_high < 1:
        raise ValueError(f"need r_low < r_high < 1, got ({r_low}, {r_high})")


def _exceed(x: np.ndarray, alpha: float) -> np.ndarray:
    """Rows strictly above the alpha-quantile; alpha = 0 keeps every row."""
    if alpha == 0:
        return np.ones(x.shape, dtype=bool)
    return x > quantile(x, alpha)


def pair_difference_set(data: ObservationMatrix, i: int, j: int, alpha: float) -> PairDifferenceSet:
    _check_alpha(alpha)
    if i == j:
        raise ValueError("i and j must differ")
    both = data.mask[:, i] & data.mask[:, j]
    xi = data.values[both, i]
    xj = data.values[both, j]
    if xj.size == 0:
        return PairDifferenceSet(np.empty(0), i, j, alpha)
    keep = _exceed(xj, alpha)
    return PairDifferenceSet(xi[keep] - xj[keep], i, j, alpha)


def quantile_to_mean_gap(diffs: PairDifferenceSet, r_low: float, floor: int = DEFAULT_FLOOR) -> float:
    """``(mean - Q(r_low))**2 / n``, or FORBIDDEN below the count floor."""
    _check_levels(r_low)
    n = diffs.n
    if n < max(floor, 1):
        return FORBIDDEN
    v = diffs.values
    return float((v.mean() - quantile(v, r_low)) ** 2 / n)


def lower_quantile_gap(diffs: PairDifferenceSet, r_low: float, r_high: float,
                       floor: int = DEFAULT_FLOOR) -> float:
    """``(Q(r_high) - Q(r_low))**2 / n``, or FORBIDDEN below the count floor."""
    _check_levels(r_low, r_high)
    n = diffs.n
    if n < max(floor, 1):
        return FORBIDDEN
    lo, hi = quantile(diffs.values, [r_low, r_high])
    return float((hi - lo) ** 2 / n)


@dataclass(frozen=True)
class ScoreMatrix:
    """Edge scores ``w[i, j]`` for ``j -> i``.

    Forbidden cells (the diagonal and pairs below the count floor) hold
    ``FORBIDDEN``. ``counts[i, j]`` is the number of rows the score used.
    """

    w: np.ndarray
    counts: np.ndarray
    kind: str
    labels: tuple[str, ...]
    params: dict = field(default_factory=dict)

    @property
    def maximize(self) -> bool:
        return self.kind in MAXIMIZED

    @property
    def forbidden(self) -> np.ndarray:
        return ~np.isfinite(self.w)

    def cost(self) -> np.ndarray:
        """Scores oriented for minimization, forbidden cells infinite."""
        c = -self.w if self.maximize else self.w.copy()
        c[self.forbidden] = np.inf
        return c


def _gap_block(diff: np.ndarray, kind: str, r_low: float, r_high: float | None) -> np.ndarray:
    n = diff.shape[0]
    if kind == "qtm":
        gap = diff.mean(axis=0) - quantile(diff, r_low, axis=0)
    else:
        lo, hi = quantile(diff, [r_low, r_high], axis=0)
        gap = hi - lo
    return gap**2 / n


def _ecdf(x: np.ndarray) -> np.ndarray:
    return rankdata(x, method="max") / x.size


def _column_complete(x, j, kind, r_low, r_high, alpha, floor, ecdf, upper):
    """Scores for every ``i`` against a fully observed column ``j``."""
    n, d = x.shape
    if kind == "corr":
        return None, None
    keep = _exceed(x[:, j], alpha)
    n_j = int(keep.sum())
    counts = np.full(d, n_j)
    if n_j < floor:
        return np.full(d, FORBIDDEN), counts
    if kind in ("qtm", "lqg"):
        diff = x[keep] - x[keep, j][:, None]
        return _gap_block(diff, kind, r_low, r_high), counts
    if kind == "chi":
        return (x[keep] > upper[None, :]).mean(axis=0), counts
    return ecdf[keep].mean(axis=0), counts


def _pair(xi, xj, kind, r_low, r_high, alpha, floor):
    """Score and count for a single pair of pairwise-complete columns."""
    if kind == "corr":
        n = xi.size
        if n < floor or n < 2:
            return FORBIDDEN, n
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.corrcoef(xi, xj)[0, 1]
        return (float(r) if np.isfinite(r) else FORBIDDEN), n
    if xj.size == 0:
        return FORBIDDEN, 0
    keep = _exceed(xj, alpha)
    n = int(keep.sum())
    if n < floor:
        return FORBIDDEN, n
    if kind in ("qtm", "lqg"):
        return float(_gap_block((xi[keep] - xj[keep])[:, None], kind, r_low, r_high)[0]), n
    if kind == "chi":
        return float((xi[keep] > quantile(xi, alpha)).mean()), n
    return float(_ecdf(xi)[keep].mean()), n


def score_matrix(data: ObservationMatrix, kind: str = "qtm", *, r_low: float = 0.05,
                 r_high: float | None = None, alpha: float = 0.9,
                 floor: int = DEFAULT_FLOOR, pairwise: bool = False) -> ScoreMatrix:
    """Fill the score matrix for every ordered pair of nodes.

    Parameters
    ----------
    kind : {"qtm", "lqg", "chi", "gamma", "corr"}
        Quantile-to-mean gap, lower quantile gap, extremal correlation,
        causal tail coefficient or Pearson correlation.
    r_low, r_high : float
        Quantile levels of the gap scores (``r_high`` only for ``"lqg"``).
    alpha : float
        Threshold level on the source column. For ``chi`` and ``gamma`` it is
        also the exceedance level ``u`` of the target column.
    floor : int
        Pairs with fewer usable rows are forbidden.
    pairwise : bool
        Force the per-pair code path even on complete data.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    _check_alpha(alpha)
    if kind in ("qtm", "lqg"):
        _check_levels(r_low, r_high if kind == "lqg" else None)
        if kind == "lqg" and r_high is None:
            raise ValueError("lqg needs r_high")
    if floor < 1:
        raise ValueError("floor must be at least 1")

    x, mask = data.values, data.mask
    d = data.d
    w = np.full((d, d), FORBIDDEN)
    counts = np.zeros((d, d), dtype=int)
    fast = data.complete and not pairwise

    if fast and kind == "corr":
        n = data.n
        counts[:] = n
        if n >= max(floor, 2):
            with np.errstate(invalid="ignore", divide="ignore"):
                r = np.corrcoef(x, rowvar=False)
            w = np.where(np.isfinite(r), r, FORBIDDEN)
    elif fast:
        ecdf = np.column_stack([_ecdf(x[:, k]) for k in range(d)]) if kind == "gamma" else None
        upper = quantile(x, alpha, axis=0) if kind == "chi" else None
        for j in range(d):
            w[:, j], counts[:, j] = _column_complete(x, j, kind, r_low, r_high, alpha, floor, ecdf, upper)
    else:
        for j in range(d):
            for i in range(d):
                if i == j:
                    continue
                both = mask[:, i] & mask[:, j]
                w[i, j], counts[i, j] = _pair(x[both, i], x[both, j], kind, r_low, r_high, alpha, floor)

    np.fill_diagonal(w, FORBIDDEN)
    np.fill_diagonal(counts, 0)
    params = {"alpha": alpha, "floor": floor}
    if kind in ("qtm", "lqg"):
        params["r_low"] = r_low
    if kind == "lqg":
        params["r_high"] = r_high
    return ScoreMatrix(w, counts, kind, data.labels, params)


def data_starved_nodes(scores: ScoreMatrix) -> list[str]:
    """Nodes that share too few rows with every other node."""
    ok = np.isfinite(scores.w)
    isolated = ~(ok.any(axis=0) | ok.any(axis=1))
    return [scores.labels[k] for k in np.flatnonzero(isolated)]


def warn_if_degenerate(scores: ScoreMatrix) -> None:
    finite = scores.w[np.isfinite(scores.w)]
    if finite.size and np.all(finite == finite[0]):
        warnings.warn("all admissible scores are equal; the tree is fixed by tie-breaking only",
                      stacklevel=2)
