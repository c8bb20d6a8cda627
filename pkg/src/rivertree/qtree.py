"""Tree estimation for fixed tuning parameters: score, then optimum branching."""

from __future__ import annotations

from dataclasses import dataclass, asdict

from .arborescence import min_arborescence
from .errors import InfeasibleError
from .model import ObservationMatrix, RootedTree
from .scores import DEFAULT_FLOOR, KINDS, ScoreMatrix, data_starved_nodes, score_matrix


@dataclass(frozen=True)
class QTreeParams:
    """Tuning parameters.

    ``r_low`` is the low quantile level of the gap score, ``alpha`` the
    threshold level on the source node, ``r_high`` the upper level of the
    lower quantile gap. Defaults are ``(r_low, alpha) = (0.05, 0.9)``.
    """

    r_low: float = 0.05
    alpha: float = 0.9
    kind: str = "qtm"
    r_high: float | None = None
    floor: int = DEFAULT_FLOOR

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not 0 < self.r_low < 1:
            raise ValueError("r_low must lie in (0, 1)")
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if self.kind == "lqg":
            if self.r_high is None or not self.r_low < self.r_high < 1:
                raise ValueError("lqg needs r_low < r_high < 1")
        if self.floor < 1:
            raise ValueError("floor must be at least 1")

    def replace(self, **changes) -> "QTreeParams":
        return QTreeParams(**{**asdict(self), **changes})


def scores_for(data: ObservationMatrix, params: QTreeParams) -> ScoreMatrix:
    return score_matrix(data, params.kind, r_low=params.r_low, r_high=params.r_high,
                        alpha=params.alpha, floor=params.floor)


def fit(data: ObservationMatrix, params: QTreeParams | None = None) -> RootedTree:
    """Minimum root-directed spanning tree of the pairwise score matrix.

    Raises
    ------
    InfeasibleError
        When the count floor leaves no admissible spanning tree; the error
        names nodes sharing too few observations with all others if any.
    """
    params = params or QTreeParams()
    if data.n < 2:
        raise ValueError("need at least two observations")
    w = scores_for(data, params)
    try:
        return min_arborescence(w).tree
    except InfeasibleError as exc:
        starved = data_starved_nodes(w)
        if starved:
            raise InfeasibleError(
                f"nodes {starved} share fewer than {params.floor} usable observations "
                "with every other node", starved) from exc
        raise
