"""Root-directed tree estimation for extreme river discharges.

Fits a max-linear Bayesian tree to multivariate extremes by scoring every
ordered node pair and finding a minimum-cost rooted spanning tree.
"""

__version__ = "0.1.0"

from .arborescence import (Arborescence, max_arborescence, min_arborescence,
                           reachability, reachability_matrix)
from .ensemble import (AutotuneResult, EnsembleSummary, TreeEnsemble, autotune, centroid,
                       parameter_grid, stability_matrix, subsample_fit, variability)
from .errors import InfeasibleError
from .metrics import MetricReport, metric_report, shd, tree_reports
from .model import (GenerativeConfig, KleeneStar, ObservationMatrix, RootedTree, kleene_star,
                    max_linear, noise_free_cstar_estimate, random_rooted_tree,
                    sample_edge_weights, simulate, simulate_setting)
from .pipeline import PRESETS, DeclusterConfig, RawSeries, decluster, decluster_raw, slot_maxima
from .qtree import QTreeParams, fit, scores_for
from .scores import FORBIDDEN, KINDS, ScoreMatrix, score_matrix

__all__ = [
    "Arborescence", "AutotuneResult", "DeclusterConfig", "EnsembleSummary", "FORBIDDEN",
    "GenerativeConfig", "InfeasibleError", "KINDS", "KleeneStar", "MetricReport",
    "ObservationMatrix", "PRESETS", "QTreeParams", "RawSeries", "RootedTree", "ScoreMatrix",
    "TreeEnsemble", "autotune", "centroid", "decluster", "decluster_raw", "fit", "kleene_star",
    "max_arborescence", "max_linear", "metric_report", "min_arborescence",
    "noise_free_cstar_estimate", "parameter_grid", "random_rooted_tree", "reachability",
    "reachability_matrix", "sample_edge_weights", "score_matrix", "scores_for", "shd",
    "simulate", "simulate_setting", "slot_maxima", "stability_matrix", "subsample_fit",
    "tree_reports", "variability",
]
