"""Stability and predictive value of feature rankings.

Rankers score features on repeated subsamples; stability metrics and a 2-D
MDS map summarize how much their outcomes agree, and cross-validated AUC
curves show how useful the top-ranked subsets are.
"""
from .core import Dataset, RankingEnsemble, TopKMask, aggregate_median, to_top_k
from .errors import ConfigError, DataError, FsstabError, NumericError

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "RankingEnsemble",
    "TopKMask",
    "aggregate_median",
    "to_top_k",
    "ConfigError",
    "DataError",
    "FsstabError",
    "NumericError",
]
