"""The six feature rankers and the resampled ensemble runner.

Every ranker maps a :class:`~fsstab.core.Dataset` to a permutation of
``1..p`` (rank 1 = most relevant). Rows are put into a canonical order first,
so results do not depend on the row order of the input.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..classifiers import ClassifierSpec
from ..core import Dataset, RankingEnsemble, ranking_from_order, ranking_from_scores
from ..errors import ConfigError
from ..ingest import subsample
from ..params import Param, SpecBase, non_negative_int, positive_float, positive_int
from ..seeding import derive_seed
from .embedded import forest_importances, svm_rfe
from .filters import pearson_scores, relief_weights
from .wrapper import forward_selection


def _step(v):
    v = positive_float("step")(v)
    if v >= 1 and v != int(v):
        raise ConfigError(f"step >= 1 must be a whole number of features, got {v}")
    return v


def _inner(kind):
    def check(v):
        if not isinstance(v, dict):
            raise ConfigError("inner must be a mapping of classifier hyperparameters")
        ClassifierSpec(kind, v)
        return dict(v)
    return check


def _wrapper_params(kind):
    return {
        "folds": Param(3, positive_int("folds")),
        "max_steps": Param(0, non_negative_int("max_steps")),
        "inner": Param({}, _inner(kind)),
    }


class RankerSpec(SpecBase):
    label = "ranker"
    KINDS = {
        "Pearson": {},
        "Relief": {
            "n_neighbors": Param(10, positive_int("n_neighbors")),
            "n_samples": Param(0, non_negative_int("n_samples")),
        },
        "SvmWrapper": _wrapper_params("SVM"),
        "NnWrapper": _wrapper_params("NN"),
        "SvmRfe": {
            "step": Param(1.0, _step),
            "C": Param(1.0, positive_float("C")),
        },
        "RandomForest": {
            "n_trees": Param(200, positive_int("n_trees")),
            "max_features": Param(0, non_negative_int("max_features")),
            "max_depth": Param(0, non_negative_int("max_depth")),
            "min_leaf": Param(1, positive_int("min_leaf")),
        },
    }

    @property
    def name(self) -> str:
        return self.kind

    def inner_spec(self) -> ClassifierSpec:
        return ClassifierSpec("SVM" if self.kind == "SvmWrapper" else "NN", self["inner"])


def _canonical(d: Dataset):
    order = np.lexsort(np.column_stack([d.features, d.labels]).T[::-1])
    return d.features[order], d.labels[order]


def _round(scores):
    """Drop sub-1e-12 relative noise so that float-level jitter cannot reorder ties."""
    scores = np.asarray(scores, dtype=float)
    scale = np.abs(scores).max() if scores.size else 0.0
    if scale == 0:
        return scores
    return np.round(scores / scale, 12)


def rank_pearson(d: Dataset) -> np.ndarray:
    X, y = _canonical(d)
    return ranking_from_scores(_round(pearson_scores(X, y)))


def rank_relief(d: Dataset, spec: RankerSpec | None = None, seed=0) -> np.ndarray:
    spec = spec or RankerSpec("Relief")
    X, y = _canonical(d)
    return ranking_from_scores(_round(relief_weights(X, y, spec["n_neighbors"], spec["n_samples"], seed)))


def rank_wrapper(d: Dataset, inner: ClassifierSpec, spec: RankerSpec | None = None, seed=0) -> np.ndarray:
    spec = spec or RankerSpec("SvmWrapper" if inner.kind == "SVM" else "NnWrapper")
    X, y = _canonical(d)
    order, _, _ = forward_selection(X, y, inner, spec["folds"], spec["max_steps"], seed)
    return ranking_from_order(order, d.n_features)


def rank_svm_rfe(d: Dataset, spec: RankerSpec | None = None, seed=0) -> np.ndarray:
    spec = spec or RankerSpec("SvmRfe")
    X, y = _canonical(d)
    order, _ = svm_rfe(X, y, spec["C"], spec["step"])
    return ranking_from_order(order, d.n_features)


def rank_random_forest(d: Dataset, spec: RankerSpec | None = None, seed=0) -> np.ndarray:
    spec = spec or RankerSpec("RandomForest")
    X, y = _canonical(d)
    imp = forest_importances(X, y, spec["n_trees"], spec["max_features"], spec["max_depth"], spec["min_leaf"], seed)
    return ranking_from_scores(_round(imp))


def rank(spec: RankerSpec, d: Dataset, seed=0) -> np.ndarray:
    """Dispatch to the ranker named by ``spec.kind``."""
    if spec.kind == "Pearson":
        return rank_pearson(d)
    if spec.kind == "Relief":
        return rank_relief(d, spec, seed)
    if spec.kind in ("SvmWrapper", "NnWrapper"):
        return rank_wrapper(d, spec.inner_spec(), spec, seed)
    if spec.kind == "SvmRfe":
        return rank_svm_rfe(d, spec, seed)
    return rank_random_forest(d, spec, seed)


def run_seeds(ranker: RankerSpec, runs: int, seed) -> list:
    return [derive_seed(seed, "ensemble", ranker.name, i) for i in range(runs)]


def run_ensemble(ranker: RankerSpec, d: Dataset, runs=7, fraction=0.7, seed=0, threads=1) -> RankingEnsemble:
    """Rank ``runs`` independent subsamples of ``d``.

    Run i draws its subsample and seeds the ranker from a seed derived from
    ``(seed, ranker name, i)``; results are gathered in run order, so the
    thread count never changes the output.
    """
    if runs < 2:
        raise ConfigError("an ensemble needs at least two runs")
    seeds = run_seeds(ranker, runs, seed)

    def one(s):
        sub = subsample(d, fraction, derive_seed(s, "subsample"))
        return rank(ranker, sub, derive_seed(s, "rank"))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rankings = list(pool.map(one, seeds))
    else:
        rankings = [one(s) for s in seeds]
    return RankingEnsemble(ranker.name, np.vstack(rankings), tuple(seeds))


__all__ = [
    "RankerSpec",
    "rank",
    "rank_pearson",
    "rank_relief",
    "rank_wrapper",
    "rank_svm_rfe",
    "rank_random_forest",
    "run_ensemble",
]
