"""Domain types shared by every module: datasets, rankings, top-k masks, ensembles.

Rankings are plain 1-D float arrays where rank 1 is the most relevant feature.
Raw ranker output is always a permutation of ``1..p``; aggregated rankings may
hold fractional, tied values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BoundsError, DataError, ShapeError


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """M labeled instances over p named numeric features (cases = 1, controls = 0)."""

    feature_names: tuple
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.feature_names)
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ShapeError(f"features must be a 2-D matrix, got shape {X.shape}")
        if len(names) != X.shape[1]:
            raise ShapeError(f"{len(names)} feature names for {X.shape[1]} columns")
        if any(n == "" for n in names):
            raise DataError("feature names must be non-empty")
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ShapeError(f"{y.shape} labels for {X.shape[0]} rows")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        if not np.all(np.isin(y, (0, 1))):
            raise DataError("labels must be binary 0/1")
        if y.size and not (np.any(y == 1) and np.any(y == 0)):
            raise DataError("both classes must be present")
        if X.shape[0] == 0:
            raise DataError("dataset has no rows")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "features", _frozen(X, float))
        object.__setattr__(self, "labels", _frozen(y, np.int64))

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take_rows(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.feature_names, self.features[idx], self.labels[idx])

    def take_features(self, cols) -> "Dataset":
        """Column-restricted copy; ``cols`` is an index sequence or a boolean mask."""
        cols = np.asarray(cols)
        if cols.dtype == bool:
            if cols.shape != (self.n_features,):
                raise ShapeError("feature mask length differs from p")
            cols = np.flatnonzero(cols)
        if cols.size == 0:
            raise DataError("cannot restrict a dataset to zero features")
        return Dataset(tuple(self.feature_names[i] for i in cols), self.features[:, cols], self.labels)

    def same_as(self, other: "Dataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True, eq=False)
class TopKMask:
    """Binary inclusion vector over p features with exactly ``k`` ones."""

    included: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.included)
        if m.ndim != 1:
            raise ShapeError("mask must be one-dimensional")
        if not np.all(np.isin(m, (0, 1))):
            raise DataError("mask entries must be 0/1")
        object.__setattr__(self, "included", _frozen(m.astype(bool), bool))

    @property
    def k(self) -> int:
        return int(self.included.sum())

    @property
    def p(self) -> int:
        return self.included.shape[0]

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.included)

    @classmethod
    def from_indices(cls, indices, p) -> "TopKMask":
        m = np.zeros(p, dtype=bool)
        idx = np.asarray(list(indices), dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= p):
            raise BoundsError(f"feature index outside [0, {p})")
        m[idx] = True
        return cls(m)

    @classmethod
    def from_names(cls, names: Sequence[str], feature_names: Sequence[str]) -> "TopKMask":
        lookup = {n: i for i, n in enumerate(feature_names)}
        missing = [n for n in names if n not in lookup]
        if missing:
            raise DataError(f"unknown feature names: {missing}")
        return cls.from_indices([lookup[n] for n in names], len(feature_names))

    def __and__(self, other: "TopKMask") -> "TopKMask":
        if other.p != self.p:
            raise ShapeError("masks over different p")
        return TopKMask(self.included & other.included)

    def __or__(self, other: "TopKMask") -> "TopKMask":
        if other.p != self.p:
            raise ShapeError("masks over different p")
        return TopKMask(self.included | other.included)

    def __eq__(self, other):
        return isinstance(other, TopKMask) and np.array_equal(self.included, other.included)

    def __hash__(self):
        return hash(self.included.tobytes())


@dataclass(frozen=True, eq=False)
class RankingEnsemble:
    """K rankings of the same p features produced by repeated runs of one ranker."""

    ranker_name: str
    rankings: np.ndarray
    seeds: tuple = field(default=())

    def __post_init__(self):
        R = np.asarray(self.rankings, dtype=float)
        if R.ndim != 2:
            raise ShapeError("rankings must form a K x p matrix")
        if R.shape[0] < 2:
            raise DataError("an ensemble needs at least two rankings")
        for r in R:
            check_ranking(r)
        seeds = tuple(int(s) for s in self.seeds)
        if seeds and len(seeds) != R.shape[0]:
            raise ShapeError(f"{len(seeds)} seeds for {R.shape[0]} rankings")
        object.__setattr__(self, "rankings", _frozen(R, float))
        object.__setattr__(self, "seeds", seeds)

    @property
    def n_runs(self) -> int:
        return self.rankings.shape[0]

    @property
    def n_features(self) -> int:
        return self.rankings.shape[1]

    def to_dict(self) -> dict:
        return {
            "ranker": self.ranker_name,
            "seeds": list(self.seeds),
            "rankings": [[_num(v) for v in row] for row in self.rankings],
        }

    @classmethod
    def from_dict(cls, doc) -> "RankingEnsemble":
        return cls(doc["ranker"], doc["rankings"], tuple(doc.get("seeds", ())))


def _num(v):
    v = float(v)
    return int(v) if v.is_integer() else v


def check_ranking(r, raw: bool = False) -> np.ndarray:
    """Validate a ranking vector and return it as a float array.

    With ``raw=True`` the ranking must be a permutation of ``1..p``; otherwise
    every rank only has to lie in ``[1, p]``.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ShapeError("a ranking must be a non-empty 1-D vector")
    p = r.size
    if not np.all(np.isfinite(r)) or r.min() < 1 or r.max() > p:
        raise DataError(f"ranks must lie in [1, {p}]")
    if raw and not np.array_equal(np.sort(r), np.arange(1, p + 1)):
        raise DataError("raw ranking is not a permutation of 1..p")
    return r


def ranking_from_scores(scores) -> np.ndarray:
    """Permutation ranking from relevance scores: highest score gets rank 1.

    Equal scores are ordered by ascending feature index.
    """
    scores = np.asarray(scores, dtype=float)
    order = np.lexsort((np.arange(scores.size), -scores))
    ranks = np.empty(scores.size)
    ranks[order] = np.arange(1, scores.size + 1)
    return ranks


def ranking_from_order(order, p: int) -> np.ndarray:
    """Ranking where ``order[0]`` gets rank 1, ``order[1]`` rank 2, and so on."""
    order = np.asarray(order, dtype=int)
    if order.size != p or np.unique(order).size != p:
        raise DataError("order must list every feature exactly once")
    ranks = np.empty(p)
    ranks[order] = np.arange(1, p + 1)
    return ranks


def feature_order(r) -> np.ndarray:
    """Feature indices sorted from most to least relevant (index breaks ties)."""
    r = np.asarray(r, dtype=float)
    return np.lexsort((np.arange(r.size), r))


def to_top_k(r, k: int) -> TopKMask:
    """Select the ``k`` best-ranked features (``s_i = 1`` iff feature i is among them).

    For a permutation this is exactly ``r_i <= k``. Tied ranks straddling the
    boundary are resolved in favor of the lower feature index.
    """
    r = check_ranking(r)
    p = r.size
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= p:
        raise BoundsError(f"k must be an integer in [1, {p}], got {k}")
    m = np.zeros(p, dtype=bool)
    m[feature_order(r)[: int(k)]] = True
    return TopKMask(m)


def aggregate_median(e: RankingEnsemble) -> np.ndarray:
    """Per-feature median rank across the runs; fractional ties are kept as-is."""
    return np.median(e.rankings, axis=0)
