"""Stability of a ranker across repeated runs.

Pairwise similarity of rankings (Spearman) or of their top-k subsets
(Jaccard, Kuncheva), and the mean over all unordered pairs of an ensemble.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .core import RankingEnsemble, TopKMask, check_ranking, feature_order, to_top_k
from .errors import BoundsError, ConfigError, DomainError, ShapeError

METRICS = ("Spearman", "Jaccard", "Kuncheva")


def spearman(r, r2) -> float:
    """``1 - 6 sum d^2 / (p (p^2 - 1))`` applied to the rank values as given."""
    a = check_ranking(r)
    b = check_ranking(r2)
    if a.size != b.size:
        raise ShapeError(f"rankings over different p ({a.size} vs {b.size})")
    p = a.size
    if p < 2:
        raise DomainError("Spearman correlation needs p >= 2")
    d = a - b
    return float(1.0 - 6.0 * (d @ d) / (p * (p * p - 1.0)))


def _masks(s, s2):
    if s.p != s2.p:
        raise ShapeError(f"masks over different p ({s.p} vs {s2.p})")
    return s.included, s2.included


def jaccard(s: TopKMask, s2: TopKMask) -> float:
    """Size of the intersection over size of the union; 1 for two empty masks."""
    a, b = _masks(s, s2)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def kuncheva(s: TopKMask, s2: TopKMask) -> float:
    """Kuncheva's consistency index ``(o - k^2/p) / (k - k^2/p)``; needs ``0 < k < p``."""
    a, b = _masks(s, s2)
    k, p = s.k, s.p
    if s2.k != k:
        raise ShapeError(f"masks of different size ({k} vs {s2.k})")
    if not 0 < k < p:
        raise DomainError(f"Kuncheva index undefined for k={k}, p={p}")
    o = int(np.count_nonzero(a & b))
    e = k * k / p
    return (o - e) / (k - e)


@dataclass(frozen=True, eq=False)
class StabilityScore:
    """Mean pairwise similarity and the symmetric matrix it came from.

    Diagonal entries hold the self-similarity (1.0); only the strict upper
    triangle enters ``value``.
    """

    metric: str
    value: float
    pairwise: np.ndarray
    k: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "k": self.k,
            "value": float(self.value),
            "pairwise": [[float(v) for v in row] for row in self.pairwise],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc) -> "StabilityScore":
        k = doc.get("k")
        return cls(doc["metric"], float(doc["value"]), np.asarray(doc["pairwise"], dtype=float),
                   None if k is None else int(k))

    @classmethod
    def from_json(cls, text: str) -> "StabilityScore":
        return cls.from_dict(json.loads(text))


def _metric(name: str) -> str:
    for m in METRICS:
        if m.lower() == str(name).lower():
            return m
    raise ConfigError(f"unknown stability metric {name!r}; expected one of {METRICS}")


def ensemble_stability(e: RankingEnsemble, metric: str = "Spearman", k: Optional[int] = None) -> StabilityScore:
    """Average ``metric`` over the ``K(K-1)/2`` unordered pairs of runs in ``e``."""
    metric = _metric(metric)
    K = e.n_runs
    if metric == "Spearman":
        items = list(e.rankings)
        fn = spearman
    else:
        if k is None:
            raise ConfigError(f"{metric} stability needs k")
        items = [to_top_k(r, k) for r in e.rankings]
        fn = jaccard if metric == "Jaccard" else kuncheva
    M = np.eye(K)
    vals = []
    for i, j in combinations(range(K), 2):
        v = fn(items[i], items[j])
        M[i, j] = M[j, i] = v
        vals.append(v)
    return StabilityScore(metric, float(np.mean(vals)), M, None if metric == "Spearman" else int(k))


@dataclass(frozen=True)
class JaccardProfile:
    """Jaccard stability at several subset sizes plus its mean over k = 1..p."""

    ranker_name: str
    points: tuple  # ((k, value), ...)
    mean_all_k: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "value"])
        for k, v in self.points:
            w.writerow([k, repr(float(v))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "ranker": self.ranker_name,
            "points": [[int(k), float(v)] for k, v in self.points],
            "mean_all_k": float(self.mean_all_k),
        }


def _mean_pairwise_jaccard(tops: np.ndarray, k: int) -> float:
    """Mean Jaccard over pairs when every set has exactly ``k`` members."""
    K = tops.shape[0]
    inter = tops.astype(np.int64) @ tops.T.astype(np.int64)
    iu = np.triu_indices(K, 1)
    o = inter[iu]
    return float(np.mean(o / (2 * k - o)))


def jaccard_profile(e: RankingEnsemble, k_values: Sequence[int]) -> JaccardProfile:
    """Jaccard ensemble stability at each ``k`` and averaged over every ``k`` in ``1..p``."""
    p = e.n_features
    ks = [int(k) for k in k_values]
    for k in ks:
        if not 1 <= k <= p:
            raise BoundsError(f"k must lie in [1, {p}], got {k}")
    # top-k sets are nested, so one sort per run gives every k at once
    orders = [feature_order(r) for r in e.rankings]
    position = np.empty((e.n_runs, p), dtype=np.int64)
    for i, o in enumerate(orders):
        position[i, o] = np.arange(p)
    all_k = {}
    for k in range(1, p + 1):
        all_k[k] = _mean_pairwise_jaccard(position < k, k)
    points = tuple((k, all_k[k]) for k in ks)
    return JaccardProfile(e.ranker_name, points, float(np.mean(list(all_k.values()))))
