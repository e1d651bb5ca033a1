import numpy as np
from scipy.stats import rankdata

from ..errors import ShapeError, StratificationError, UndefinedAUCError


def auc(scores, labels) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic.

    Equals P(case score > control score) + 0.5 * P(tie), computed from
    mid-ranks in O(n log n).
    """
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ShapeError(f"{s.size} scores for {y.size} labels")
    pos = y == 1
    n1 = int(pos.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise UndefinedAUCError("AUC needs at least one case and one control")
    ranks = rankdata(s)
    u = ranks[pos].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def accuracy(scores, labels, threshold: float) -> float:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.size == 0:
        return float("nan")
    return float(np.mean((s > threshold).astype(int) == y))


def stratified_folds(labels, n_folds: int, seed) -> np.ndarray:
    """Fold id per row; each class is spread round-robin over shuffled folds.

    Raises StratificationError if some fold would miss a class.
    """
    y = np.asarray(labels)
    if n_folds < 2:
        raise StratificationError("at least two folds are required")
    counts = np.bincount(y, minlength=2)
    if counts.min() < n_folds:
        raise StratificationError(
            f"class of size {counts.min()} cannot be stratified over {n_folds} folds"
        )
    rng = np.random.default_rng(seed)
    folds = np.empty(y.size, dtype=np.int64)
    offset = 0
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        folds[idx] = (np.arange(idx.size) + offset) % n_folds
        offset += idx.size
    return folds


def stratified_split(labels, fractions, seed) -> list:
    """Partition row indices into len(fractions) stratified, shuffled groups."""
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fr = np.asarray(fractions, dtype=float)
    groups = [[] for _ in fr]
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        cuts = np.floor(np.cumsum(fr)[:-1] * idx.size + 0.5).astype(int)
        for g, part in enumerate(np.split(idx, cuts)):
            groups[g].append(part)
    return [np.sort(np.concatenate(g)) for g in groups]
