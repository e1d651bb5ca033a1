"""Filter rankers: absolute Pearson correlation with the label, and ReliefF."""
import numpy as np
from scipy.spatial.distance import cdist


def pearson_scores(X, y):
    """|corr(feature, label)| per column; constant columns score 0."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    sx = np.sqrt((Xc * Xc).sum(axis=0))
    sy = np.sqrt(yc @ yc)
    num = Xc.T @ yc
    den = sx * sy
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / den, 0.0)
    tiny = 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0)) * np.sqrt(X.shape[0])
    r[sx <= tiny] = 0.0
    return np.abs(r)


def relief_weights(X, y, n_neighbors=10, n_samples=0, seed=0, chunk=256):
    """ReliefF weights for a two-class problem.

    Features are rescaled to [0, 1] by their range and compared with the
    Manhattan distance. For every sampled instance the ``n_neighbors`` nearest
    hits (same class) lower a feature's weight by their mean difference and
    the nearest misses raise it. ``n_samples=0`` iterates over every instance.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, p = X.shape
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    Xs = np.divide(X - lo, span, out=np.zeros_like(X), where=span > 0)
    if n_samples and n_samples < n:
        sample = np.sort(np.random.default_rng(seed).choice(n, size=n_samples, replace=False))
    else:
        sample = np.arange(n)
    m = sample.size
    by_class = {c: np.flatnonzero(y == c) for c in (0, 1)}
    W = np.zeros(p)
    for start in range(0, m, chunk):
        rows = sample[start:start + chunk]
        for c in (0, 1):
            R = rows[y[rows] == c]
            if R.size == 0:
                continue
            for pool, sign in ((by_class[c], -1.0), (by_class[1 - c], 1.0)):
                D = cdist(Xs[R], Xs[pool], metric="cityblock")
                if sign < 0:
                    D[R[:, None] == pool[None, :]] = np.inf
                k = min(n_neighbors, pool.size - (1 if sign < 0 else 0))
                if k <= 0:
                    continue
                nn = pool[np.argsort(D, axis=1, kind="stable")[:, :k]]
                diff = np.abs(Xs[R][:, None, :] - Xs[nn]).sum(axis=(0, 1))
                W += sign * diff / (m * k)
    return W
