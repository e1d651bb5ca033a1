"""Decision-tree growers.

* :func:`grow_regression_tree` - least-squares tree with a cap on the number
  of splits, grown best-first (the leaf with the largest SSE reduction is
  split next). Used as the boosting weak learner.
* :func:`gini_importances` - fully grown Gini classification trees that only
  accumulate per-feature impurity decrease. Used by the forest ranker, which
  never needs to predict.
"""
import heapq

import numpy as np
from numba import njit


class RegressionTree:
    """Flat array representation; ``feature == -1`` marks a leaf."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    @property
    def n_splits(self) -> int:
        return int((self.feature >= 0).sum())

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            rows = np.flatnonzero(inner)
            go_left = X[rows, f[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def predict(self, X):
        return self.value[self.apply(X)]


def _best_split(XT, S, r, min_leaf):
    """Best SSE-reducing split of the rows held (per-feature sorted) in ``S``.

    Returns ``(gain, feature, threshold, n_left)`` or None.
    """
    p, m = S.shape
    if m < 2 * min_leaf:
        return None
    xs = np.take_along_axis(XT, S, axis=1)
    cs = np.cumsum(r[S], axis=1)
    total = cs[:, -1:]
    nl = np.arange(1, m, dtype=float)
    left = cs[:, :-1]
    gain = left ** 2 / nl + (total - left) ** 2 / (m - nl) - total ** 2 / m
    valid = xs[:, :-1] < xs[:, 1:]
    valid[:, : min_leaf - 1] = False
    if min_leaf > 1:
        valid[:, m - min_leaf:] = False
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    f, pos = divmod(flat, m - 1)
    g = gain[f, pos]
    if not np.isfinite(g) or g <= 1e-12 * max(1.0, float(total[f, 0] ** 2 / m)):
        return None
    thr = 0.5 * (xs[f, pos] + xs[f, pos + 1])
    return float(g), int(f), float(thr), pos + 1


def grow_regression_tree(X, r, max_splits=20, min_leaf=1, order=None):
    """Fit ``r`` with at most ``max_splits`` splits.

    ``order`` is the per-feature argsort of ``X`` (p x n), reusable across
    calls on the same design matrix. Returns the tree and, for each leaf, the
    training rows it holds.
    """
    X = np.asarray(X, dtype=float)
    r = np.asarray(r, dtype=float)
    n, p = X.shape
    XT = np.ascontiguousarray(X.T)
    if order is None:
        order = np.argsort(XT, axis=1, kind="stable")
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [float(r.mean())]
    members = {0: order}
    heap, tie = [], 0

    def push(node):
        nonlocal tie
        split = _best_split(XT, members[node], r, min_leaf)
        if split is not None:
            heapq.heappush(heap, (-split[0], tie, node, split))
            tie += 1

    push(0)
    n_splits = 0
    while heap and n_splits < max_splits:
        _, _, node, (_, f, thr, _) = heapq.heappop(heap)
        S = members.pop(node)
        go_left = np.zeros(n, dtype=bool)
        go_left[S[f][XT[f, S[f]] <= thr]] = True
        mask = go_left[S]
        m_left = int(mask[0].sum())
        SL = S[mask].reshape(p, m_left)
        SR = S[~mask].reshape(p, S.shape[1] - m_left)
        ids = []
        for child in (SL, SR):
            cid = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(r[child[0]].mean()))
            members[cid] = child
            ids.append(cid)
        feature[node], threshold[node] = f, thr
        left[node], right[node] = ids
        push(ids[0])
        push(ids[1])
        n_splits += 1
    tree = RegressionTree(feature, threshold, left, right, value)
    leaf_rows = {node: S[0] for node, S in members.items()}
    return tree, leaf_rows


@njit(cache=True)
def _splitmix(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def _gini_tree(X, y, rows, max_features, max_depth, min_leaf, seed, importance):
    """Grow one Gini tree depth-first on ``rows`` (bootstrap indices, repeats allowed).

    Adds ``n_node * impurity - n_left * imp_left - n_right * imp_right`` to
    ``importance[feature]`` for every split.
    """
    p = X.shape[1]
    n = rows.size
    work = rows.copy()
    state = np.uint64(seed)
    feats = np.arange(p)
    stack_lo = np.empty(2 * n + 2, dtype=np.int64)
    stack_hi = np.empty(2 * n + 2, dtype=np.int64)
    stack_d = np.empty(2 * n + 2, dtype=np.int64)
    top = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_d[0] = 0
    top = 1
    vals = np.empty(n)
    labs = np.empty(n, dtype=np.int64)
    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_d[top]
        m = hi - lo
        pos = 0
        for t in range(lo, hi):
            pos += y[work[t]]
        if pos == 0 or pos == m or m < 2 * min_leaf:
            continue
        if max_depth > 0 and depth >= max_depth:
            continue
        imp = 1.0 - (pos / m) ** 2 - ((m - pos) / m) ** 2
        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        # partial Fisher-Yates draw of max_features candidates
        for a in range(max_features):
            state, z = _splitmix(state)
            b = a + np.int64(z % np.uint64(p - a))
            tmp = feats[a]
            feats[a] = feats[b]
            feats[b] = tmp
            f = feats[a]
            for t in range(m):
                vals[t] = X[work[lo + t], f]
            o = np.argsort(vals[:m], kind="mergesort")
            for t in range(m):
                labs[t] = y[work[lo + o[t]]]
            left_pos = 0
            for t in range(m - 1):
                left_pos += labs[t]
                nl = t + 1
                if nl < min_leaf or m - nl < min_leaf:
                    continue
                v0 = vals[o[t]]
                v1 = vals[o[t + 1]]
                if v0 >= v1:
                    continue
                nr = m - nl
                right_pos = pos - left_pos
                gl = 1.0 - (left_pos / nl) ** 2 - ((nl - left_pos) / nl) ** 2
                gr = 1.0 - (right_pos / nr) ** 2 - ((nr - right_pos) / nr) ** 2
                gain = m * imp - nl * gl - nr * gr
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (v0 + v1)
        if best_f < 0:
            continue
        importance[best_f] += best_gain
        # partition work[lo:hi] in place
        i = lo
        j = hi - 1
        while i <= j:
            if X[work[i], best_f] <= best_thr:
                i += 1
            else:
                tmp = work[i]
                work[i] = work[j]
                work[j] = tmp
                j -= 1
        stack_lo[top] = lo
        stack_hi[top] = i
        stack_d[top] = depth + 1
        top += 1
        stack_lo[top] = i
        stack_hi[top] = hi
        stack_d[top] = depth + 1
        top += 1


def gini_importances(X, y, n_trees=200, max_features=None, max_depth=0, min_leaf=1, seed=0):
    """Mean-decrease-in-impurity importances of a bootstrap forest, normalized to sum 1.

    All-zero importances (no tree could split) are returned unnormalized.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n, p = X.shape
    mf = max(1, int(np.sqrt(p))) if max_features is None else int(max_features)
    mf = min(mf, p)
    ss = np.random.SeedSequence(seed)
    tree_seeds = ss.generate_state(2 * n_trees, dtype=np.uint64)
    importance = np.zeros(p)
    for t in range(n_trees):
        boot = np.random.default_rng(int(tree_seeds[2 * t])).integers(0, n, size=n)
        _gini_tree(X, y, boot.astype(np.int64), mf, int(max_depth), int(min_leaf), tree_seeds[2 * t + 1], importance)
    total = importance.sum()
    return importance / total if total > 0 else importance
