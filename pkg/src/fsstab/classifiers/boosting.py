"""AdaBoost as stagewise minimization of the exponential loss.

Each round fits a least-squares regression tree (at most ``max_splits``
splits) to the pseudo-residuals ``y * exp(-y F)`` of the exponential loss,
replaces every leaf value by the loss-minimizing constant
``0.5 * log(W+ / W-)`` and adds the tree scaled by the learning rate.
Since each leaf step lies between 0 and the leaf's exact minimizer, the
training exponential loss never increases from one round to the next.
"""
import numpy as np

from ..trees import grow_regression_tree

_SMOOTH = 1e-3


class BoostedTrees:
    threshold = 0.0

    def __init__(self, X, y01, n_rounds=100, learning_rate=0.1, max_splits=20, min_leaf=5):
        X = np.asarray(X, dtype=float)
        ypm = np.where(np.asarray(y01) == 1, 1.0, -1.0)
        order = np.argsort(X.T, axis=1, kind="stable")
        F = np.zeros(X.shape[0])
        self.trees = []
        self.loss_path = [float(np.mean(np.exp(-ypm * F)))]
        for _ in range(n_rounds):
            w = np.exp(-ypm * F)
            w /= w.mean()
            tree, leaves = grow_regression_tree(X, ypm * w, max_splits, min_leaf, order)
            step = np.zeros(X.shape[0])
            for node, rows in leaves.items():
                wp = w[rows][ypm[rows] > 0].sum()
                wn = w[rows][ypm[rows] < 0].sum()
                tree.value[node] = learning_rate * 0.5 * np.log((wp + _SMOOTH) / (wn + _SMOOTH))
                step[rows] = tree.value[node]
            F += step
            self.trees.append(tree)
            self.loss_path.append(float(np.mean(np.exp(-ypm * F))))

    def decision(self, Q):
        Q = np.asarray(Q, dtype=float)
        out = np.zeros(Q.shape[0])
        for tree in self.trees:
            out += tree.predict(Q)
        return out
