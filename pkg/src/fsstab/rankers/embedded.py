"""Embedded rankers: SVM recursive feature elimination and forest impurity importance."""
import warnings

import numpy as np
from scipy.optimize import minimize

from ..ingest import Standardizer
from ..trees import gini_importances
from .filters import pearson_scores


def linear_svm_weights(Z, y01, C=1.0, tol=1e-8, max_iter=1000):
    """Weights of an L2-loss soft-margin linear SVM (squared hinge), solved in the primal.

    Minimizes ``0.5 * |w|^2 + C * sum(max(0, 1 - y (w.x + b))^2)`` with L-BFGS.
    Returns ``(w, b, ok)``.
    """
    Z = np.asarray(Z, dtype=float)
    ypm = np.where(np.asarray(y01) == 1, 1.0, -1.0)
    n, p = Z.shape

    def f(theta):
        w, b = theta[:-1], theta[-1]
        margin = 1.0 - ypm * (Z @ w + b)
        act = np.maximum(margin, 0.0)
        value = 0.5 * w @ w + C * act @ act
        coef = -2.0 * C * act * ypm
        grad = np.empty_like(theta)
        grad[:-1] = w + Z.T @ coef
        grad[-1] = coef.sum()
        return value, grad

    res = minimize(f, np.zeros(p + 1), jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-15})
    theta = res.x
    ok = bool(np.all(np.isfinite(theta))) and (res.success or np.linalg.norm(res.jac) < 1e-3 * max(1.0, n))
    return theta[:-1], theta[-1], ok


def svm_rfe(X, y, C=1.0, step=1.0):
    """Recursive feature elimination driven by squared linear-SVM weights.

    ``step >= 1`` removes that many features per iteration; ``0 < step < 1``
    removes that fraction of the survivors (at least one). Standardization is
    refitted on the surviving columns every iteration.

    Returns ``(order, iterations)``: features from most to least relevant
    (the last survivor first), and one record per elimination round.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    surviving = np.arange(p)
    removed = []
    iterations = []
    while surviving.size > 1:
        Z = Standardizer.fit(X[:, surviving]).transform(X[:, surviving])
        w, _, ok = linear_svm_weights(Z, y, C)
        crit = w ** 2
        if not ok:
            warnings.warn("linear SVM failed during RFE; using |correlation| for this step",
                          RuntimeWarning, stacklevel=2)
            crit = pearson_scores(Z, y)
        if step >= 1:
            n_drop = int(step)
        else:
            n_drop = max(1, int(np.floor(step * surviving.size)))
        n_drop = min(n_drop, surviving.size - 1)
        # weakest first; among equal weights the higher index goes first
        weakest = np.lexsort((-surviving, crit))[:n_drop]
        removed.extend(surviving[weakest].tolist())
        iterations.append({"n_surviving": int(surviving.size), "removed": surviving[weakest].tolist(), "svm_ok": ok})
        surviving = np.delete(surviving, weakest)
    removed.extend(surviving.tolist())
    return np.array(removed[::-1]), iterations


def forest_importances(X, y, n_trees=200, max_features=0, max_depth=0, min_leaf=1, seed=0):
    return gini_importances(X, y, n_trees, max_features or None, max_depth, min_leaf, seed)
