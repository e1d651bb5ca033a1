"""Sequential forward selection guided by the inner classifier's cross-validated AUC.

Starting from the empty set, each step adds the feature whose inclusion gives
the highest mean inner-CV AUC (ties go to the lower feature index). The order
of inclusion is the ranking. With a step budget smaller than p, features not
yet included are ordered by the AUC they reached in the last completed step.
"""
from __future__ import annotations

import warnings

import numpy as np
from numba import njit

from ..classifiers import ClassifierSpec, cross_validate_arrays
from ..classifiers.metrics import auc, stratified_folds
from ..classifiers.svm import kernel_decision, median_gamma, pair_sample, solve_dual
from ..errors import FsstabError
from ..ingest import Standardizer


@njit(cache=True)
def _scaled_dist(D, z, scale, out):
    n = z.size
    for i in range(n):
        zi = z[i]
        for j in range(n):
            d = zi - z[j]
            out[i, j] = scale * (D[i, j] + d * d)


@njit(cache=True)
def _add_sqdiff(D, z):
    n = z.size
    for i in range(n):
        zi = z[i]
        for j in range(n):
            d = zi - z[j]
            D[i, j] += d * d


class KernelSubsetCV:
    """Inner CV for the gaussian SVM with a shared, incrementally built kernel.

    The supplied data are standardized once. Squared distances over the
    selected features are accumulated so a candidate costs one kernel
    evaluation for all folds, and each fold's SMO starts from the dual
    solution of the currently selected set.
    """

    def __init__(self, X, y, spec: ClassifierSpec, folds: int, seed):
        self.Z = Standardizer.fit(X).transform(X)
        self.y = np.asarray(y)
        self.ypm = np.where(self.y == 1, 1.0, -1.0)
        self.spec = spec
        n = self.y.size
        assign = stratified_folds(self.y, folds, seed)
        self.splits = [(np.flatnonzero(assign != f), np.flatnonzero(assign == f)) for f in range(folds)]
        # float32 halves memory traffic; SMO accumulates in float64
        self.D = np.zeros((n, n), dtype=np.float32)
        self.K = np.empty((n, n), dtype=np.float32)
        self.pairs = pair_sample(n)
        self.alphas = [None] * folds

    def _kernel(self, j):
        z = self.Z[:, j].astype(np.float32)
        gamma = self.spec["gamma"]
        if gamma == "median":
            a, b = self.pairs
            gamma = median_gamma(self.D[a, b].astype(float) + (z[a].astype(float) - z[b]) ** 2)
        _scaled_dist(self.D, z, np.float32(-gamma), self.K)
        np.exp(self.K, out=self.K)
        return self.K

    def evaluate(self, j):
        """Mean fold AUC of selected + {j}, and the per-fold dual solutions."""
        K = self._kernel(j)
        hp = self.spec.hyperparameters
        aucs, alphas = [], []
        for (tr, te), a0 in zip(self.splits, self.alphas):
            alpha, rho, _, _ = solve_dual(K, tr, self.y[tr], hp["C"], hp["tol"], hp["max_iter"], a0)
            sv = np.flatnonzero(alpha > 0)
            dec = kernel_decision(K, te, tr[sv], alpha[sv] * self.ypm[tr[sv]], rho)
            aucs.append(auc(dec, self.y[te]))
            alphas.append(alpha)
        return float(np.mean(aucs)), alphas

    def commit(self, j, alphas):
        _add_sqdiff(self.D, self.Z[:, j].astype(np.float32))
        self.alphas = alphas


class GenericSubsetCV:
    """Inner evaluation through :func:`cross_validate_arrays` (used for NN and other kinds)."""

    def __init__(self, X, y, spec: ClassifierSpec, folds: int, seed):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y)
        self.spec = spec.replace(repeats=folds) if spec.kind == "NN" else spec
        self.folds = folds
        self.seed = seed
        self.selected = []

    def evaluate(self, j):
        cols = self.selected + [j]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = cross_validate_arrays(self.spec, self.X[:, cols], self.y, self.folds, self.seed)
        return res.auc, None

    def commit(self, j, _):
        self.selected.append(j)


def forward_selection(X, y, inner: ClassifierSpec, folds=3, max_steps=0, seed=0):
    """Run SFS. Returns ``(order, trace, notes)``.

    ``trace`` has one ``(feature, auc)`` entry per evaluated step.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    steps = p if not max_steps else min(int(max_steps), p)
    cv = KernelSubsetCV(X, y, inner, folds, seed) if inner.kind == "SVM" else GenericSubsetCV(X, y, inner, folds, seed)
    remaining = list(range(p))
    order, trace, notes = [], [], []
    last_scores = {}
    for _ in range(steps):
        if len(remaining) == 1:
            order.append(remaining.pop())
            break
        best_j, best_auc, best_state = -1, -np.inf, None
        last_scores = {}
        for j in remaining:
            try:
                value, state = cv.evaluate(j)
            except (FsstabError, np.linalg.LinAlgError, FloatingPointError) as exc:
                msg = f"inner training failed for candidate {j}: {exc}; scored as AUC 0"
                warnings.warn(msg, RuntimeWarning, stacklevel=2)
                notes.append(msg)
                value, state = 0.0, None
            last_scores[j] = value
            if value > best_auc:
                best_j, best_auc, best_state = j, value, state
        cv.commit(best_j, best_state if best_state is not None else [None] * folds)
        remaining.remove(best_j)
        order.append(best_j)
        trace.append((best_j, best_auc))
    if remaining:
        rest = sorted(remaining, key=lambda j: (-last_scores.get(j, 0.0), j))
        order.extend(rest)
    return np.array(order), trace, notes
