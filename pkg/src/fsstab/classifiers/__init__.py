"""The five risk-prediction models behind one train/score interface, plus evaluation.

Kinds: ``LR`` (logistic regression), ``KNN`` (cosine k-nearest neighbors),
``SVM`` (gaussian kernel, SMO), ``BT`` (boosted trees), ``NN`` (multilayer
perceptron). Scores are oriented so that larger means more case-like.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..core import Dataset, TopKMask
from ..errors import ConfigError, ShapeError, TrainingError
from ..ingest import Standardizer
from ..params import (
    Param,
    SpecBase,
    float_in,
    non_negative_int,
    one_of,
    positive_float,
    positive_int,
)
from . import logistic
from .boosting import BoostedTrees
from .knn import NearestNeighbors
from .metrics import accuracy, auc, stratified_folds, stratified_split
from .mlp import Perceptron
from .svm import KernelSVM


def _gamma(v):
    if v == "median":
        return v
    return positive_float("gamma")(v)


class ClassifierSpec(SpecBase):
    """Classifier kind plus hyperparameters; unknown names are rejected."""

    label = "classifier"
    KINDS = {
        "LR": {
            "l2": Param(0.0, float_in("l2", 0.0, 1e6)),
            "tol": Param(1e-6, positive_float("tol")),
            "max_iter": Param(100, positive_int("max_iter")),
        },
        "KNN": {
            "k": Param(47, positive_int("k")),
            "metric": Param("cosine", one_of("metric", "cosine", "euclidean")),
        },
        "SVM": {
            "C": Param(1.0, positive_float("C")),
            "gamma": Param("median", _gamma),
            "tol": Param(1e-3, positive_float("tol")),
            "max_iter": Param(0, non_negative_int("max_iter")),
        },
        "BT": {
            "n_rounds": Param(100, positive_int("n_rounds")),
            "learning_rate": Param(0.1, float_in("learning_rate", 0.0, 1.0, lo_open=True)),
            "max_splits": Param(20, positive_int("max_splits")),
            "min_leaf": Param(5, positive_int("min_leaf")),
        },
        "NN": {
            "hidden": Param(4, positive_int("hidden")),
            "epochs": Param(100, positive_int("epochs")),
            "optimizer": Param("scg", one_of("optimizer", "scg", "gd")),
            "learning_rate": Param(0.5, positive_float("learning_rate")),
            "momentum": Param(0.9, float_in("momentum", 0.0, 1.0, hi_open=True)),
            "max_fail": Param(6, positive_int("max_fail")),
            "repeats": Param(3, positive_int("repeats")),
        },
    }

    @property
    def standardizes(self) -> bool:
        return self.kind in ("LR", "KNN", "SVM", "NN")


NN_SPLIT = (0.6, 0.2, 0.2)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """A fitted classifier. ``holdout`` lists the rows an NN kept out of training."""

    spec: ClassifierSpec
    impl: object
    standardizer: Standardizer | None
    n_features: int
    converged: bool = True
    holdout: np.ndarray | None = None
    notes: tuple = ()

    @property
    def threshold(self) -> float:
        return self.impl.threshold


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ShapeError("training matrix must be 2-D with at least one column")
    if X.shape[0] != y.size:
        raise ShapeError(f"{X.shape[0]} rows for {y.size} labels")
    if y.size == 0 or y.min() == y.max():
        raise TrainingError("training data must contain both classes")
    return X, y


def train_arrays(spec: ClassifierSpec, X, y, seed=0) -> TrainedModel:
    """Fit ``spec`` on a raw matrix and 0/1 labels."""
    X, y = _check_xy(X, y)
    hp = spec.hyperparameters
    notes = []
    holdout = None
    st = Standardizer.fit(X) if spec.kind in ("LR", "KNN", "SVM") else None
    Z = st.transform(X) if st is not None else X
    converged = True
    if spec.kind == "LR":
        theta, converged, _ = logistic.fit(Z, y, hp["l2"], hp["tol"], hp["max_iter"])
        impl = _Linear(theta)
    elif spec.kind == "KNN":
        k = hp["k"]
        if k > X.shape[0] - 1:
            k = max(1, X.shape[0] - 1)
            msg = f"KNN k={hp['k']} clamped to {k} for {X.shape[0]} training rows"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
        impl = NearestNeighbors(Z, y, k, hp["metric"])
    elif spec.kind == "SVM":
        impl = KernelSVM(Z, y, hp["C"], hp["gamma"], hp["tol"], hp["max_iter"])
        converged = impl.converged
    elif spec.kind == "BT":
        impl = BoostedTrees(X, y, hp["n_rounds"], hp["learning_rate"], hp["max_splits"], hp["min_leaf"])
    else:
        tr, va, holdout = stratified_split(y, NN_SPLIT, seed)
        if min(np.bincount(y[tr], minlength=2)) == 0:
            raise TrainingError("NN training split lost a class")
        st = Standardizer.fit(X[tr])
        Z = st.transform(X)
        impl = Perceptron(
            Z[tr], y[tr], Z[va], y[va], hp["hidden"], hp["epochs"], hp["optimizer"],
            hp["learning_rate"], hp["momentum"], hp["max_fail"], rng=np.random.SeedSequence(seed),
        )
    if not converged:
        msg = f"{spec.kind} optimizer stopped at its iteration cap"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    return TrainedModel(spec, impl, st, X.shape[1], bool(converged), holdout, tuple(notes))


class _Linear:
    threshold = 0.5

    def __init__(self, theta):
        self.theta = theta

    def decision(self, Z):
        return expit(Z @ self.theta[:-1] + self.theta[-1])


def train(spec: ClassifierSpec, d: Dataset, seed=0) -> TrainedModel:
    return train_arrays(spec, d.features, d.labels, seed)


def score(m: TrainedModel, instances) -> np.ndarray:
    """One class-1 score per row (higher = more case-like)."""
    Q = np.asarray(instances, dtype=float)
    if Q.size == 0 and (Q.ndim < 2 or Q.shape[0] == 0):
        return np.empty(0)
    if Q.ndim != 2 or Q.shape[1] != m.n_features:
        raise ShapeError(f"expected {m.n_features} columns, got shape {Q.shape}")
    if m.standardizer is not None:
        Q = m.standardizer.transform(Q)
    return np.asarray(m.impl.decision(Q), dtype=float)


@dataclass
class EvalResult:
    """Cross-validated performance; ``auc`` is the mean of ``fold_aucs``.

    With leave-one-out folds a single-row test fold has no AUC, so ``auc`` is
    then computed on the pooled out-of-fold scores and ``pooled`` is True.
    """

    auc: float
    accuracy: float
    fold_aucs: list
    fold_accuracies: list
    seed: int
    protocol: str
    pooled: bool = False
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "accuracy": self.accuracy,
            "fold_aucs": list(self.fold_aucs),
            "fold_accuracies": list(self.fold_accuracies),
            "seed": self.seed,
            "protocol": self.protocol,
            "pooled": self.pooled,
        }


def _repeat_seeds(seed, n):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def cross_validate_arrays(spec: ClassifierSpec, X, y, folds=5, seed=0) -> EvalResult:
    X, y = _check_xy(X, y)
    seed = int(seed)
    notes = []
    if spec.kind == "NN":
        aucs, accs = [], []
        for s in _repeat_seeds(seed, spec["repeats"]):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                m = train_arrays(spec, X, y, s)
            sc = score(m, X[m.holdout])
            aucs.append(auc(sc, y[m.holdout]))
            accs.append(accuracy(sc, y[m.holdout], m.threshold))
        return EvalResult(float(np.mean(aucs)), float(np.mean(accs)), aucs, accs, seed, "repeated-split")

    n = y.size
    if not isinstance(folds, (int, np.integer)) or folds < 2 or folds > n:
        raise ConfigError(f"folds must be an integer in [2, {n}], got {folds}")
    loo = folds == n and np.bincount(y, minlength=2).min() < folds
    if loo:
        assign = np.random.default_rng(seed).permutation(n)
    else:
        assign = stratified_folds(y, folds, seed)
    oof = np.empty(n)
    aucs, accs = [], []
    for f in range(folds):
        test = assign == f
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            m = train_arrays(spec, X[~test], y[~test], seed)
        notes.extend(str(w.message) for w in caught)
        sc = score(m, X[test])
        oof[test] = sc
        accs.append(accuracy(sc, y[test], m.threshold))
        if not loo:
            aucs.append(auc(sc, y[test]))
    if loo:
        return EvalResult(auc(oof, y), float(np.mean(accs)), [], accs, seed, "leave-one-out", True, notes)
    return EvalResult(float(np.mean(aucs)), float(np.mean(accs)), aucs, accs, seed, "cv", False, notes)


def cross_validate(spec: ClassifierSpec, d: Dataset, folds=5, seed=0) -> EvalResult:
    """Stratified k-fold estimate; kind NN uses repeated 60/20/20 splits instead."""
    return cross_validate_arrays(spec, d.features, d.labels, folds, seed)


def evaluate_subset(spec: ClassifierSpec, d: Dataset, mask: TopKMask, folds=5, seed=0) -> EvalResult:
    """Cross-validate on the columns selected by ``mask``."""
    if mask.p != d.n_features:
        raise ShapeError(f"mask over {mask.p} features for a {d.n_features}-feature dataset")
    if mask.k < 1:
        raise ConfigError("feature subset is empty")
    return cross_validate_arrays(spec, d.features[:, mask.included], d.labels, folds, seed)


__all__ = [
    "ClassifierSpec",
    "TrainedModel",
    "EvalResult",
    "train",
    "train_arrays",
    "score",
    "auc",
    "accuracy",
    "cross_validate",
    "cross_validate_arrays",
    "evaluate_subset",
    "stratified_folds",
]
