"""CSV loading with listwise deletion, standardization, subsampling and synthetic data."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .core import Dataset
from .errors import (
    ConfigError,
    DegenerateSampleError,
    EmptyDataError,
    FormatError,
    GenerationError,
    SchemaError,
)

MAX_SUBSAMPLE_RETRIES = 100


@dataclass(frozen=True)
class CsvSchema:
    label_column: str = "label"
    missing_tokens: frozenset = frozenset({"", "NA"})
    positive_label: str = "1"
    negative_label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "missing_tokens", frozenset(self.missing_tokens))
        if self.positive_label in self.missing_tokens:
            raise ConfigError("positive_label collides with a missing-value token")


@dataclass
class LoadResult:
    dataset: Dataset
    dropped: int


def load_csv(path, schema: CsvSchema = CsvSchema()) -> LoadResult:
    """Read a comma-delimited file with a header row.

    Any row holding a missing token in any column is dropped. The label column
    must contain exactly two distinct tokens (``positive_label`` maps to 1); if
    ``negative_label`` is set it must be the other one.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        rows = [row for row in reader if row]
    if schema.label_column not in header:
        raise SchemaError(f"label column {schema.label_column!r} not in header")
    li = header.index(schema.label_column)
    fcols = [i for i in range(len(header)) if i != li]

    kept, labels, dropped = [], [], 0
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise FormatError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        cells = [c.strip() for c in row]
        if any(c in schema.missing_tokens for c in cells):
            dropped += 1
            continue
        values = []
        for i in fcols:
            try:
                v = float(cells[i])
            except ValueError:
                raise FormatError(f"line {lineno}, column {header[i]!r}: cannot parse {cells[i]!r}") from None
            if not math.isfinite(v):
                raise FormatError(f"line {lineno}, column {header[i]!r}: non-finite value")
            values.append(v)
        kept.append(values)
        labels.append(cells[li])

    if not kept:
        raise EmptyDataError(f"{path}: no complete rows after listwise deletion")
    tokens = set(labels)
    others = tokens - {schema.positive_label}
    if len(others) > 1 or (schema.negative_label is not None and others - {schema.negative_label}):
        raise SchemaError(f"label column must hold two classes, found {sorted(tokens)}")
    y = np.array([1 if t == schema.positive_label else 0 for t in labels])
    names = [header[i] for i in fcols]
    return LoadResult(Dataset(names, np.array(kept, dtype=float).reshape(len(kept), len(fcols)), y), dropped)


def write_csv(d: Dataset, path, label_column: str = "label") -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(d.feature_names) + [label_column])
        for x, y in zip(d.features, d.labels):
            w.writerow([repr(float(v)) for v in x] + [int(y)])


@dataclass(frozen=True)
class Standardizer:
    """Fitted per-feature location and scale. Constant features have scale 0."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        # values within rounding of a constant column count as constant
        tiny = 1e-12 * np.maximum(1.0, np.abs(mean))
        sd = np.where(sd > tiny, sd, 0.0)
        return cls(mean, sd)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.scale > 0, self.scale, 1.0)
        Z = (X - self.mean) / safe
        Z[:, self.scale == 0] = 0.0
        return Z


def standardize(d: Dataset):
    """Zero mean, unit population sd per feature. Returns ``(dataset, Standardizer)``."""
    st = Standardizer.fit(d.features)
    return Dataset(d.feature_names, st.transform(d.features), d.labels), st


def subsample(d: Dataset, fraction: float, seed) -> Dataset:
    """Draw ``floor(fraction * M)`` rows uniformly without replacement.

    Redraws (up to a fixed budget) when one class would vanish.
    """
    if not 0 < fraction <= 1:
        raise ConfigError(f"fraction must lie in (0, 1], got {fraction}")
    M = d.n_instances
    n = int(math.floor(fraction * M + 1e-9))
    if n < 2:
        raise DegenerateSampleError(f"subsample of {n} rows is too small")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_SUBSAMPLE_RETRIES):
        idx = rng.choice(M, size=n, replace=False)
        y = d.labels[idx]
        if y.min() == 0 and y.max() == 1:
            return d.take_rows(idx)
    raise DegenerateSampleError(
        f"could not draw a {n}-row sample with both classes in {MAX_SUBSAMPLE_RETRIES} attempts"
    )


@dataclass
class SyntheticSpec:
    n_instances: int
    n_informative: int
    n_noise: int = 0
    n_redundant: int = 0
    coefficients: list = field(default_factory=list)
    snp_fraction: float = 0.0
    seed: int = 0
    prevalence: float = 1.0 / 3.0
    redundant_noise: float = 0.5

    def __post_init__(self):
        if self.n_instances < 2:
            raise ConfigError("n_instances must be at least 2")
        if min(self.n_informative, self.n_noise, self.n_redundant) < 0:
            raise ConfigError("feature counts must be non-negative")
        if self.n_features < 1:
            raise ConfigError("synthetic data needs at least one feature")
        if not self.coefficients:
            self.coefficients = [1.0] * self.n_informative
        if len(self.coefficients) != self.n_informative:
            raise ConfigError("coefficients must have length n_informative")
        if self.n_redundant and not self.n_informative:
            raise ConfigError("redundant features need informative ones to copy")
        if not 0 <= self.snp_fraction <= 1:
            raise ConfigError("snp_fraction must lie in [0, 1]")
        if not 0 < self.prevalence < 1:
            raise ConfigError("prevalence must lie in (0, 1)")

    @property
    def n_features(self) -> int:
        return self.n_informative + self.n_noise + self.n_redundant

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        doc = json.loads(text)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown SyntheticSpec fields: {sorted(unknown)}")
        missing = {"n_instances", "n_informative"} - set(doc)
        if missing:
            raise ConfigError(f"SyntheticSpec needs {sorted(missing)}")
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _calibrate_intercept(eta, prevalence):
    """Intercept b with mean(sigmoid(eta + b)) == prevalence."""
    f = lambda b: expit(eta + b).mean() - prevalence
    lo, hi = -50.0 - eta.max(), 50.0 - eta.min()
    if f(lo) > 0 or f(hi) < 0:
        raise GenerationError("cannot calibrate the intercept to the target prevalence")
    return brentq(f, lo, hi, xtol=1e-12)


def generate_synthetic(spec: SyntheticSpec):
    """Case-control data from a logistic model with planted informative features.

    Column layout: informative features first, then redundant copies, then noise.
    A ``snp_fraction`` share of the informative and noise columns are genotype-like
    Binomial(2, q) counts; the rest are standard normal. Returns
    ``(dataset, relevant_indices)``.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_instances
    n_inf, n_red, n_noise = spec.n_informative, spec.n_redundant, spec.n_noise

    def draw(count):
        """Raw columns plus the standardized version used by the logit."""
        raw = np.empty((n, count))
        std = np.empty((n, count))
        snp = rng.random(count) < spec.snp_fraction
        for j in range(count):
            if snp[j]:
                q = rng.uniform(0.1, 0.5)
                raw[:, j] = rng.binomial(2, q, size=n)
                std[:, j] = (raw[:, j] - 2 * q) / math.sqrt(2 * q * (1 - q))
            else:
                raw[:, j] = std[:, j] = rng.standard_normal(n)
        return raw, std

    informative, std_inf = draw(n_inf)
    eta = std_inf @ np.asarray(spec.coefficients, dtype=float)
    b = _calibrate_intercept(eta, spec.prevalence)
    y = (rng.random(n) < expit(eta + b)).astype(int)

    redundant = np.empty((n, n_red))
    for j in range(n_red):
        redundant[:, j] = std_inf[:, j % n_inf] + spec.redundant_noise * rng.standard_normal(n)
    noise, _ = draw(n_noise)

    X = np.hstack([informative, redundant, noise])
    names = (
        [f"inf{j + 1}" for j in range(n_inf)]
        + [f"red{j + 1}" for j in range(n_red)]
        + [f"noise{j + 1}" for j in range(n_noise)]
    )
    if y.min() == y.max():
        raise GenerationError("generated labels contain a single class; increase n_instances")
    return Dataset(names, X, y), frozenset(range(n_inf))
