"""Hyperparameter tables with per-kind defaults and range checks.

Shared by :class:`~fsstab.classifiers.ClassifierSpec` and
:class:`~fsstab.rankers.RankerSpec`.
"""
from __future__ import annotations

import json
import math

from .errors import ConfigError


class Param:
    """One hyperparameter: default value plus a validator returning the clean value."""

    def __init__(self, default, check):
        self.default = default
        self.check = check


def positive_int(name):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 1:
            raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        return int(v)
    return check


def non_negative_int(name):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 0:
            raise ConfigError(f"{name} must be a non-negative integer, got {v!r}")
        return int(v)
    return check


def positive_float(name):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
            raise ConfigError(f"{name} must be a positive number, got {v!r}")
        return float(v)
    return check


def float_in(name, lo, hi, lo_open=False, hi_open=False):
    def check(v):
        bad = isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v)
        if not bad:
            bad = v < lo or v > hi or (lo_open and v == lo) or (hi_open and v == hi)
        if bad:
            raise ConfigError(f"{name} must lie in {'(' if lo_open else '['}{lo}, {hi}{')' if hi_open else ']'}, got {v!r}")
        return float(v)
    return check


def one_of(name, *choices):
    def check(v):
        if v not in choices:
            raise ConfigError(f"{name} must be one of {choices}, got {v!r}")
        return v
    return check


def resolve(kind: str, table: dict, given: dict | None) -> dict:
    """Merge ``given`` over the defaults for ``kind``; reject unknown names."""
    given = dict(given or {})
    unknown = set(given) - set(table)
    if unknown:
        raise ConfigError(f"unknown hyperparameters for {kind}: {sorted(unknown)}")
    out = {}
    for name, param in table.items():
        out[name] = param.check(given[name]) if name in given else param.default
    return out


class SpecBase:
    """A ``kind`` plus a fully-resolved hyperparameter dict, JSON round-trippable."""

    KINDS: dict = {}
    label = "spec"

    def __init__(self, kind: str, hyperparameters: dict | None = None):
        if kind not in self.KINDS:
            raise ConfigError(f"unknown {self.label} kind {kind!r}; expected one of {sorted(self.KINDS)}")
        self.kind = kind
        self.hyperparameters = resolve(kind, self.KINDS[kind], hyperparameters)

    def __getitem__(self, name):
        return self.hyperparameters[name]

    def replace(self, **changes):
        hp = dict(self.hyperparameters)
        hp.update(changes)
        return type(self)(self.kind, hp)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": dict(sorted(self.hyperparameters.items()))}

    @classmethod
    def from_dict(cls, doc):
        if isinstance(doc, str):
            return cls(doc)
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigError(f"{cls.label} must be an object with a 'kind' field")
        extra = set(doc) - {"kind", "hyperparameters"}
        if extra:
            raise ConfigError(f"unexpected {cls.label} fields: {sorted(extra)}")
        return cls(doc["kind"], doc.get("hyperparameters"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        return type(other) is type(self) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.to_json())

    def __repr__(self):
        return f"{type(self).__name__}({self.kind!r}, {self.hyperparameters!r})"
