"""Two-dimensional metric MDS of ranker outcomes.

Every run of every ranker is a point; the dissimilarity of two runs is
``1 - spearman``. Points are placed in the plane by SMACOF stress
majorization started from classical MDS.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import RankingEnsemble
from .errors import DataError, ShapeError
from .stability import spearman

_SYMMETRY_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    """Symmetric, non-negative, zero-diagonal matrix with one ``(ranker, run)`` label per point."""

    values: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        D = np.asarray(self.values, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ShapeError("dissimilarities must form a square matrix")
        if not np.all(np.isfinite(D)):
            raise DataError("dissimilarities must be finite")
        if np.abs(D - D.T).max(initial=0.0) > _SYMMETRY_TOL:
            raise DataError("dissimilarity matrix is not symmetric")
        if np.any(np.diag(D) != 0):
            raise DataError("dissimilarity diagonal must be exactly zero")
        if np.any(D < 0):
            raise DataError("dissimilarities must be non-negative")
        labels = tuple((str(r), int(i)) for r, i in self.labels) if self.labels else tuple(
            ("", i) for i in range(D.shape[0])
        )
        if len(labels) != D.shape[0]:
            raise ShapeError(f"{len(labels)} labels for {D.shape[0]} points")
        object.__setattr__(self, "values", _frozen(D))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def rank_dissimilarity(ensembles: Sequence[RankingEnsemble]) -> DissimilarityMatrix:
    """``1 - spearman`` between every pair of runs, stacked over all ensembles."""
    ensembles = list(ensembles)
    if not ensembles:
        raise DataError("no ensembles given")
    p = ensembles[0].n_features
    if any(e.n_features != p for e in ensembles):
        raise ShapeError("ensembles rank different numbers of features")
    R = np.vstack([e.rankings for e in ensembles])
    labels = [(e.ranker_name, i) for e in ensembles for i in range(e.n_runs)]
    n = R.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = max(0.0, 1.0 - spearman(R[i], R[j]))
    return DissimilarityMatrix(D, tuple(labels))


def normalized_stress(X, delta) -> float:
    """``sqrt(sum (d - delta)^2 / sum delta^2)`` over pairs ``i < j``."""
    d = pdist(np.asarray(X, dtype=float))
    dl = squareform(np.asarray(delta, dtype=float), checks=False)
    den = dl @ dl
    if den == 0:
        return 0.0
    r = d - dl
    return float(np.sqrt((r @ r) / den))


def classical_mds(delta, dim=2):
    """Torgerson scaling: top eigenvectors of the double-centered squared dissimilarities."""
    delta = np.asarray(delta, dtype=float)
    n = delta.shape[0]
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (delta ** 2) @ J
    w, V = np.linalg.eigh((B + B.T) / 2)
    top = np.argsort(w)[::-1][:dim]
    w = np.clip(w[top], 0.0, None)
    X = V[:, top] * np.sqrt(w)
    # fix the sign of each axis so the output does not depend on the eigensolver
    for c in range(X.shape[1]):
        j = np.argmax(np.abs(X[:, c]))
        if X[j, c] < 0:
            X[:, c] = -X[:, c]
    return X, w


def _guttman(X, delta):
    n = X.shape[0]
    d = squareform(pdist(X))
    with np.errstate(divide="ignore", invalid="ignore"):
        B = np.where(d > 0, -delta / d, 0.0)
    np.fill_diagonal(B, 0.0)
    np.fill_diagonal(B, -B.sum(axis=1))
    return B @ X / n


@dataclass(frozen=True, eq=False)
class Embedding:
    """Planar coordinates, one row per labeled point, and the SMACOF trace."""

    coordinates: np.ndarray
    stress: float
    iterations: int
    converged: bool
    labels: tuple = ()
    stress_history: tuple = field(default=())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ranker", "run", "x", "y"])
        for (name, run), (x, y) in zip(self.labels, self.coordinates):
            w.writerow([name, run, repr(float(x)), repr(float(y))])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {
            "stress": float(self.stress),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "n_points": int(self.coordinates.shape[0]),
        }

    def to_json(self) -> str:
        return json.dumps(self.sidecar(), sort_keys=True)

    def to_svg(self, size=480, title="MDS of ranker outcomes") -> str:
        return scatter_svg(self, size, title)


def embed(d: DissimilarityMatrix, seed=0, max_iter=500, eps=1e-8) -> Embedding:
    """SMACOF on the normalized stress, initialized by classical MDS.

    Stops once an iteration improves stress by less than ``eps`` or after
    ``max_iter`` iterations. ``seed`` only matters when the classical start
    spans fewer than two dimensions; the missing axis is then filled with
    small seeded noise.
    """
    delta = d.values
    n = d.n
    if n < 3:
        raise ShapeError("embedding needs at least three points")
    if not np.any(delta):
        return Embedding(np.zeros((n, 2)), 0.0, 0, True, d.labels, (0.0,))
    X, w = classical_mds(delta)
    scale = float(np.sqrt((delta ** 2).mean()))
    for c in range(2):
        if w[c] <= 1e-12 * max(w.max(), 1.0):
            X[:, c] = np.random.default_rng(seed).standard_normal(n) * 1e-3 * scale
    s = normalized_stress(X, delta)
    history = [s]
    converged = False
    it = 0
    while it < max_iter:
        Xn = _guttman(X, delta)
        sn = normalized_stress(Xn, delta)
        it += 1
        X = Xn
        history.append(sn)
        if s - sn < eps:
            converged = True
            s = sn
            break
        s = sn
    X = X - X.mean(axis=0)
    return Embedding(X, s, it, converged, d.labels, tuple(history))


def dispersion(e: Embedding) -> dict:
    """Root-mean-square distance of each ranker's points to their centroid."""
    groups = {}
    for (name, _), xy in zip(e.labels, e.coordinates):
        groups.setdefault(name, []).append(xy)
    out = {}
    for name, pts in groups.items():
        if len(pts) < 2:
            warnings.warn(f"ranker {name!r} has a single point; dispersion omitted", RuntimeWarning, stacklevel=2)
            continue
        P = np.asarray(pts)
        c = P - P.mean(axis=0)
        out[name] = float(np.sqrt((c * c).sum(axis=1).mean()))
    return out


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
_SHAPES = ("circle", "square", "triangle", "diamond", "cross", "star")


def _glyph(shape, x, y, r, color):
    if shape == "circle":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>'
    if shape == "square":
        return f'<rect x="{x - r:.2f}" y="{y - r:.2f}" width="{2 * r}" height="{2 * r}" fill="{color}"/>'
    if shape == "cross":
        return (f'<path d="M{x - r:.2f},{y:.2f}H{x + r:.2f}M{x:.2f},{y - r:.2f}V{y + r:.2f}" '
                f'stroke="{color}" stroke-width="2"/>')
    if shape == "triangle":
        pts = [(x, y - r), (x - r, y + r), (x + r, y + r)]
    elif shape == "diamond":
        pts = [(x, y - r), (x + r, y), (x, y + r), (x - r, y)]
    else:
        ang = np.pi / 2 + np.arange(10) * np.pi / 5
        rad = np.where(np.arange(10) % 2 == 0, r * 1.2, r * 0.5)
        pts = list(zip(x + rad * np.cos(ang), y - rad * np.sin(ang)))
    s = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
    return f'<polygon points="{s}" fill="{color}"/>'


def scatter_svg(e: Embedding, size=480, title="") -> str:
    """Scatter plot with one glyph and color per ranker and a legend."""
    names = list(dict.fromkeys(name for name, _ in e.labels))
    margin, legend_w = 40, 150
    X = np.asarray(e.coordinates, dtype=float)
    lo = X.min(axis=0) if X.size else np.zeros(2)
    span = float((X.max(axis=0) - lo).max()) if X.size else 0.0
    span = span if span > 0 else 1.0
    inner = size - 2 * margin

    def px(v):
        return margin + (v[0] - lo[0]) / span * inner, size - margin - (v[1] - lo[1]) / span * inner

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + legend_w}" height="{size}" '
        f'viewBox="0 0 {size + legend_w} {size}">',
        f'<rect width="{size + legend_w}" height="{size}" fill="white"/>',
        f'<text x="{margin}" y="{margin / 2 + 5:.0f}" font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{margin}" y="{margin}" width="{inner}" height="{inner}" fill="none" stroke="#999"/>',
    ]
    style = {n: (_SHAPES[i % len(_SHAPES)], _COLORS[i % len(_COLORS)]) for i, n in enumerate(names)}
    for (name, _), xy in zip(e.labels, X):
        x, y = px(xy)
        out.append(_glyph(style[name][0], x, y, 5, style[name][1]))
    for i, name in enumerate(names):
        y = margin + 10 + 22 * i
        out.append(_glyph(style[name][0], size + 10, y, 5, style[name][1]))
        out.append(f'<text x="{size + 22}" y="{y + 4}" font-family="sans-serif" font-size="12">{name}</text>')
    out.append(f'<text x="{margin}" y="{size - 12}" font-family="sans-serif" font-size="11">'
               f'stress {e.stress:.4g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
