"""End-to-end study: ranker ensembles, AUC-vs-k curves, stability tables and the MDS map."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .classifiers import ClassifierSpec, EvalResult, cross_validate, evaluate_subset
from .core import Dataset, RankingEnsemble, TopKMask, aggregate_median, to_top_k
from .errors import BoundsError, ConfigError, DataError, PipelineStageError
from .mds import Embedding, dispersion, embed, rank_dissimilarity
from .plots import line_chart
from .rankers import RankerSpec, run_ensemble
from .seeding import derive_seed
from .stability import JaccardProfile, StabilityScore, ensemble_stability, jaccard_profile

JACCARD_GRID = (10, 20, 30, 35, 40, 50, 60, 70, 80, 90)
CAPS = (40, 55, 70)


def _labels(specs, attr="kind"):
    """Display names; repeated kinds get ``_2``, ``_3``... suffixes in order."""
    seen = {}
    out = []
    for s in specs:
        base = getattr(s, attr)
        seen[base] = seen.get(base, 0) + 1
        out.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    return out


def _int_grid(name, values):
    if values is None:
        return None
    if isinstance(values, (str, bytes)) or not hasattr(values, "__iter__"):
        raise ConfigError(f"{name} must be a list of integers")
    out = []
    for v in values:
        if isinstance(v, bool) or not float(v).is_integer():
            raise ConfigError(f"{name} entries must be integers, got {v!r}")
        out.append(int(v))
    return tuple(out)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that determines a study's results. ``None`` grids are filled in from p."""

    rankers: tuple
    classifiers: tuple
    runs: int = 7
    fraction: float = 0.7
    folds: int = 5
    k_grid: Optional[tuple] = None
    jaccard_grid: Optional[tuple] = None
    caps: tuple = CAPS
    seed: int = 0

    def __post_init__(self):
        rankers = tuple(r if isinstance(r, RankerSpec) else RankerSpec.from_dict(r) for r in self.rankers)
        classifiers = tuple(c if isinstance(c, ClassifierSpec) else ClassifierSpec.from_dict(c)
                            for c in self.classifiers)
        if not rankers:
            raise ConfigError("at least one ranker is required")
        if not classifiers:
            raise ConfigError("at least one classifier is required")
        if len(set(rankers)) != len(rankers) or len(set(classifiers)) != len(classifiers):
            raise ConfigError("duplicate ranker or classifier entry")
        if isinstance(self.runs, bool) or int(self.runs) != self.runs or self.runs < 2:
            raise ConfigError(f"runs must be an integer >= 2, got {self.runs}")
        if not 0 < float(self.fraction) <= 1:
            raise ConfigError(f"fraction must lie in (0, 1], got {self.fraction}")
        if isinstance(self.folds, bool) or int(self.folds) != self.folds or self.folds < 2:
            raise ConfigError(f"folds must be an integer >= 2, got {self.folds}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")
        k_grid = _int_grid("k_grid", self.k_grid)
        jgrid = _int_grid("jaccard_grid", self.jaccard_grid)
        caps = _int_grid("caps", self.caps)
        if k_grid is not None and not k_grid:
            raise ConfigError("k_grid is empty")
        if jgrid is not None and not jgrid:
            raise ConfigError("jaccard_grid is empty")
        if not caps or min(caps) < 1:
            raise ConfigError("caps must be a non-empty list of positive integers")
        object.__setattr__(self, "rankers", rankers)
        object.__setattr__(self, "classifiers", classifiers)
        object.__setattr__(self, "runs", int(self.runs))
        object.__setattr__(self, "fraction", float(self.fraction))
        object.__setattr__(self, "folds", int(self.folds))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "k_grid", k_grid)
        object.__setattr__(self, "jaccard_grid", jgrid)
        object.__setattr__(self, "caps", caps)

    @property
    def ranker_names(self):
        return _labels(self.rankers, "name")

    @property
    def classifier_names(self):
        return _labels(self.classifiers)

    def resolve_grids(self, p: int):
        """Concrete (sorted, de-duplicated) curve and Jaccard grids for ``p`` features."""
        if self.k_grid is None:
            k_grid = list(range(1, p + 1))
        else:
            k_grid = sorted(set(self.k_grid))
        if self.jaccard_grid is None:
            jgrid = sorted({k for k in JACCARD_GRID if k <= p} | {p})
        else:
            jgrid = sorted(set(self.jaccard_grid))
        for name, grid in (("k_grid", k_grid), ("jaccard_grid", jgrid)):
            bad = [k for k in grid if not 1 <= k <= p]
            if bad:
                raise BoundsError(f"{name} values outside [1, {p}]: {bad}")
        return k_grid, jgrid

    def to_dict(self) -> dict:
        return {
            "rankers": [r.to_dict() for r in self.rankers],
            "classifiers": [c.to_dict() for c in self.classifiers],
            "runs": self.runs,
            "fraction": self.fraction,
            "folds": self.folds,
            "k_grid": None if self.k_grid is None else list(self.k_grid),
            "jaccard_grid": None if self.jaccard_grid is None else list(self.jaccard_grid),
            "caps": list(self.caps),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PipelineConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("pipeline config must be a JSON object")
        known = {"rankers", "classifiers", "runs", "fraction", "folds", "k_grid", "jaccard_grid", "caps", "seed"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown pipeline config fields: {sorted(extra)}")
        for req in ("rankers", "classifiers"):
            if req not in doc:
                raise ConfigError(f"pipeline config needs '{req}'")
        kw = {k: doc[k] for k in known if k in doc}
        if "caps" in kw:
            kw["caps"] = tuple(kw["caps"])
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid config JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class CurveResult:
    """AUC at each subset size for one (ranker, classifier) pair, plus the full-set baseline."""

    ranker_name: str
    classifier: str
    points: tuple  # ((k, auc), ...)
    baseline_auc: float

    def to_dict(self) -> dict:
        return {
            "ranker": self.ranker_name,
            "classifier": self.classifier,
            "points": [[int(k), float(a)] for k, a in self.points],
            "baseline_auc": float(self.baseline_auc),
        }

    @classmethod
    def from_dict(cls, doc) -> "CurveResult":
        return cls(doc["ranker"], doc["classifier"], tuple((int(k), float(a)) for k, a in doc["points"]),
                   float(doc["baseline_auc"]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "auc"])
        for k, a in self.points:
            w.writerow([k, repr(float(a))])
        return buf.getvalue()

    def to_svg(self) -> str:
        ks = [k for k, _ in self.points]
        aucs = [a for _, a in self.points]
        return line_chart(ks, aucs, self.baseline_auc, title=f"{self.ranker_name} / {self.classifier}")


@dataclass(frozen=True)
class BestSubsetTable:
    """For each classifier and cap, the three best ``(k, ranker, auc)`` cells with ``k <= cap``."""

    entries: Mapping  # classifier -> {cap: ((k, ranker, auc), ...)}

    def to_dict(self) -> dict:
        return {
            clf: {str(cap): [[int(k), r, float(a)] for k, r, a in rows] for cap, rows in by_cap.items()}
            for clf, by_cap in self.entries.items()
        }

    @classmethod
    def from_dict(cls, doc) -> "BestSubsetTable":
        return cls({
            clf: {int(cap): tuple((int(k), r, float(a)) for k, r, a in rows) for cap, rows in by_cap.items()}
            for clf, by_cap in doc.items()
        })

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["classifier", "cap", "place", "k", "ranker", "auc"])
        for clf, by_cap in self.entries.items():
            for cap, rows in by_cap.items():
                for place, (k, r, a) in enumerate(rows, 1):
                    w.writerow([clf, cap, place, k, r, repr(float(a))])
        return buf.getvalue()


def best_subsets(curves: Sequence[CurveResult], classifiers: Sequence[str], caps, top=3) -> BestSubsetTable:
    """Highest-AUC cells per classifier among ``k <= cap``; ties go to smaller k, then ranker order."""
    entries = {}
    for clf in classifiers:
        cells = [(k, c.ranker_name, a, ri) for ri, c in enumerate(x for x in curves if x.classifier == clf)
                 for k, a in c.points]
        by_cap = {}
        for cap in caps:
            ok = sorted((cell for cell in cells if cell[0] <= cap), key=lambda t: (-t[2], t[0], t[3]))
            by_cap[int(cap)] = tuple((k, r, a) for k, r, a, _ in ok[:top])
        entries[clf] = by_cap
    return BestSubsetTable(entries)


def _eval_dict(r: EvalResult) -> dict:
    return r.to_dict()


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """All results of one study; ``to_json`` is canonical and round-trips byte for byte."""

    config: PipelineConfig
    dataset: Mapping
    k_grid: tuple
    jaccard_grid: tuple
    ensembles: tuple
    aggregated: Mapping
    baselines: Mapping
    curves: tuple
    best: BestSubsetTable
    spearman: Mapping
    jaccard: Mapping
    embedding: Optional[Embedding]
    dispersion: Mapping
    n_evaluations: int

    def to_dict(self) -> dict:
        emb = None
        if self.embedding is not None:
            e = self.embedding
            emb = {
                "labels": [[n, int(i)] for n, i in e.labels],
                "coordinates": [[float(x), float(y)] for x, y in e.coordinates],
                "stress": float(e.stress),
                "iterations": int(e.iterations),
                "converged": bool(e.converged),
                "stress_history": [float(s) for s in e.stress_history],
            }
        return {
            "config": self.config.to_dict(),
            "dataset": dict(self.dataset),
            "k_grid": list(self.k_grid),
            "jaccard_grid": list(self.jaccard_grid),
            "ensembles": [e.to_dict() for e in self.ensembles],
            "aggregated": {n: [float(v) for v in r] for n, r in self.aggregated.items()},
            "baselines": {n: dict(b) for n, b in self.baselines.items()},
            "curves": [c.to_dict() for c in self.curves],
            "best_subsets": self.best.to_dict(),
            "stability": {
                "spearman": {n: s.to_dict() for n, s in self.spearman.items()},
                "jaccard": {n: j.to_dict() for n, j in self.jaccard.items()},
            },
            "mds": {"embedding": emb, "dispersion": {n: float(v) for n, v in self.dispersion.items()}},
            "n_evaluations": int(self.n_evaluations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc) -> "StabilityReport":
        emb = doc["mds"]["embedding"]
        embedding = None
        if emb is not None:
            embedding = Embedding(np.asarray(emb["coordinates"], dtype=float).reshape(-1, 2), float(emb["stress"]),
                                  int(emb["iterations"]), bool(emb["converged"]),
                                  tuple((n, int(i)) for n, i in emb["labels"]), tuple(emb["stress_history"]))
        return cls(
            config=PipelineConfig.from_dict(doc["config"]),
            dataset=dict(doc["dataset"]),
            k_grid=tuple(doc["k_grid"]),
            jaccard_grid=tuple(doc["jaccard_grid"]),
            ensembles=tuple(RankingEnsemble.from_dict(e) for e in doc["ensembles"]),
            aggregated={n: np.asarray(r, dtype=float) for n, r in doc["aggregated"].items()},
            baselines={n: dict(b) for n, b in doc["baselines"].items()},
            curves=tuple(CurveResult.from_dict(c) for c in doc["curves"]),
            best=BestSubsetTable.from_dict(doc["best_subsets"]),
            spearman={n: StabilityScore.from_dict(s) for n, s in doc["stability"]["spearman"].items()},
            jaccard={n: JaccardProfile(j["ranker"], tuple((int(k), float(v)) for k, v in j["points"]),
                                       float(j["mean_all_k"])) for n, j in doc["stability"]["jaccard"].items()},
            embedding=embedding,
            dispersion=dict(doc["mds"]["dispersion"]),
            n_evaluations=int(doc["n_evaluations"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "StabilityReport":
        return cls.from_dict(json.loads(text))

    def curve(self, ranker: str, classifier: str) -> CurveResult:
        for c in self.curves:
            if c.ranker_name == ranker and c.classifier == classifier:
                return c
        raise KeyError((ranker, classifier))


def resolve_threads(threads) -> int:
    threads = int(threads or 0)
    if threads < 0:
        raise ConfigError(f"threads must be >= 0, got {threads}")
    return threads or (os.cpu_count() or 1)


def _pmap(fn, items, threads):
    """Ordered map; the thread count never changes the result."""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _dataset_summary(d: Dataset) -> dict:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(d.features).tobytes())
    h.update(np.ascontiguousarray(d.labels).tobytes())
    h.update("\x00".join(d.feature_names).encode("utf-8"))
    return {
        "n_instances": d.n_instances,
        "n_features": d.n_features,
        "n_positive": int(d.labels.sum()),
        "feature_names": list(d.feature_names),
        "sha256": h.hexdigest(),
    }


class _Stages:
    """Runs named stages, remembering completed output for a partial flush on failure."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.done = {}

    def run(self, name, fn):
        try:
            value = fn()
        except Exception as exc:
            self.flush(name, exc)
            raise PipelineStageError(name, exc) from exc
        return value

    def record(self, name, doc):
        self.done[name] = doc

    def flush(self, failed, exc):
        if self.out_dir is None:
            return
        out = Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        doc = {"failed_stage": failed, "error": f"{type(exc).__name__}: {exc}", "completed": self.done}
        (out / "partial.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def run_pipeline(cfg: PipelineConfig, d: Dataset, threads=1, out_dir=None) -> StabilityReport:
    """Run the whole study on ``d``.

    Every random choice is derived from ``cfg.seed``. All classifier
    evaluations share one fold assignment, so curve points and baselines are
    paired comparisons and ``k = p`` reproduces the baseline exactly. If a
    stage fails and ``out_dir`` is given, finished stages are written to
    ``partial.json`` there before the error propagates.
    """
    threads = resolve_threads(threads)
    p = d.n_features
    k_grid, jgrid = cfg.resolve_grids(p)
    rnames = cfg.ranker_names
    cnames = cfg.classifier_names
    cv_seed = derive_seed(cfg.seed, "cv")
    stages = _Stages(out_dir)

    def ensembles():
        out = []
        for spec, name in zip(cfg.rankers, rnames):
            e = run_ensemble(spec, d, cfg.runs, cfg.fraction, cfg.seed, threads)
            out.append(RankingEnsemble(name, e.rankings, e.seeds))
        return tuple(out)

    ens = stages.run("ensembles", ensembles)
    stages.record("ensembles", [e.to_dict() for e in ens])
    agg = stages.run("aggregate", lambda: {e.ranker_name: aggregate_median(e) for e in ens})
    stages.record("aggregated", {n: r.tolist() for n, r in agg.items()})

    def baselines():
        res = _pmap(lambda c: cross_validate(c, d, cfg.folds, cv_seed), list(cfg.classifiers), threads)
        return {n: _eval_dict(r) for n, r in zip(cnames, res)}

    base = stages.run("baselines", baselines)
    stages.record("baselines", base)

    def curves():
        cells = [(ri, ci, k) for ri in range(len(rnames)) for ci in range(len(cnames)) for k in k_grid]
        masks = {(ri, k): to_top_k(agg[rnames[ri]], k) for ri in range(len(rnames)) for k in k_grid}

        def cell(c):
            ri, ci, k = c
            return evaluate_subset(cfg.classifiers[ci], d, masks[(ri, k)], cfg.folds, cv_seed).auc

        aucs = _pmap(cell, cells, threads)
        table = dict(zip(cells, aucs))
        return tuple(
            CurveResult(rnames[ri], cnames[ci], tuple((k, table[(ri, ci, k)]) for k in k_grid),
                        base[cnames[ci]]["auc"])
            for ri in range(len(rnames)) for ci in range(len(cnames))
        ), len(cells)

    curve_list, n_cells = stages.run("curves", curves)
    stages.record("curves", [c.to_dict() for c in curve_list])
    best = best_subsets(curve_list, cnames, cfg.caps)

    def stability():
        sp = {e.ranker_name: ensemble_stability(e, "Spearman") for e in ens}
        jp = {e.ranker_name: jaccard_profile(e, jgrid) for e in ens}
        return sp, jp

    sp, jp = stages.run("stability", stability)
    stages.record("stability", {"spearman": {n: s.value for n, s in sp.items()}})

    def mds():
        # a planar map needs three points; smaller studies report none
        if sum(e.n_runs for e in ens) < 3:
            return None, {}
        emb = embed(rank_dissimilarity(ens), derive_seed(cfg.seed, "mds"))
        return emb, dispersion(emb)

    emb, disp = stages.run("mds", mds)
    return StabilityReport(cfg, _dataset_summary(d), tuple(k_grid), tuple(jgrid), ens, agg, base, curve_list,
                           best, sp, jp, emb, disp, n_cells + len(cnames))


@dataclass(frozen=True)
class ComparisonRow:
    set_name: str
    classifier: str
    k: int
    auc: float
    accuracy: float


def compare_feature_sets(d: Dataset, sets: Mapping[str, TopKMask], classifiers: Sequence[ClassifierSpec],
                         folds=5, seed=0, intersections: Sequence = (), threads=1) -> list:
    """AUC of every classifier on every named feature set, plus a ``full`` baseline row.

    ``intersections`` lists pairs of set names whose intersection is added as
    an extra set named ``"A&B"``.
    """
    sets = dict(sets)
    for a, b in intersections:
        if a not in sets or b not in sets:
            raise ConfigError(f"cannot intersect unknown sets {a!r} and {b!r}")
        sets[f"{a}&{b}"] = sets[a] & sets[b]
    for name, m in sets.items():
        if m.p != d.n_features:
            raise DataError(f"set {name!r} is over {m.p} features, dataset has {d.n_features}")
        if m.k == 0:
            raise DataError(f"feature set {name!r} is empty")
    if "full" in sets:
        raise ConfigError("'full' is reserved for the baseline row")
    classifiers = list(classifiers)
    cnames = _labels(classifiers)
    cv_seed = derive_seed(seed, "cv")
    named = [("full", TopKMask(np.ones(d.n_features, dtype=bool)))] + list(sets.items())
    cells = [(sn, m, ci) for sn, m in named for ci in range(len(classifiers))]
    threads = resolve_threads(threads)
    res = _pmap(lambda c: evaluate_subset(classifiers[c[2]], d, c[1], folds, cv_seed), cells, threads)
    return [ComparisonRow(sn, cnames[ci], m.k, r.auc, r.accuracy) for (sn, m, ci), r in zip(cells, res)]


def comparison_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["set", "classifier", "k", "auc", "accuracy"])
    for r in rows:
        w.writerow([r.set_name, r.classifier, r.k, repr(float(r.auc)), repr(float(r.accuracy))])
    return buf.getvalue()


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def _report_files(report: StabilityReport) -> dict:
    files = {"report.json": report.to_json()}
    for c in report.curves:
        stem = f"curves/{_safe(c.ranker_name)}_{_safe(c.classifier)}"
        files[stem + ".csv"] = c.to_csv()
        files[stem + ".svg"] = c.to_svg()

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ranker", "spearman"])
    for n, s in report.spearman.items():
        w.writerow([n, repr(float(s.value))])
    files["stability_spearman.csv"] = buf.getvalue()

    names = list(report.jaccard)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k"] + names)
    for i, k in enumerate(report.jaccard_grid):
        w.writerow([k] + [repr(float(report.jaccard[n].points[i][1])) for n in names])
    w.writerow(["mean_all_k"] + [repr(float(report.jaccard[n].mean_all_k)) for n in names])
    files["jaccard_profile.csv"] = buf.getvalue()

    files["best_subsets.csv"] = report.best.to_csv()
    if report.embedding is not None:
        files["mds_coords.csv"] = report.embedding.to_csv()
        files["mds_plot.svg"] = report.embedding.to_svg()
        side = report.embedding.sidecar()
        side["dispersion"] = {n: float(v) for n, v in report.dispersion.items()}
        files["mds.json"] = json.dumps(side, sort_keys=True, indent=1) + "\n"
    return files


def emit_report(report: StabilityReport, out_dir) -> dict:
    """Write every artifact of ``report`` under ``out_dir`` and a ``manifest.json`` of sha256 hashes.

    Files listed by an earlier manifest in the same directory are removed
    first, so the new manifest describes exactly what this report wrote.
    Returns the manifest.
    """
    out = Path(out_dir)
    files = _report_files(report)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    old = out / "manifest.json"
    if old.exists():
        try:
            for entry in json.loads(old.read_text(encoding="utf-8")).get("files", []):
                stale = out / entry["path"]
                if entry["path"] not in files and stale.is_file():
                    stale.unlink()
        except (ValueError, KeyError, TypeError, OSError):
            pass
    partial = out / "partial.json"
    if partial.exists():
        partial.unlink()
    entries = []
    for rel in sorted(files):
        data = files[rel].encode("utf-8")
        path = out / rel
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc}") from exc
        entries.append({"path": rel, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
    manifest = {"files": entries}
    try:
        old.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {old}: {exc}") from exc
    return manifest


__all__ = [
    "PipelineConfig",
    "CurveResult",
    "BestSubsetTable",
    "StabilityReport",
    "ComparisonRow",
    "best_subsets",
    "run_pipeline",
    "compare_feature_sets",
    "comparison_csv",
    "emit_report",
]
