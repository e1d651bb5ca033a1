"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .classifiers import ClassifierSpec, cross_validate, evaluate_subset
from .core import RankingEnsemble, TopKMask, to_top_k
from .errors import ConfigError, DataError, FsstabError, exit_code_for
from .ingest import CsvSchema, SyntheticSpec, generate_synthetic, load_csv, write_csv
from .mds import dispersion, embed, rank_dissimilarity
from .pipeline import (
    CurveResult,
    PipelineConfig,
    compare_feature_sets,
    comparison_csv,
    emit_report,
    resolve_threads,
    run_pipeline,
)
from .rankers import RankerSpec, rank, run_ensemble
from .seeding import derive_seed
from .stability import ensemble_stability, jaccard_profile


def _read_json(path, what="config"):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"{what} file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from exc


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        path = Path(out)
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _out_dir(out, default="."):
    d = Path(out or default)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(args):
    tokens = set(args.missing.split(",")) if args.missing is not None else {"", "NA"}
    schema = CsvSchema(label_column=args.label_column, missing_tokens=frozenset(tokens),
                       positive_label=args.positive_label)
    res = load_csv(args.data, schema)
    if res.dropped:
        print(f"dropped {res.dropped} incomplete rows", file=sys.stderr)
    return res.dataset


def _seed(args, fallback=0):
    return fallback if args.seed is None else args.seed


def _spec_from(args, cls, positional):
    """Spec from ``--config`` (a spec JSON) or from the kind name plus ``--params``."""
    if args.config:
        return cls.from_dict(_read_json(args.config))
    params = json.loads(args.params) if args.params else None
    return cls(positional, params)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from exc


def cmd_synth(args):
    doc = _read_json(args.config, "synthetic spec") if args.config else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    spec = SyntheticSpec.from_json(json.dumps(doc))
    d, planted = generate_synthetic(spec)
    out = args.out or "synthetic.csv"
    write_csv(d, out)
    info = {
        "path": str(out),
        "planted": [d.feature_names[i] for i in sorted(planted)],
        "spec": json.loads(spec.to_json()),
    }
    print(json.dumps(info, sort_keys=True))
    return 0


def cmd_rank(args):
    d = _load(args)
    spec = _spec_from(args, RankerSpec, args.ranker)
    seed = _seed(args)
    if args.runs == 1:
        r = rank(spec, d, derive_seed(seed, "rank", spec.name))
        doc = {"ranker": spec.name, "spec": spec.to_dict(), "feature_names": list(d.feature_names),
               "ranking": [float(v) for v in r]}
    else:
        e = run_ensemble(spec, d, args.runs, args.fraction, seed, resolve_threads(args.threads))
        doc = e.to_dict()
        doc["feature_names"] = list(d.feature_names)
        doc["spec"] = spec.to_dict()
    _emit(json.dumps(doc, sort_keys=True) + "\n", args.out)
    return 0


def _ensemble(path):
    doc = _read_json(path, "ensemble")
    if "rankings" not in doc:
        raise DataError(f"{path} does not hold a ranking ensemble (run 'rank' with --runs >= 2)")
    return RankingEnsemble.from_dict(doc)


def cmd_stability(args):
    e = _ensemble(args.ensemble)
    if args.profile:
        prof = jaccard_profile(e, _int_list(args.profile))
        _emit(prof.to_csv(), args.out)
        print(f"mean Jaccard over k=1..{e.n_features}: {prof.mean_all_k!r}", file=sys.stderr)
        return 0
    score = ensemble_stability(e, args.metric, args.k)
    _emit(score.to_json() + "\n", args.out)
    return 0


def cmd_mds(args):
    ens = [_ensemble(p) for p in args.ensembles]
    emb = embed(rank_dissimilarity(ens), _seed(args))
    out = _out_dir(args.out)
    (out / "mds_coords.csv").write_text(emb.to_csv(), encoding="utf-8")
    (out / "mds_plot.svg").write_text(emb.to_svg(), encoding="utf-8")
    side = emb.sidecar()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        side["dispersion"] = dispersion(emb)
    (out / "mds.json").write_text(json.dumps(side, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    print(json.dumps(side, sort_keys=True))
    return 0


def _ranking_file(path):
    doc = _read_json(path, "ranking")
    if "ranking" in doc:
        return np.asarray(doc["ranking"], dtype=float), doc.get("ranker", "ranking")
    if "rankings" in doc:
        e = RankingEnsemble.from_dict(doc)
        return np.median(e.rankings, axis=0), e.ranker_name
    raise DataError(f"{path} holds neither a ranking nor an ensemble")


def cmd_curve(args):
    d = _load(args)
    r, name = _ranking_file(args.ranking)
    if r.size != d.n_features:
        raise DataError(f"ranking has {r.size} features, dataset has {d.n_features}")
    spec = _spec_from(args, ClassifierSpec, args.classifier)
    grid = _int_list(args.k_grid) if args.k_grid else list(range(1, d.n_features + 1))
    if not grid:
        raise ConfigError("k grid is empty")
    seed = derive_seed(_seed(args), "cv")
    base = cross_validate(spec, d, args.folds, seed).auc
    pts = tuple((k, evaluate_subset(spec, d, to_top_k(r, k), args.folds, seed).auc) for k in grid)
    c = CurveResult(name, spec.kind, pts, base)
    out = _out_dir(args.out)
    stem = f"{name}_{spec.kind}"
    (out / f"{stem}.csv").write_text(c.to_csv(), encoding="utf-8")
    (out / f"{stem}.svg").write_text(c.to_svg(), encoding="utf-8")
    print(json.dumps(c.to_dict(), sort_keys=True))
    return 0


def cmd_pipeline(args):
    if not args.config:
        raise ConfigError("pipeline needs --config with a pipeline configuration JSON")
    doc = _read_json(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = PipelineConfig.from_dict(doc)
    d = _load(args)
    cfg.resolve_grids(d.n_features)
    out = _out_dir(args.out, "report")
    report = run_pipeline(cfg, d, args.threads, out)
    manifest = emit_report(report, out)
    print(f"wrote {len(manifest['files'])} files to {out}", file=sys.stderr)
    return 0


def cmd_compare(args):
    d = _load(args)
    doc = _read_json(args.sets, "feature sets")
    raw = doc.get("sets", doc)
    if not isinstance(raw, dict) or not raw:
        raise ConfigError("feature sets file must map set names to lists of feature names")
    sets = {name: TopKMask.from_names(names, d.feature_names) for name, names in raw.items()}
    inter = [tuple(pair) for pair in doc.get("intersect", [])] if "sets" in doc else []
    if args.config:
        specs = [ClassifierSpec.from_dict(c) for c in _read_json(args.config)]
    else:
        specs = [ClassifierSpec(k) for k in args.classifiers.split(",")]
    rows = compare_feature_sets(d, sets, specs, args.folds, _seed(args), inter, args.threads)
    _emit(comparison_csv(rows), args.out)
    return 0


def _globals(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(None), help="master seed")
    parser.add_argument("--out", default=default(None), help="output file or directory")
    parser.add_argument("--config", default=default(None), help="JSON configuring the subcommand")
    parser.add_argument("--threads", type=int, default=default(1), help="worker threads (0 = all cores)")


def _data_args(p):
    p.add_argument("--data", required=True, help="CSV with one column per feature and a label column")
    p.add_argument("--label-column", default="label")
    p.add_argument("--positive-label", default="1")
    p.add_argument("--missing", default=None, help="comma-separated missing-value tokens (default: empty,NA)")


def build_parser():
    parser = argparse.ArgumentParser(prog="fsstab", description="Feature-ranking stability and performance study")
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _globals(p, suppress=True)
        return p

    p = add("synth", "write a synthetic dataset described by --config")
    p.set_defaults(fn=cmd_synth)

    p = add("rank", "rank features with one ranker")
    _data_args(p)
    p.add_argument("ranker", nargs="?", default="Pearson", help="ranker kind (ignored with --config)")
    p.add_argument("--params", help="hyperparameters as a JSON object")
    p.add_argument("--runs", type=int, default=1, help="1 for a single ranking, >=2 for a subsample ensemble")
    p.add_argument("--fraction", type=float, default=0.7)
    p.set_defaults(fn=cmd_rank)

    p = add("stability", "stability of a ranking ensemble")
    p.add_argument("ensemble", help="ensemble JSON written by 'rank --runs K'")
    p.add_argument("--metric", default="Spearman", help="Spearman, Jaccard or Kuncheva")
    p.add_argument("--k", type=int, help="subset size for set metrics")
    p.add_argument("--profile", help="comma-separated k values; writes the Jaccard profile CSV")
    p.set_defaults(fn=cmd_stability)

    p = add("mds", "2-D map of the runs of several ensembles")
    p.add_argument("ensembles", nargs="+")
    p.set_defaults(fn=cmd_mds)

    p = add("curve", "AUC against subset size for one ranking and classifier")
    _data_args(p)
    p.add_argument("--ranking", required=True, help="ranking or ensemble JSON (ensembles use the median)")
    p.add_argument("classifier", nargs="?", default="LR", help="classifier kind (ignored with --config)")
    p.add_argument("--params", help="hyperparameters as a JSON object")
    p.add_argument("--k-grid", help="comma-separated subset sizes (default 1..p)")
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(fn=cmd_curve)

    p = add("pipeline", "full study from a pipeline configuration")
    _data_args(p)
    p.set_defaults(fn=cmd_pipeline)

    p = add("compare", "AUC of named feature sets for several classifiers")
    _data_args(p)
    p.add_argument("--sets", required=True,
                   help='JSON {"sets": {name: [features]}, "intersect": [[a, b]]} or a plain name -> list map')
    p.add_argument("--classifiers", default="LR,KNN,SVM,BT,NN")
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(fn=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 0:
            raise ConfigError("--threads must be >= 0")
        return args.fn(args)
    except FsstabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
