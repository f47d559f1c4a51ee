"""Command-line front end.

Every command reads and writes files under one run directory (``--out``,
default ``$MQGRAPH_OUT`` or ``./runs``)::

    dataset/manifest.csv, dataset/series/<id>.csv      generate
    networks/<mapper>/<id>.tsv, networks/<mapper>/timing.csv   map
    features/<mapper>.csv                               features
    cluster/<mapper>_<subset>.json, cluster/<mapper>_summary.csv,
    cluster/<mapper>_<subset>_pcs.csv                   cluster
    bench/timing.csv, bench/summary.csv                 bench
    config/<command>.json                               effective config echo
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .analysis import FeatureMatrix, cluster_features, minmax_normalize, pca, regenerated_experiment
from .core import MappingError, load_csv, save_csv
from .features import FEATURE_SUBSETS, feature_vector
from .generators import MODEL_KINDS, LabeledSeries, generate_instance
from .mnet import read_edge_list, write_edge_list
from .pipeline import benchmark, map_series, time_mapping

log = logging.getLogger("mqgraph")

DEFAULTS = {
    "models": list(MODEL_KINDS),
    "n": 100,
    "T": 10000,
    "seed": 0,
    "burn_in": None,
    "eta": 50,
    "mapper": "mqg",
    "subset": ["full"],
    "k": 6,
    "reps": 10,
    "jobs": 1,
    "regenerate": False,
}


class MissingInputError(MappingError):
    pass


def _out_root(args) -> Path:
    return Path(args.out or os.environ.get("MQGRAPH_OUT", "runs"))


def _parse_eta(value):
    if value == "auto":
        return "auto"
    try:
        eta = int(value)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"--eta must be an integer or 'auto', got {value!r}") from None
    if eta < 1:
        raise argparse.ArgumentTypeError("--eta must be positive")
    return eta


def _effective_config(args, keys) -> dict:
    cfg = {k: getattr(args, k) for k in keys}
    cfg["out"] = str(_out_root(args))
    return cfg


def _echo_config(root: Path, command: str, cfg: dict) -> None:
    path = root / "config" / f"{command}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingInputError(f"missing input {path} ({hint})")
    return path


def _par(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- generate ---------------------------------------------------------------

MANIFEST_COLUMNS = ("instance_id", "label", "seed", "T", "file")


def _write_instance(task):
    kind, j, T, seed, burn_in, series_dir = task
    ls = generate_instance(kind, j, T, seed, burn_in)
    fname = f"{ls.instance_id}.csv"
    save_csv(ls.series, series_dir / fname, header=["y1", "y2"])
    return ls.instance_id, ls.label, ls.seed, T, f"series/{fname}"


def cmd_generate(args) -> Path:
    root = _out_root(args)
    ds_dir = root / "dataset"
    series_dir = ds_dir / "series"
    series_dir.mkdir(parents=True, exist_ok=True)
    for kind in args.models:
        if kind not in MODEL_KINDS:
            raise MappingError(f"unknown model {kind!r}; expected one of {MODEL_KINDS}")
    tasks = [(kind, j, args.T, args.seed, args.burn_in, series_dir) for kind in args.models for j in range(args.n)]
    rows = _par(_write_instance, tasks, args.jobs)
    with (ds_dir / "manifest.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        writer.writerows(rows)
    _echo_config(root, "generate", _effective_config(args, ("models", "n", "T", "seed", "burn_in")))
    log.info("wrote %d series to %s", len(rows), ds_dir)
    return ds_dir


def read_manifest(ds_dir: Path) -> list[dict]:
    path = _require(ds_dir / "manifest.csv", "run `mqgraph generate` first")
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_dataset(ds_dir: Path) -> list[LabeledSeries]:
    out = []
    for row in read_manifest(ds_dir):
        series = load_csv(_require(ds_dir / row["file"], "listed in the dataset manifest"))
        out.append(LabeledSeries(row["instance_id"], row["label"], int(row["seed"]), series))
    return out


# -- map ----------------------------------------------------------------------


def _map_one(task):
    row, ds_dir, net_dir, mapper, eta = task
    series = load_csv(ds_dir / row["file"])
    seconds = time_mapping(series, mapper, eta)
    net = map_series(series, mapper, eta)
    write_edge_list(net, net_dir / f"{row['instance_id']}.tsv")
    return row["instance_id"], row["label"], mapper, seconds


def cmd_map(args) -> Path:
    root = _out_root(args)
    ds_dir = root / "dataset"
    manifest = read_manifest(ds_dir)
    net_dir = root / "networks" / args.mapper
    net_dir.mkdir(parents=True, exist_ok=True)
    from .mappers import warm_up

    warm_up()
    timings = _par(_map_one, [(row, ds_dir, net_dir, args.mapper, args.eta) for row in manifest], args.jobs)
    with (net_dir / "manifest.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("instance_id", "label", "file"))
        for row in manifest:
            writer.writerow((row["instance_id"], row["label"], f"{row['instance_id']}.tsv"))
    _write_timing(net_dir / "timing.csv", timings)
    _echo_config(root, f"map_{args.mapper}", _effective_config(args, ("mapper", "eta")))
    return net_dir


def _write_timing(path: Path, records) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("instance_id", "label", "algorithm", "seconds"))
        for iid, label, mapper, sec in records:
            writer.writerow((iid, label, mapper, f"{sec:.9f}"))


# -- features -----------------------------------------------------------------


def _features_one(task):
    iid, label, path = task
    return iid, label, feature_vector(read_edge_list(path))


def cmd_features(args) -> Path:
    root = _out_root(args)
    net_dir = root / "networks" / args.mapper
    if not (net_dir / "manifest.csv").exists() and getattr(args, "chain", False):
        cmd_map(args)
    path = _require(net_dir / "manifest.csv", f"run `mqgraph map --mapper {args.mapper}` first")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    tasks = [(r["instance_id"], r["label"], _require(net_dir / r["file"], "listed in the network manifest")) for r in rows]
    records = _par(_features_one, tasks, args.jobs)
    fm = FeatureMatrix.from_records(records)
    out = root / "features" / f"{args.mapper}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    fm.to_csv(out)
    _echo_config(root, f"features_{args.mapper}", _effective_config(args, ("mapper",)))
    return out


# -- cluster ------------------------------------------------------------------

SUMMARY_COLUMNS = ("subset", "ARI", "NMI", "AS")


def cmd_cluster(args) -> Path:
    root = _out_root(args)
    feat_path = root / "features" / f"{args.mapper}.csv"
    if not feat_path.exists() and getattr(args, "chain", False):
        cmd_features(args)
    fm = FeatureMatrix.from_csv(_require(feat_path, f"run `mqgraph features --mapper {args.mapper}` first"))
    out_dir = root / "cluster"
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    for subset in args.subset:
        if subset not in FEATURE_SUBSETS:
            raise MappingError(f"unknown subset {subset!r}; expected one of {sorted(FEATURE_SUBSETS)}")
        report = cluster_features(fm, subset, k=args.k, reps=args.reps, seed=args.seed)
        payload = report.to_dict()
        payload["config"] = _effective_config(args, ("mapper", "k", "reps", "seed"))
        payload["config"]["subset"] = subset
        payload["instance_ids"] = list(fm.ids)
        payload["labels"] = list(fm.labels)
        (out_dir / f"{args.mapper}_{subset}.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        sel = fm.select(subset)
        scores, _ = pca(minmax_normalize(sel.values))
        with (out_dir / f"{args.mapper}_{subset}_pcs.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["instance_id", "label"] + [f"PC{i + 1}" for i in range(scores.shape[1])])
            for iid, lab, row in zip(fm.ids, fm.labels, scores):
                writer.writerow([iid, lab] + [f"{v:.12g}" for v in row])
        summary.append((subset, report.ari, report.nmi, report.silhouette))
        log.info("%s/%s: ARI %.3f NMI %.3f AS %.3f", args.mapper, subset, report.ari, report.nmi, report.silhouette)
    summary_path = out_dir / f"{args.mapper}_summary.csv"
    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for subset, a, n, s in summary:
            writer.writerow((subset, f"{a:.4f}", f"{n:.4f}", f"{s:.4f}"))
    _echo_config(root, f"cluster_{args.mapper}", _effective_config(args, ("mapper", "subset", "k", "reps", "seed")))
    return summary_path


# -- bench --------------------------------------------------------------------


def cmd_bench(args) -> Path:
    root = _out_root(args)
    dataset = load_dataset(root / "dataset")
    records = benchmark(dataset, mappers=args.mappers, eta=args.eta, jobs=args.jobs)
    bench_dir = root / "bench"
    bench_dir.mkdir(parents=True, exist_ok=True)
    _write_timing(bench_dir / "timing.csv", records)
    totals: dict[tuple[str, str], float] = {}
    for _, label, mapper, sec in records:
        totals[(label, mapper)] = totals.get((label, mapper), 0.0) + sec
    labels = list(dict.fromkeys(r[1] for r in records))
    with (bench_dir / "summary.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label"] + [f"{m}_seconds" for m in args.mappers] + ["ratio"])
        for label in labels:
            secs = [totals.get((label, m), 0.0) for m in args.mappers]
            ratio = secs[-1] / secs[0] if len(secs) > 1 and secs[0] > 0 else float("nan")
            writer.writerow([label] + [f"{s:.6f}" for s in secs] + [f"{ratio:.2f}"])
    _echo_config(root, "bench", _effective_config(args, ("mappers", "eta")))
    return bench_dir / "summary.csv"


def cmd_regenerated(args) -> Path:
    reports = regenerated_experiment(args.n, args.T, args.subset, k=args.k, reps=args.reps, seed=args.seed,
                                     mapper=args.mapper, eta=args.eta, jobs=args.jobs, models=args.models,
                                     burn_in=args.burn_in)
    root = _out_root(args)
    out_dir = root / "cluster"
    out_dir.mkdir(parents=True, exist_ok=True)
    for subset, report in reports.items():
        payload = report.to_dict()
        payload["config"] = _effective_config(args, ("models", "n", "T", "mapper", "eta", "k", "reps", "seed"))
        (out_dir / f"{args.mapper}_{subset}_regenerated.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    summary_path = out_dir / f"{args.mapper}_regenerated_summary.csv"
    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for subset, r in reports.items():
            writer.writerow((subset, f"{r.ari:.4f}", f"{r.nmi:.4f}", f"{r.silhouette:.4f}"))
    return summary_path


def cmd_pipeline(args) -> Path:
    if args.regenerate:
        # each repetition simulates its own dataset; nothing is cached on disk
        return cmd_regenerated(args)
    cmd_generate(args)
    cmd_map(args)
    cmd_features(args)
    return cmd_cluster(args)


# -- argument handling ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mqgraph", description="Multilayer quantile graphs for time series.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="run directory (default $MQGRAPH_OUT or ./runs)")
        p.add_argument("--config", default=None, help="JSON file whose keys override flags")
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)

    def gen_flags(p):
        p.add_argument("--models", nargs="+", default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--T", type=int, default=None)
        p.add_argument("--burn-in", dest="burn_in", type=int, default=None)

    def map_flags(p):
        p.add_argument("--mapper", choices=("mqg", "mhvg"), default=None)
        p.add_argument("--eta", type=_parse_eta, default=None)

    def cluster_flags(p):
        p.add_argument("--subset", nargs="+", choices=sorted(FEATURE_SUBSETS), default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--reps", type=int, default=None)

    p = sub.add_parser("generate", help="simulate the labelled dataset")
    common(p)
    gen_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("map", help="map every series to a network")
    common(p)
    map_flags(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("features", help="extract the feature matrix")
    common(p)
    map_flags(p)
    p.add_argument("--chain", action="store_true", help="run missing upstream stages")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("cluster", help="PCA + k-means against the model labels")
    common(p)
    map_flags(p)
    cluster_flags(p)
    p.add_argument("--chain", action="store_true", help="run missing upstream stages")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("bench", help="time the mappers on the dataset")
    common(p)
    map_flags(p)
    p.add_argument("--mappers", nargs="+", choices=("mqg", "mhvg"), default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("pipeline", help="generate, map, features and cluster in one go")
    common(p)
    gen_flags(p)
    map_flags(p)
    cluster_flags(p)
    p.add_argument("--regenerate", action="store_true",
                   help="simulate a fresh dataset for every repetition instead of restarting k-means only")
    p.set_defaults(func=cmd_pipeline)
    return parser


def resolve_args(args) -> argparse.Namespace:
    """Fill unset flags from ``--config`` and then from DEFAULTS."""
    overrides = {}
    if args.config:
        path = _require(Path(args.config), "--config file")
        overrides = json.loads(path.read_text(encoding="utf-8"))
    for key, default in {**DEFAULTS, "mappers": ["mqg", "mhvg"]}.items():
        if not hasattr(args, key):
            continue
        if key in overrides:
            value = overrides[key]
            if key == "eta":
                value = _parse_eta(value)
            setattr(args, key, value)
        elif getattr(args, key) is None:
            setattr(args, key, default)
    if "out" in overrides and args.out is None:
        args.out = overrides["out"]
    for key in ("models", "subset", "mappers"):
        if isinstance(getattr(args, key, None), str):
            setattr(args, key, [getattr(args, key)])
    if getattr(args, "jobs", 1) is not None and args.jobs < 1:
        raise MappingError("--jobs must be >= 1")
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args = resolve_args(args)
        result = args.func(args)
    except (MappingError, FileNotFoundError, OSError) as exc:
        print(f"mqgraph {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
