"""Command-line entry point: ``amrmerge <command> [options]``.

Settings resolve as command-line flags, then the TOML ``--config`` file
(top-level keys, overridden by a table named after the command), then
built-in defaults.  ``--show-config`` prints the resolved settings.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bundle import BundleError, DocumentBundle, load_bundle, parse_annotation_tsv
from .evaluate import (
    CLUSTER_METRICS,
    UNIVERSES,
    agreement_exact,
    agreement_jaccard,
    approx_randomization_stats,
    score_selection_stats,
    sum_stats,
)
from .linearize import linearize
from .merge import NEEDS_COREF, STRATEGIES, induce_gold_clusters, merge, merge_proportion
from .pipeline import (
    COREF_SOURCES,
    ConfigurationError,
    PreparedDocument,
    check_strategy,
    prepare,
    resolve_coref,
    run_selection,
    selection_document_stats,
)
from .selection.features import EmbeddingTable
from .selection.gat import attention_mask, gradient_check, init_model, load_checkpoint, save_checkpoint
from .selection.train import NumericalError, TrainConfig, gat_train, predict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("amrmerge")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
SPLITS = ("train", "dev", "test")

DEFAULTS: dict[str, object] = {
    "manifest": None,
    "out": "out",
    "strategy": "combined",
    "strategies": ",".join(STRATEGIES),
    "coref": "file",
    "split": "",
    "seed": 0,
    "jobs": 1,
    "embeddings": "",
    "lr": 1e-3,
    "max_epochs": 128,
    "patience": 3,
    "d_hid": 256,
    "init_scale": 1.0,
    "threshold": 0.5,
    "runs": 5,
    "rounds": 10000,
    "checkpoint": "",
    "include_abstractive": True,
    "bundle": "",
    "annotator1": "",
    "annotator2": "",
    "gc_seeds": 3,
    "gc_nodes": 6,
    "gc_d_in": 12,
    "gc_d_hid": 8,
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1, not argparse's 2 (reserved for data errors)
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _opt(p: argparse.ArgumentParser, *flags: str, **kw) -> None:
    p.add_argument(*flags, default=argparse.SUPPRESS, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="amrmerge", description="Merge sentence AMRs into document graphs and select summary content.")
    parser.add_argument("--config", help="TOML settings file")
    parser.add_argument("--show-config", action="store_true", help="print resolved settings and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p, strategy=True, coref=True):
        _opt(p, "--manifest", help="TOML manifest of [[bundle]] path/split entries")
        _opt(p, "--out", help="output directory or file")
        _opt(p, "--seed", type=int, help="single seed for every random choice")
        _opt(p, "--jobs", type=int, help="worker processes for per-document work")
        _opt(p, "--split", help="restrict to one manifest split")
        if strategy:
            _opt(p, "--strategy", choices=list(STRATEGIES))
        if coref:
            _opt(p, "--coref", choices=list(COREF_SOURCES))

    def training(p):
        _opt(p, "--embeddings", help="word vector text file; hashed vectors otherwise")
        _opt(p, "--lr", type=float)
        _opt(p, "--max-epochs", dest="max_epochs", type=int)
        _opt(p, "--patience", type=int)
        _opt(p, "--d-hid", dest="d_hid", type=int)
        _opt(p, "--init-scale", dest="init_scale", type=float, help="multiplier on the unit-normal attention init")
        _opt(p, "--threshold", type=float)

    p = sub.add_parser("merge", help="merge each bundle and export partitions and graphs")
    common(p)

    p = sub.add_parser("train", help="train the node selector on the train split")
    common(p)
    training(p)

    p = sub.add_parser("evaluate", help="cluster, selection and significance reports")
    common(p, strategy=False)
    training(p)
    _opt(p, "--strategies", help="comma-separated strategies to compare")
    _opt(p, "--checkpoint", help="score this model instead of training --runs models (single strategy)")
    _opt(p, "--runs", type=int, help="training runs to average")
    _opt(p, "--rounds", type=int, help="approximate randomization shuffles")
    _opt(p, "--exclude-abstractive", dest="include_abstractive", action="store_false")

    p = sub.add_parser("linearize", help="write one PENMAN line per document from predicted selections")
    common(p)
    _opt(p, "--embeddings")
    _opt(p, "--checkpoint")
    _opt(p, "--threshold", type=float)

    p = sub.add_parser("agreement", help="exact-match and Jaccard agreement of two annotation TSVs")
    _opt(p, "--bundle")
    _opt(p, "--annotator1")
    _opt(p, "--annotator2")

    p = sub.add_parser("gradcheck", help="finite-difference check of the selector gradients")
    _opt(p, "--seed", type=int)
    _opt(p, "--seeds", dest="gc_seeds", type=int, help="number of random instances")
    _opt(p, "--nodes", dest="gc_nodes", type=int)
    _opt(p, "--d-in", dest="gc_d_in", type=int)
    _opt(p, "--d-hid", dest="gc_d_hid", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    config = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{args.config}: {exc}") from exc
        layered = {k: v for k, v in data.items() if not isinstance(v, dict)}
        if args.command and isinstance(data.get(args.command), dict):
            layered.update(data[args.command])
        for key, value in layered.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{args.config}: unknown setting {key!r}")
            config[key] = value
    for key, value in vars(args).items():
        if key in DEFAULTS:
            config[key] = value
    return config


def format_config(config: dict) -> str:
    lines = []
    for key in sorted(config):
        value = config[key]
        if value is None:
            lines.append(f"# {key} is unset")
        else:
            lines.append(f"{key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"


# --- manifest ----------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    split: str


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise DataError(f"{path}: {exc}") from exc
    entries = []
    for i, item in enumerate(data.get("bundle", [])):
        if "path" not in item:
            raise DataError(f"{path}: bundle entry {i} has no path")
        split = item.get("split", "train")
        if split not in SPLITS:
            raise DataError(f"{path}: bundle entry {i} has unknown split {split!r}")
        bundle_path = (path.parent / item["path"]).resolve()
        if not bundle_path.exists():
            raise DataError(f"{path}: bundle {item['path']} does not exist")
        entries.append(ManifestEntry(bundle_path, split))
    if not entries:
        raise DataError(f"{path}: no [[bundle]] entries")
    return entries


def _parallel_map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load(entries: Sequence[ManifestEntry], jobs: int) -> list[DocumentBundle]:
    return _parallel_map(load_bundle, [e.path for e in entries], jobs)


def _bundles_by_split(config: dict) -> dict[str, list[DocumentBundle]]:
    if not config["manifest"]:
        raise UsageError("--manifest is required")
    entries = load_manifest(config["manifest"])
    if config["split"]:
        if config["split"] not in SPLITS:
            raise UsageError(f"unknown split {config['split']!r}")
        entries = [e for e in entries if e.split == config["split"]]
    bundles = _load(entries, config["jobs"])
    out: dict[str, list[DocumentBundle]] = {s: [] for s in SPLITS}
    for entry, bundle in zip(entries, bundles):
        out[entry.split].append(bundle)
    return out


def _embeddings(config: dict) -> EmbeddingTable:
    if config["embeddings"]:
        try:
            return EmbeddingTable.load(config["embeddings"])
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load embeddings: {exc}") from exc
    return EmbeddingTable()


def _train_config(config: dict) -> TrainConfig:
    return TrainConfig(
        seed=int(config["seed"]),
        lr=float(config["lr"]),
        max_epochs=int(config["max_epochs"]),
        patience=int(config["patience"]),
        d_hid=int(config["d_hid"]),
        init_scale=float(config["init_scale"]),
        threshold=float(config["threshold"]),
    )


@dataclass(frozen=True)
class _PrepareTask:
    strategy: str
    coref: str
    embeddings: EmbeddingTable

    def __call__(self, bundle: DocumentBundle) -> PreparedDocument:
        return prepare(bundle, self.strategy, self.coref, self.embeddings)


def _prepare(bundles, strategy: str, config: dict, embeddings: EmbeddingTable) -> list[PreparedDocument]:
    return _parallel_map(_PrepareTask(strategy, config["coref"], embeddings), bundles, config["jobs"])


def _out_dir(config: dict) -> Path:
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands ----------------------------------------------------------------


def cmd_merge(config: dict) -> int:
    check_strategy(config["strategy"], config["coref"])
    splits = _bundles_by_split(config)
    bundles = [b for s in SPLITS for b in splits[s]]
    out = _out_dir(config)
    proportions = {}
    for bundle in bundles:
        coref = resolve_coref(bundle, config["coref"]) if config["strategy"] in NEEDS_COREF else None
        partition, graph = merge(bundle, config["strategy"], coref)
        stem = out / bundle.doc_id
        stem.with_suffix(".partition.json").write_text(json.dumps(partition.to_json()) + "\n", encoding="utf-8")
        stem.with_suffix(".edges.tsv").write_text(graph.to_edge_list(), encoding="utf-8")
        stem.with_suffix(".penman").write_text(graph.to_penman() + "\n", encoding="utf-8")
        proportions[bundle.doc_id] = merge_proportion(partition)
    report = {
        "strategy": config["strategy"],
        "coref": config["coref"],
        "per_bundle": proportions,
        "mean": float(np.mean(list(proportions.values()))) if proportions else 0.0,
    }
    (out / "proportions.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{config['strategy']}: {len(bundles)} bundles, mean merge proportion {report['mean']:.4f}")
    return EXIT_OK


def cmd_train(config: dict) -> int:
    check_strategy(config["strategy"], config["coref"])
    splits = _bundles_by_split(config)
    if not splits["train"]:
        raise DataError("the manifest has no train bundles")
    embeddings = _embeddings(config)
    train = _prepare(splits["train"], config["strategy"], config, embeddings)
    dev = _prepare(splits["dev"], config["strategy"], config, embeddings)
    tc = _train_config(config)
    result = gat_train([d.item for d in train], [d.item for d in dev], tc)
    result.model.meta.update({"strategy": config["strategy"], "coref": config["coref"]})
    out = _out_dir(config)
    save_checkpoint(result.model, out / "model.ckpt")
    with open(out / "losses.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "dev_loss"])
        for rec in result.history:
            writer.writerow([rec.epoch, repr(rec.train_loss), repr(rec.dev_loss)])
    print(f"trained {len(result.history)} epochs, best epoch {result.best_epoch}; wrote {out / 'model.ckpt'}")
    return EXIT_OK


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    return "\n".join([fmt(header), fmt(["-" * w for w in widths])] + [fmt(r) for r in rows])


def _pct(x: float) -> str:
    return f"{100 * x:.1f}"


def cmd_evaluate(config: dict) -> int:
    strategies = [s.strip() for s in str(config["strategies"]).split(",") if s.strip()]
    if not strategies:
        raise UsageError("no strategies to evaluate")
    for s in strategies:
        check_strategy(s, config["coref"])
    if config["checkpoint"] and len(strategies) != 1:
        raise UsageError("--checkpoint scores a single strategy; pass one --strategies value")
    splits = _bundles_by_split({**config, "split": ""})
    evaluated = splits["test"] or splits["dev"]
    if not evaluated:
        raise DataError("the manifest has no test or dev bundles to evaluate")
    missing = [b.doc_id for b in evaluated if b.gold is None]
    if missing:
        raise DataError(f"bundles without gold annotations: {', '.join(missing)}")
    embeddings = _embeddings(config)
    tc = _train_config(config)
    rounds, seed = int(config["rounds"]), int(config["seed"])

    report: dict = {"evaluated": [b.doc_id for b in evaluated], "clusters": {}, "proportion": {}, "selection": {}, "significance": {}}
    cluster_stats: dict = {}
    selection_stats_by: dict = {}
    for strategy in strategies:
        test_docs = _prepare(evaluated, strategy, config, embeddings)
        report["proportion"][strategy] = float(np.mean([merge_proportion(d.partition) for d in test_docs]))
        for universe in UNIVERSES:
            for metric, fn in CLUSTER_METRICS.items():
                stats = [fn(d.partition, induce_gold_clusters(d.bundle.gold, d.bundle), universe) for d in test_docs]
                cluster_stats[(strategy, universe, metric)] = stats
                report["clusters"].setdefault(universe, {}).setdefault(strategy, {})[metric] = sum_stats(stats).score()._asdict()
        if config["checkpoint"]:
            model = _load_model(config["checkpoint"], test_docs)
            stats = selection_document_stats(model, test_docs, tc.threshold, config["include_abstractive"])
            runs = [score_selection_stats(sum_stats(stats))]
            pooled = stats
        else:
            if not splits["train"]:
                raise DataError("the manifest has no train bundles")
            train = _prepare(splits["train"], strategy, config, embeddings)
            dev = _prepare(splits["dev"], strategy, config, embeddings) if splits["test"] else []
            result = run_selection(train, dev, test_docs, tc, int(config["runs"]), config["include_abstractive"])
            runs = result.runs
            pooled = [s for run in result.document_stats for s in run]
        arr = np.array([[r.precision, r.recall, r.f1] for r in runs])
        report["selection"][strategy] = {
            "precision": float(arr[:, 0].mean()),
            "recall": float(arr[:, 1].mean()),
            "f1": float(arr[:, 2].mean()),
            "runs": [r._asdict() for r in runs],
        }
        selection_stats_by[strategy] = pooled

    for a, b in itertools.combinations(strategies, 2):
        key = f"{a} vs {b}"
        entry = {}
        for universe in UNIVERSES:
            for metric in CLUSTER_METRICS:
                res = approx_randomization_stats(cluster_stats[(a, universe, metric)], cluster_stats[(b, universe, metric)], rounds, seed, 1.0)
                entry[f"{metric}/{universe}"] = {"p_value": res.p_value, "delta_f1": res.observed}
        res = approx_randomization_stats(selection_stats_by[a], selection_stats_by[b], rounds, seed, 0.0)
        entry["selection"] = {"p_value": res.p_value, "delta_f1": res.observed}
        report["significance"][key] = entry

    out = _out_dir(config)
    text = format_report(report, strategies)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def format_report(report: dict, strategies: list[str]) -> str:
    parts = []
    for universe in UNIVERSES:
        rows = []
        for s in strategies:
            m = report["clusters"][universe][s]
            rows.append([s] + [_pct(m[k][f]) for k in CLUSTER_METRICS for f in ("precision", "recall", "f1")])
        header = ["strategy"] + [f"{k.upper()} {f}" for k in CLUSTER_METRICS for f in ("P", "R", "F1")]
        parts.append(f"Cluster scores ({universe} universe)\n" + _table(header, rows))
    rows = [[s] + [_pct(report["selection"][s][k]) for k in ("precision", "recall", "f1")] for s in strategies]
    n_runs = len(report["selection"][strategies[0]]["runs"])
    parts.append(f"Node selection (mean of {n_runs} run{'s' if n_runs != 1 else ''})\n" + _table(["strategy", "P", "R", "F1"], rows))
    rows = [[s, f"{report['proportion'][s]:.3f}"] for s in strategies]
    parts.append("Merged node proportion\n" + _table(["strategy", "proportion"], rows))
    if report["significance"]:
        cols = sorted(next(iter(report["significance"].values())))
        rows = [[pair] + [f"{v[c]['p_value']:.4f}" for c in cols] for pair, v in report["significance"].items()]
        parts.append("Approximate randomization p-values\n" + _table(["pair"] + cols, rows))
    return "\n\n".join(parts) + "\n"


def _load_model(path: str, docs: Sequence[PreparedDocument]):
    try:
        model = load_checkpoint(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load checkpoint: {exc}") from exc
    for d in docs:
        if d.item.features.shape[1] != model.d_in:
            raise DataError(
                f"checkpoint expects {model.d_in}-dimensional features but {d.bundle.doc_id} has {d.item.features.shape[1]}"
            )
    return model


def cmd_linearize(config: dict) -> int:
    check_strategy(config["strategy"], config["coref"])
    if not config["checkpoint"]:
        raise UsageError("--checkpoint is required")
    splits = _bundles_by_split(config)
    bundles = [b for s in SPLITS for b in splits[s]]
    docs = _prepare(bundles, config["strategy"], config, _embeddings(config))
    model = _load_model(config["checkpoint"], docs)
    lines = []
    for d in docs:
        labels = predict(model, d.item, float(config["threshold"])) if len(d.graph) else []
        lines.append(linearize(d.graph, labels).penman)
    out = Path(config["out"])
    if out.suffix == "":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "linearized.txt"
    out.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    print(f"wrote {len(lines)} lines to {out}")
    return EXIT_OK


def cmd_agreement(config: dict) -> int:
    for key in ("bundle", "annotator1", "annotator2"):
        if not config[key]:
            raise UsageError(f"--{key} is required")
    bundle = load_bundle(config["bundle"])
    try:
        a1 = parse_annotation_tsv(Path(config["annotator1"]).read_text(encoding="utf-8"), bundle)
        a2 = parse_annotation_tsv(Path(config["annotator2"]).read_text(encoding="utf-8"), bundle)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    print(json.dumps({"exact_match": agreement_exact(a1, a2), "jaccard": agreement_jaccard(a1, a2)}, sort_keys=True))
    return EXIT_OK


def cmd_gradcheck(config: dict) -> int:
    worst = 0.0
    n = int(config["gc_nodes"])
    for k in range(int(config["gc_seeds"])):
        seed = int(config["seed"]) + k
        rng = np.random.default_rng(seed)
        d_in = int(config["gc_d_in"])
        model = init_model(d_in, int(config["gc_d_hid"]), seed=seed, init_scale=0.5)
        features = rng.standard_normal((n, d_in))
        neighbors = [[j for j in range(i) if rng.random() < 0.4] for i in range(n)]
        labels = rng.integers(0, 2, n)
        errors = gradient_check(model, features, attention_mask(n, neighbors), labels)
        worst = max(worst, max(errors.values()))
        print(f"seed {seed}: " + " ".join(f"{name}={err:.2e}" for name, err in errors.items()))
    print(f"max relative error {worst:.3e}")
    return EXIT_OK if worst < 1e-4 else EXIT_NUMERIC


COMMANDS = {
    "merge": cmd_merge,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "linearize": cmd_linearize,
    "agreement": cmd_agreement,
    "gradcheck": cmd_gradcheck,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = resolve_config(args)
        if args.show_config:
            print(format_config(config), end="")
            return EXIT_OK
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return COMMANDS[args.command](config)
    except (UsageError, ConfigurationError) as exc:
        print(f"amrmerge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FloatingPointError) as exc:
        print(f"amrmerge: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, BundleError, ValueError) as exc:
        print(f"amrmerge: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
