"""Command-line entry point: ``sidechannel <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 partial success (files skipped),
3 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path


from . import __version__
from .attrsel import cfs_best_first, rank_attributes_cv
from .classifiers import ALGORITHMS, dumps_model
from .dataset import Dataset, ingest_corpus, read_arff, remove_attributes, write_arff, write_csv
from .errors import BadParameter, SideChannelError
from .evaluation import EvalReport, TrainerSpec, cross_validate, format_learning_curve, learning_curve
from .stats import fingerprint_file
from . import synth

log = logging.getLogger("sidechannel")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL, EXIT_DATA = 0, 1, 2, 3

# countermeasure hints keyed by the attribute that leaks most
HINTS = {
    "size": "normalize served files to a common byte size (pad or re-encode to a fixed length)",
    "chisqstatistic": "re-encode all images with identical encoder settings to flatten byte-value histograms",
    "entropy": "re-encode all images with identical encoder settings so information density is uniform",
    "compressionrate": "re-encode all images with identical encoder settings so information density is uniform",
    "arithmean": "re-encode with identical settings; byte-value means track content and quantization",
    "corr": "avoid serving formats whose byte layout mirrors content smoothness",
    "montepi": "equalize byte-value distributions across classes",
    "errmontepi": "equalize byte-value distributions across classes",
}


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[str] = field(default_factory=list)
    output: str | None = None
    algo: str | None = None
    params: dict = field(default_factory=dict)
    folds: int | None = None
    seed: int | None = None
    format: str = "text"

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def header(self) -> str:
        seed = "-" if self.seed is None else str(self.seed)
        return f"# sidechannel {__version__} command={self.subcommand} seed={seed} config={self.digest()}\n"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_common(p, folds=False, seed=True, fmt=True):
    if folds:
        p.add_argument("--folds", type=int, default=10)
    if seed:
        p.add_argument("--seed", type=int, default=1)
    if fmt:
        p.add_argument("--format", choices=("text", "tsv"), default="text")


def _add_algo(p, default=None):
    p.add_argument("--algo", choices=ALGORITHMS, default=default, required=default is None)
    p.add_argument("--select", choices=("cfs",), default=None, help="wrap the classifier in CFS attribute selection")
    p.add_argument("--remove", type=_csv_list, default=[], help="comma-separated attributes to drop first")
    p.add_argument("--iterations", type=int, help="LogitBoost rounds (default 10)")
    p.add_argument("--trees", type=int, help="forest size (default 10)")
    p.add_argument("--k-features", type=int, help="forest attributes per node (default log2(m)+1)")
    p.add_argument("--confidence", type=float, help="J48 pruning confidence (default 0.25)")
    p.add_argument("--min-leaf", type=int, help="J48 minimum instances per leaf (default 2)")
    p.add_argument("-C", "--complexity", dest="c", type=float, help="SVM C (default 1.0)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sidechannel", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file of option defaults; command-line flags win")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"sidechannel {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("fingerprint", help="byte statistics of files")
    s.add_argument("files", nargs="+")
    s.add_argument("--format", choices=("tsv", "text", "report"), default="tsv")

    s = sub.add_parser("build-dataset", help="fingerprint a class-per-directory corpus")
    s.add_argument("root")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--skip-log")
    s.add_argument("--relation")

    s = sub.add_parser("train", help="train one classifier and print its model")
    s.add_argument("arff")
    _add_algo(s)
    s.add_argument("--model-out", help="write the serialized model here")
    _add_common(s, fmt=False)

    s = sub.add_parser("evaluate", help="stratified cross-validation")
    s.add_argument("arff")
    _add_algo(s)
    _add_common(s, folds=True)

    s = sub.add_parser("rank-attributes", help="chi-square attribute ranking")
    s.add_argument("arff")
    _add_common(s, folds=True)

    s = sub.add_parser("select-subset", help="CFS best-first subset search")
    s.add_argument("arff")
    s.add_argument("--stale", type=int, default=5)
    _add_common(s, seed=False)

    s = sub.add_parser("learning-curve", help="accuracy and tree size versus sample size")
    s.add_argument("source", help="ARFF file or corpus directory")
    _add_algo(s, default="j48")
    s.add_argument("--sizes", type=lambda t: [int(v) for v in _csv_list(t)], required=True)
    _add_common(s, folds=True)

    s = sub.add_parser("synth-corpus", help="watermarked corpus from base images")
    s.add_argument(
        "--bases", required=True,
        help="directory of <class>/*.ppm, or synthetic:NAME=SIGMA[~JITTER]*COUNT,... "
        "for generated bases",
    )
    s.add_argument("--mark", help="watermark PPM (default: built-in badge)")
    s.add_argument("--alpha", type=float, default=0.25)
    s.add_argument("--per-class", type=int, required=True)
    s.add_argument("--encoder", default="rle", help="ppm | rle | exec:<template with {input} {output}>")
    s.add_argument("--size", type=lambda t: tuple(int(v) for v in t.split("x")), default=(64, 64),
                   help="WxH of generated synthetic bases")
    s.add_argument("-o", "--output", required=True)
    _add_common(s, fmt=False)

    s = sub.add_parser("report", help="full leakage audit of a corpus or ARFF file")
    s.add_argument("source")
    _add_common(s, folds=True)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        defaults = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    defaults = {k.replace("-", "_"): v for k, v in defaults.items()}
    parser.set_defaults(**defaults)
    for action in parser._subparsers._group_actions[0].choices.values():
        action.set_defaults(**defaults)


def _trainer(args) -> TrainerSpec:
    params = {}
    for key, name in (
        ("iterations", "iterations"), ("trees", "trees"), ("k_features", "k_features"),
        ("confidence", "confidence"), ("min_leaf", "min_leaf"), ("c", "c"),
    ):
        v = getattr(args, key, None)
        if v is not None:
            params[name] = v
    return TrainerSpec(args.algo, params, args.select)


def _load(path: str, remove=()) -> Dataset:
    ds = read_arff(path)
    return remove_attributes(ds, remove) if remove else ds


def _load_source(source: str) -> tuple[Dataset, list]:
    if Path(source).is_dir():
        res = ingest_corpus(source)
        return res.dataset, res.skipped
    return read_arff(source), []


def _config(args, **kw) -> RunConfig:
    return RunConfig(args.command, **kw)


# ---------------------------------------------------------------- subcommands


def cmd_fingerprint(args, out) -> int:
    cfg = _config(args, inputs=args.files, format=args.format)
    out.write(cfg.header())
    skipped = 0
    for f in args.files:
        try:
            fp = fingerprint_file(f)
        except (OSError, SideChannelError) as exc:
            print(f"skipped {f}: {exc}", file=sys.stderr)
            skipped += 1
            continue
        if args.format == "report":
            out.write(f"== {f}\n{fp.report()}\n")
        else:
            out.write(fp.tsv(f) + "\n")
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_build_dataset(args, out) -> int:
    res = ingest_corpus(args.root, relation=args.relation)
    with open(args.output, "w", encoding="utf-8") as fh:
        if args.output.endswith(".csv"):
            write_csv(res.dataset, fh)
        else:
            fh.write(f"% {_config(args, inputs=[args.root], output=args.output).header()[2:]}")
            write_arff(res.dataset, fh)
    if args.skip_log:
        with open(args.skip_log, "w", encoding="utf-8") as fh:
            for path, reason in res.skipped:
                fh.write(f"{path}\t{reason}\n")
    for path, reason in res.skipped:
        print(f"skipped {path}: {reason}", file=sys.stderr)
    ds = res.dataset
    counts = ", ".join(f"{c}={n}" for c, n in zip(ds.class_values, ds.class_counts()))
    out.write(_config(args, inputs=[args.root], output=args.output).header())
    out.write(f"Instances: {len(ds)} ({counts}); skipped: {len(res.skipped)}\n")
    return EXIT_PARTIAL if res.skipped else EXIT_OK


def cmd_train(args, out) -> int:
    ds = _load(args.arff, args.remove)
    spec = _trainer(args)
    cfg = _config(args, inputs=[args.arff], algo=spec.describe(), params={"remove": args.remove}, seed=args.seed)
    model = spec.fit(ds, args.seed)
    out.write(cfg.header())
    out.write(_run_information(spec.describe(), ds, None))
    out.write("\n=== Classifier model (full training set) ===\n\n")
    out.write(model.report())
    if args.model_out:
        Path(args.model_out).write_text(dumps_model(model))
    return EXIT_OK


def _run_information(scheme: str, ds: Dataset, folds: int | None) -> str:
    lines = [
        "=== Run information ===",
        "",
        f"Scheme:       {scheme}",
        f"Relation:     {ds.relation}",
        f"Instances:    {len(ds)}",
        f"Attributes:   {ds.n_attributes + 1}",
    ]
    lines += [f"              {n}" for n in (*ds.attribute_names, ds.class_name)]
    mode = "evaluate on training data" if folds is None else f"{folds}-fold cross-validation"
    lines.append(f"Test mode:    {mode}")
    return "\n".join(lines) + "\n"


def cmd_evaluate(args, out) -> int:
    ds = _load(args.arff, args.remove)
    spec = _trainer(args)
    cfg = _config(
        args, inputs=[args.arff], algo=spec.describe(), params={"remove": args.remove},
        folds=args.folds, seed=args.seed, format=args.format,
    )
    rep = cross_validate(spec, ds, args.folds, args.seed)
    out.write(cfg.header())
    if args.format == "tsv":
        out.write(EvalReport.TSV_HEADER + "\n" + rep.tsv_row() + "\n")
    else:
        out.write(_run_information(spec.describe(), ds, args.folds) + "\n")
        if spec.select:
            # folds refit their own selection; this is the one made on all rows
            full = spec.fit(ds, args.seed)
            out.write("=== Attribute selection on all input data ===\n\n")
            out.write(full.selection.format() + "\n")
        out.write(rep.format())
    return EXIT_OK


def cmd_rank(args, out) -> int:
    ds = read_arff(args.arff)
    cfg = _config(args, inputs=[args.arff], folds=args.folds, seed=args.seed, format=args.format)
    rep = rank_attributes_cv(ds, args.folds, args.seed)
    out.write(cfg.header())
    out.write(rep.tsv() if args.format == "tsv" else rep.format())
    return EXIT_OK


def cmd_select(args, out) -> int:
    ds = read_arff(args.arff)
    cfg = _config(args, inputs=[args.arff], params={"stale": args.stale}, format=args.format)
    res = cfs_best_first(ds, args.stale)
    out.write(cfg.header())
    if args.format == "tsv":
        out.write("subset\tmerit\tevaluated\n")
        out.write(f"{','.join(res.names)}\t{res.merit:.6f}\t{res.evaluated}\n")
    else:
        out.write(res.format(args.stale))
    return EXIT_OK


def cmd_learning_curve(args, out) -> int:
    ds, skipped = _load_source(args.source)
    if args.remove:
        ds = remove_attributes(ds, args.remove)
    spec = _trainer(args)
    cfg = _config(
        args, inputs=[args.source], algo=spec.describe(), params={"sizes": args.sizes},
        folds=args.folds, seed=args.seed, format=args.format,
    )
    points = learning_curve(spec, ds, args.sizes, args.folds, args.seed)
    out.write(cfg.header())
    out.write(format_learning_curve(points))
    return EXIT_PARTIAL if skipped else EXIT_OK


def _parse_synthetic(text: str) -> dict[str, tuple[synth.ClassTexture, int]]:
    out = {}
    for item in _csv_list(text[len("synthetic:"):]):
        try:
            name, rest = item.split("=")
            sig, count = rest.split("*")
            sigma, _, jitter = sig.partition("~")
            out[name] = (synth.ClassTexture(float(sigma), sigma_jitter=float(jitter or 0)), int(count))
        except ValueError:
            raise UsageError(f"bad synthetic base spec {item!r}; want NAME=SIGMA[~JITTER]*COUNT") from None
    return out


def cmd_synth(args, out) -> int:
    if args.bases.startswith("synthetic:"):
        parsed = _parse_synthetic(args.bases)
        spec = synth.BaseSpec(
            {k: v[0] for k, v in parsed.items()}, {k: v[1] for k, v in parsed.items()},
            width=args.size[0], height=args.size[1],
        )
        bases = synth.generate_synthetic_bases(spec, args.seed)
    else:
        bases = synth.load_bases(args.bases)
    mark = synth.read_ppm(args.mark) if args.mark else synth.default_watermark()
    cfg = _config(
        args, inputs=[args.bases, args.mark or "builtin"], output=args.output,
        params={"alpha": args.alpha, "per_class": args.per_class, "encoder": args.encoder},
        seed=args.seed,
    )
    paths = synth.synth_corpus(bases, mark, args.alpha, args.per_class, args.seed, args.output, args.encoder)
    out.write(cfg.header())
    out.write(f"wrote {len(paths)} files to {args.output}\n")
    return EXIT_OK


def leakage_table(ds: Dataset, folds: int = 10, seed: int = 1):
    """Rows of (classifier, removed attributes, attributes used, accuracy)."""
    ranking = rank_attributes_cv(ds, folds, seed)
    rows = []
    for algo in ALGORITHMS:
        rep = cross_validate(TrainerSpec(algo), ds, folds, seed, full_model=False)
        rows.append((algo, "-", "all", rep.accuracy))
    rows.sort(key=lambda r: (-r[3], ALGORITHMS.index(r[0])))
    best = next(r[0] for r in rows if r[0] != "majority")
    order = ranking.order()
    for drop in (order[:1], order[:2]):
        if len(drop) >= ds.n_attributes:
            break
        sub = remove_attributes(ds, drop)
        rep = cross_validate(TrainerSpec(best), sub, folds, seed, full_model=False)
        rows.append((best, ", ".join(drop), ", ".join(sub.attribute_names), rep.accuracy))
    return ranking, rows


def cmd_report(args, out) -> int:
    ds, skipped = _load_source(args.source)
    cfg = _config(args, inputs=[args.source], folds=args.folds, seed=args.seed, format=args.format)
    ranking, rows = leakage_table(ds, args.folds, args.seed)
    majority = next(r[3] for r in rows if r[0] == "majority")
    out.write(cfg.header())
    if args.format == "tsv":
        out.write("classifier\tnon-allowed parameters\tparameters used\taccuracy\n")
        for r in rows:
            out.write(f"{r[0]}\t{r[1]}\t{r[2]}\t{r[3]:.4f}\n")
        return EXIT_PARTIAL if skipped else EXIT_OK
    counts = ", ".join(f"{c}={n}" for c, n in zip(ds.class_values, ds.class_counts()))
    out.write(f"Relation: {ds.relation}\nInstances: {len(ds)} ({counts}); skipped files: {len(skipped)}\n\n")
    out.write(ranking.format() + "\n")
    w1 = max(len("classifier"), *(len(r[0]) for r in rows))
    w2 = max(len("non-allowed parameters"), *(len(r[1]) for r in rows))
    w3 = max(len("parameters used"), *(len(r[2]) for r in rows))
    out.write(f"{'classifier':<{w1}}  {'non-allowed parameters':<{w2}}  {'parameters used':<{w3}}  accuracy\n")
    for r in rows:
        out.write(f"{r[0]:<{w1}}  {r[1]:<{w2}}  {r[2]:<{w3}}  {r[3]:.4f} %\n")
    best = rows[0]
    out.write("\n")
    out.write(f"Best classifier beats the majority baseline by {best[3] - majority:.2f} points.\n")
    top = ranking.entries[0].name
    out.write(f"Most leaking attribute: {top}. Suggested countermeasure: {HINTS.get(top, 'equalize this statistic across classes')}.\n")
    return EXIT_PARTIAL if skipped else EXIT_OK


COMMANDS = {
    "fingerprint": cmd_fingerprint,
    "build-dataset": cmd_build_dataset,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "rank-attributes": cmd_rank,
    "select-subset": cmd_select,
    "learning-curve": cmd_learning_curve,
    "synth-corpus": cmd_synth,
    "report": cmd_report,
}


def main(argv: list[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(parser.format_usage().strip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (SideChannelError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
