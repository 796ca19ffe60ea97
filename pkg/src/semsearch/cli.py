"""``semsearch`` command line: build indexes, search, batch runs, evaluate.

Exit status: 0 success, 1 domain error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import yaml

from . import evaluation, trec
from .errors import ConfigError, SemSearchError
from .index import build_index, load_index, persist_index
from .pipeline import STRATEGY_NAMES, Annotator, Strategy, expand_documents, load_overrides
from .text import Analyzer
from .wordnet import load_lexicon, resolve_dict_dir
from .wsd import DEFAULT_WINDOW, parse_pos_order

log = logging.getLogger("semsearch")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _depth(text: str) -> int | None:
    if text.lower() in ("unlimited", "none", "all"):
        return None
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("depth must be a positive integer or 'unlimited'")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _flatten(config: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in config.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def read_config(path: str | None) -> dict:
    """Flatten a YAML config so nested and dotted keys (``wsd.window``) both work."""
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping")
    return _flatten(data)


def _setting(args, config: dict, attr: str, key: str, default=None):
    value = getattr(args, attr, None)
    if value is not None:
        return value
    return config.get(key, default)


def _require_path(path, what: str, kind: str = "file") -> Path:
    if path is None:
        raise UsageError(f"{what} is required")
    p = Path(path)
    ok = p.is_dir() if kind == "dir" else p.exists()
    if not ok:
        raise UsageError(f"{what} not found: {p}")
    return p


def _analyzer(args, config) -> Analyzer:
    path = _setting(args, config, "stopwords", "stopwords.path")
    if path:
        _require_path(path, "stop-word file")
        return Analyzer.from_file(path)
    return Analyzer()


def _lexicon(args, config, strategy: Strategy, fallback: str | None = None):
    # an index remembers the dict directory it was built with
    dict_dir = resolve_dict_dir(_setting(args, config, "dict", "dict")) or (Path(fallback) if fallback else None)
    if dict_dir is None:
        if strategy.needs_lexicon:
            raise UsageError(f"strategy {strategy.name.value} needs a WordNet dict directory "
                             "(--dict or WORDNET_DICT)")
        return None
    _require_path(dict_dir, "WordNet dict directory", kind="dir")
    started = time.perf_counter()
    lexicon = load_lexicon(dict_dir, break_cycles=bool(_setting(args, config, "break_cycles", "break_cycles", False)))
    log.info("lexicon: %d synsets (%.1fs)", len(lexicon), time.perf_counter() - started)
    return lexicon


def _annotator_from_args(args, config) -> Annotator:
    strategy = Strategy.parse(
        _setting(args, config, "strategy", "strategy", "Lexical"),
        _setting(args, config, "hyper_depth", "hyper_depth"),
        _setting(args, config, "hypo_depth", "hypo_depth", 1),
    )
    return _make_annotator(args, config, strategy, {})


def _make_annotator(args, config, strategy: Strategy, meta: dict) -> Annotator:
    window = _setting(args, config, "window", "wsd.window", meta.get("window", DEFAULT_WINDOW))
    pos_order = parse_pos_order(_setting(args, config, "pos_order", "wsd.pos_order", meta.get("pos_order", "n,v,a,r")))
    lexicon = _lexicon(args, config, strategy, meta.get("lexicon"))
    return Annotator(strategy, lexicon, _analyzer(args, config), int(window), pos_order)


def _annotator_for_index(args, config, index) -> Annotator:
    meta = index.meta
    name = _setting(args, config, "strategy", "strategy", meta.get("strategy", "Lexical"))
    if meta.get("strategy") and name != meta["strategy"]:
        log.warning("index was built with %s but queries use %s", meta["strategy"], name)
    strategy = Strategy.parse(
        name,
        _setting(args, config, "hyper_depth", "hyper_depth", meta.get("hyper_depth")),
        _setting(args, config, "hypo_depth", "hypo_depth", meta.get("hypo_depth", 1)),
    )
    return _make_annotator(args, config, strategy, meta)


def _meta(annotator: Annotator) -> dict:
    s = annotator.strategy
    tagger = annotator.tagger
    return {
        "strategy": s.name.value,
        "hyper_depth": s.hypernym_depth,
        "hypo_depth": s.hyponym_depth,
        "window": tagger.window if tagger else DEFAULT_WINDOW,
        "pos_order": ",".join(p.value for p in tagger.pos_order) if tagger else "n,v,a,r",
        "lexicon": annotator.lexicon.source if annotator.lexicon else None,
    }


def cmd_build_index(args, config) -> int:
    corpus = _require_path(_setting(args, config, "corpus", "corpus"), "corpus")
    out = _setting(args, config, "index", "index")
    if not out:
        raise UsageError("--index output path is required")
    annotator = _annotator_from_args(args, config)
    started = time.perf_counter()
    stats = trec.ParseStats()
    docs = ((d.docno, d.text) for d in trec.parse_trec_docs(corpus, strict=args.strict, stats=stats))
    bags = expand_documents(annotator, docs, workers=args.workers)
    index = build_index(_progress(bags), meta=_meta(annotator))
    persist_index(index, out)
    elapsed = time.perf_counter() - started
    print(f"documents: {index.n_docs}")
    print(f"vocabulary: {index.n_terms}")
    print(f"skipped records: {stats.skipped}")
    print(f"elapsed: {elapsed:.2f}s")
    return EXIT_OK


def _progress(items, every: int = 10_000):
    for i, item in enumerate(items, start=1):
        if i % every == 0:
            log.info("expanded %d documents", i)
        yield item


def cmd_search(args, config) -> int:
    index = load_index(_require_path(_setting(args, config, "index", "index"), "index"))
    annotator = _annotator_for_index(args, config, index)
    bag = annotator.annotate_query(" ".join(args.query))
    for hit in index.search(bag, args.k):
        print(f"{hit.rank} {hit.docno} {hit.score:.6f}")
    return EXIT_OK


def cmd_run(args, config) -> int:
    index = load_index(_require_path(_setting(args, config, "index", "index"), "index"))
    topics = trec.parse_topics(_require_path(_setting(args, config, "topics", "topics"), "topics file"))
    overrides_path = _setting(args, config, "overrides", "overrides")
    overrides = load_overrides(_require_path(overrides_path, "overrides file")) if overrides_path else {}
    if not args.output:
        raise UsageError("--output run file path is required")
    annotator = _annotator_for_index(args, config, index)
    results = {}
    for topic in topics:
        bag = annotator.annotate_query(topic.title, overrides.get(topic.number))
        results[topic.number] = index.search(bag, args.k)
    tag = args.tag or annotator.strategy.name.value
    trec.write_run(results, tag, args.output)
    print(f"topics: {len(topics)}")
    print(f"run: {args.output}")
    return EXIT_OK


def _load_runs(paths):
    runs = {}
    for path in paths:
        parsed = trec.parse_run(_require_path(path, "run file"))
        tags = {e.tag for entries in parsed.values() for e in entries}
        label = tags.pop() if len(tags) == 1 else Path(path).stem
        if label in runs:
            label = Path(path).stem
        runs[label] = trec.run_rankings(parsed)
    return runs


def cmd_eval(args, config) -> int:
    relevant = trec.relevant_sets(trec.parse_qrels(_require_path(_setting(args, config, "qrels", "qrels"), "qrels")))
    runs = _load_runs(args.runs)
    reports = {label: evaluation.evaluate_run(run, relevant, depth=args.depth) for label, run in runs.items()}
    reference = args.reference or next(iter(reports))
    if reference not in reports:
        raise UsageError(f"reference model {reference!r} is not among the runs")
    n_topics = {len(r.per_query) for r in reports.values()}
    print(f"# topics evaluated: {', '.join(map(str, sorted(n_topics)))}")
    print(evaluation.format_recall_table(reports))
    print(evaluation.format_map_table(reports, reference if len(reports) > 1 else None))
    if args.per_query:
        for label, report in reports.items():
            path = args.per_query if len(reports) == 1 else f"{args.per_query}.{label}"
            Path(path).write_text(evaluation.format_per_query(report), encoding="utf-8")
    return EXIT_OK


def cmd_sigtest(args, config) -> int:
    relevant = trec.relevant_sets(trec.parse_qrels(_require_path(_setting(args, config, "qrels", "qrels"), "qrels")))
    runs = _load_runs([args.run_a, *args.run_b])
    labels = list(runs)
    model_a = labels[0]
    results = {}
    for model_b in labels[1:]:
        topics = sorted(set(runs[model_a]) | set(runs[model_b]))
        rep_a = evaluation.evaluate_run(runs[model_a], relevant, depth=args.depth, topics=topics)
        rep_b = evaluation.evaluate_run(runs[model_b], relevant, depth=args.depth, topics=topics)
        aligned = evaluation.align_topics(rep_a, rep_b)
        ap_a, ap_b = rep_a.ap_by_topic(), rep_b.ap_by_topic()
        results[model_b] = evaluation.randomization_test(
            [ap_a[t] for t in aligned], [ap_b[t] for t in aligned], n_perms=args.perms, seed=args.seed)
    for model_b, res in results.items():
        print(f"{model_a} vs {model_b}: diff={res.observed_diff:.4f} N-={res.n_minus} N+={res.n_plus} "
              f"p={res.p_two_sided:.5f} ({'significant' if res.significant else 'not significant'})")
    print()
    print(evaluation.format_sigtest_table(model_a, results))
    return EXIT_OK


def cmd_info(args, config) -> int:
    index = load_index(_require_path(_setting(args, config, "index", "index"), "index"))
    print(f"documents: {index.n_docs}")
    print(f"vocabulary: {index.n_terms}")
    for key, value in sorted(index.meta.items()):
        print(f"{key}: {value}")
    if args.vocab:
        for key, t in sorted(index.vocab.items()):
            print(f"{key}\t{int(index.df[t])}")
    return EXIT_OK


def _common(p: argparse.ArgumentParser, *, strategy=True) -> None:
    p.add_argument("--config", help="YAML file with defaults (e.g. wsd.window, stopwords.path)")
    p.add_argument("--dict", help="WordNet dict directory (default: $WORDNET_DICT)")
    p.add_argument("--break-cycles", action="store_true", default=None,
                   help="drop one edge per hypernym cycle instead of failing")
    p.add_argument("--index", help="index file")
    if strategy:
        p.add_argument("--strategy", choices=STRATEGY_NAMES)
        p.add_argument("--hyper-depth", dest="hyper_depth", type=_depth, help="hypernym levels (default unlimited)")
        p.add_argument("--hypo-depth", dest="hypo_depth", type=_depth, help="hyponym levels for QE_Syn_Hypo (default 1)")
        p.add_argument("--window", type=int, help=f"WSD context window (default {DEFAULT_WINDOW})")
        p.add_argument("--pos-order", dest="pos_order", help="part-of-speech preference, e.g. n,v,a,r")
        p.add_argument("--stopwords", help="stop-word file, one word per line")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semsearch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress output on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="expand a TREC collection and write an index")
    _common(p)
    p.add_argument("--corpus", help="TREC file or directory")
    p.add_argument("--workers", type=_positive, help="expansion processes (default: all cores)")
    p.add_argument("--strict", action="store_true", help="fail on malformed records instead of skipping")
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("search", help="rank documents for one query")
    _common(p)
    p.add_argument("query", nargs="+")
    p.add_argument("--k", type=_positive, default=10)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("run", help="rank all topic titles and write a TREC run file")
    _common(p)
    p.add_argument("--topics")
    p.add_argument("--overrides", help="manual sense annotations for query tokens")
    p.add_argument("--k", type=_positive, default=evaluation.DEFAULT_DEPTH)
    p.add_argument("--output", "-o")
    p.add_argument("--tag", help="run tag (default: strategy name)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="precision/recall, F and MAP tables for run files")
    p.add_argument("runs", nargs="+")
    p.add_argument("--qrels")
    p.add_argument("--config")
    p.add_argument("--depth", type=_positive, default=evaluation.DEFAULT_DEPTH)
    p.add_argument("--reference", help="model whose improvement over the others is reported")
    p.add_argument("--per-query", dest="per_query", help="write per-topic metrics here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sigtest", help="randomization test of run A against one or more runs B")
    p.add_argument("run_a")
    p.add_argument("run_b", nargs="+")
    p.add_argument("--qrels")
    p.add_argument("--config")
    p.add_argument("--perms", type=_positive, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=_positive, default=evaluation.DEFAULT_DEPTH)
    p.set_defaults(func=cmd_sigtest)

    p = sub.add_parser("info", help="print index statistics")
    p.add_argument("--index")
    p.add_argument("--config")
    p.add_argument("--vocab", action="store_true", help="also list every term key with its df")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = read_config(getattr(args, "config", None))
        return args.func(args, config)
    except (UsageError, ConfigError) as exc:
        print(f"semsearch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SemSearchError, OSError, ValueError) as exc:
        print(f"semsearch: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
