"""Command-line surface: index, query, eval, lexicon, cache.

Configuration precedence is flag > environment > config file > default.
When no catalog path is configured, commands fall back to the bundled
desk corpus so the tool is demoable out of the box.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .catalog import TaskCatalog, load_catalog
from .config import (
    EngineConfig,
    client_from_config,
    load_config,
    provider_from_config,
    stopwords_from_config,
)
from .corpus import load_desk_catalog, load_desk_suite
from .errors import TaskFinderError
from .evaluation import evaluate_suite, format_summary, save_report, split_suite
from .lexicon import TestCase, append_case, build_lexicon, dump_lexicon, load_suite
from .retriever import TaskRetriever

USAGE_ERROR = 2


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--catalog", help="catalog TSV path (default: bundled corpus)")
    common.add_argument("--suite", help="test suite TSV path")
    common.add_argument("--cache", help="embedding cache file")
    common.add_argument("--k", type=int, dest="top_k", help="results to return")
    common.add_argument("--alpha", type=float, help="lexical weight")
    common.add_argument("--beta", type=float, help="rationale weight")
    common.add_argument("--gamma", type=float, help="embedding weight")
    common.add_argument("--delta", type=float, help="typo weight")
    common.add_argument("--w-name", type=float, dest="w_name", help="name field weight")
    common.add_argument("--w-help", type=float, dest="w_help", help="help field weight")
    common.add_argument("--shortlist-k", type=int, dest="shortlist_k", help="shortlist width")
    common.add_argument(
        "--no-rationale", action="store_true", help="disable the rationale signal (beta=0)"
    )
    common.add_argument(
        "--no-embed", action="store_true", help="disable the embedding signal (gamma=0)"
    )
    common.add_argument(
        "--no-typo", action="store_true", help="disable the typo signal (delta=0)"
    )
    common.add_argument(
        "--no-llm", action="store_true", help="stop at the pre-filter, skip re-ranking"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskfinder",
        description="Hybrid task-catalog search with rationale lexicon and LLM re-ranking",
    )
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("index", parents=[common], help="load catalog, build lexicon, warm cache")

    query = sub.add_parser("query", parents=[common], help="search the catalog")
    query.add_argument("--q", help="the query text")
    query.add_argument("--repl", action="store_true", help="read one query per line")

    ev = sub.add_parser("eval", parents=[common], help="run the offline evaluation")
    ev.add_argument("--seed", type=int, help="split shuffle seed")
    ev.add_argument("--train-fraction", type=float, dest="train_fraction")
    ev.add_argument("--report", help="report file path")

    lex = sub.add_parser("lexicon", parents=[common], help="manage the rationale lexicon")
    lex_sub = lex.add_subparsers(dest="lexicon_command", required=True)
    lex_sub.add_parser("build", parents=[common], help="print the word/task dump").add_argument(
        "--out", help="write the dump here instead of stdout"
    )
    add = lex_sub.add_parser("add", parents=[common], help="append a test case to the suite")
    add.add_argument("--query", required=True)
    add.add_argument("--gold", required=True, help="comma-separated gold task ids")
    add.add_argument("--rationale", required=True)
    inspect = lex_sub.add_parser("inspect", parents=[common], help="show tasks for a word")
    inspect.add_argument("word")

    cache = sub.add_parser("cache", parents=[common], help="embedding cache utilities")
    cache_sub = cache.add_subparsers(dest="cache_command", required=True)
    cache_sub.add_parser("warm", parents=[common], help="embed every catalog entry")
    cache_sub.add_parser("stats", parents=[common], help="show cache size and path")

    return parser


_CONFIG_FLAGS = (
    "catalog", "suite", "cache", "top_k", "alpha", "beta", "gamma", "delta",
    "w_name", "w_help", "shortlist_k", "seed", "train_fraction", "report",
)


def _resolve_config(args: argparse.Namespace) -> EngineConfig:
    overrides = {
        name: getattr(args, name)
        for name in _CONFIG_FLAGS
        if getattr(args, name, None) is not None
    }
    if getattr(args, "no_rationale", False):
        overrides["beta"] = 0.0
    if getattr(args, "no_embed", False):
        overrides["gamma"] = 0.0
    if getattr(args, "no_typo", False):
        overrides["delta"] = 0.0
    return load_config(path=args.config, overrides=overrides)


def _load_inputs(config: EngineConfig) -> tuple[TaskCatalog, list[TestCase]]:
    if config.catalog:
        catalog = load_catalog(config.catalog)
    else:
        catalog = load_desk_catalog()
    if config.suite:
        suite = load_suite(config.suite)
    elif not config.catalog:
        suite = load_desk_suite()
    else:
        suite = []
    return catalog, suite


def _fit_retriever(
    config: EngineConfig, catalog: TaskCatalog, suite: Sequence[TestCase], use_reranker: bool
) -> TaskRetriever:
    retriever = TaskRetriever(
        alpha=config.alpha,
        beta=config.beta,
        gamma=config.gamma,
        delta=config.delta,
        w_name=config.w_name,
        w_help=config.w_help,
        shortlist_k=config.shortlist_k,
        top_k=config.top_k,
        use_reranker=use_reranker,
        max_examples=config.max_examples,
        cache_path=config.cache or None,
        provider=provider_from_config(config),
        client=client_from_config(config),
        stopwords=stopwords_from_config(config),
    )
    return retriever.fit(catalog, suite)


def cmd_index(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    catalog, suite = _load_inputs(config)
    retriever = _fit_retriever(config, catalog, suite, use_reranker=False)
    print(f"{len(catalog)} tasks indexed")
    print(f"{len(retriever.lexicon_)} lexicon pairs from {len(suite)} test cases")
    print(f"{len(retriever.cache_)} cached embeddings")
    calls = getattr(retriever.provider_, "calls", None)
    if calls is not None:
        print(f"{calls} provider calls")
    return 0


def _print_result(retriever: TaskRetriever, query: str) -> None:
    result = retriever.rank(query)
    by_id = {candidate.task_id: candidate for candidate in result.shortlist}
    print(f"mode: {result.mode}")
    if result.degraded_signals:
        print(f"degraded signals: {', '.join(sorted(result.degraded_signals))}")
    for position, task_id in enumerate(result.task_ids, start=1):
        candidate = by_id[task_id]
        print(
            f"{position}. {task_id}  {candidate.task.name}"
            f"  (total={candidate.total:.3f} lex={candidate.s_lex:.3f}"
            f" rat={candidate.s_rat:.3f} emb={candidate.s_emb:.3f}"
            f" typo={candidate.s_typo:.3f})"
        )
    if not result.task_ids:
        print("no results")


def cmd_query(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if not args.repl and (args.q is None or not args.q.strip()):
        print("error: provide a non-empty --q or use --repl", file=sys.stderr)
        return USAGE_ERROR
    catalog, suite = _load_inputs(config)
    retriever = _fit_retriever(config, catalog, suite, use_reranker=not args.no_llm)
    if args.repl:
        for line in sys.stdin:
            query = line.strip()
            if not query:
                continue
            if query in ("quit", "exit"):
                break
            _print_result(retriever, query)
        return 0
    _print_result(retriever, args.q)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    catalog, suite = _load_inputs(config)
    train, test = split_suite(suite, config.train_fraction, config.seed)
    retriever = _fit_retriever(config, catalog, train, use_reranker=not args.no_llm)
    report = evaluate_suite(test, retriever)
    save_report(report, config.report)
    print(format_summary(report))
    print(f"report written to {config.report}")
    return 0


def cmd_lexicon(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    catalog, suite = _load_inputs(config)
    if args.lexicon_command == "build":
        dump = dump_lexicon(build_lexicon(suite, catalog))
        if getattr(args, "out", None):
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(dump)
            print(f"lexicon dump written to {args.out}")
        else:
            sys.stdout.write(dump)
        return 0
    if args.lexicon_command == "add":
        if not config.suite:
            print("error: lexicon add needs --suite pointing at a writable file", file=sys.stderr)
            return USAGE_ERROR
        case = TestCase(
            query=args.query,
            gold_task_ids=frozenset(g.strip() for g in args.gold.split(",") if g.strip()),
            rationale=args.rationale,
        )
        before = len(build_lexicon(suite, catalog))
        after = len(build_lexicon(list(suite) + [case], catalog))
        append_case(config.suite, case)
        print(f"case appended to {config.suite}; {after - before} new word-task pairs")
        return 0
    lexicon = build_lexicon(suite, catalog)
    tasks = lexicon.tasks_for(args.word)
    for task_id in sorted(tasks):
        print(f"{args.word}\t{task_id}\t{lexicon.source_count(args.word, task_id)}")
    if not tasks:
        print(f"no tasks associated with {args.word!r}")
    return 0


def cmd_cache(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if args.cache_command == "stats":
        if not config.cache:
            print("error: no cache path configured", file=sys.stderr)
            return USAGE_ERROR
        from .embedding import EmbeddingCache

        cache = EmbeddingCache(config.cache)
        print(f"cache {config.cache}: {len(cache)} entries")
        return 0
    if not config.cache:
        print("error: cache warm needs a cache path (--cache)", file=sys.stderr)
        return USAGE_ERROR
    catalog, suite = _load_inputs(config)
    retriever = _fit_retriever(config, catalog, suite, use_reranker=False)
    warmed = len(retriever.cache_)
    calls = getattr(retriever.provider_, "calls", "n/a")
    print(f"cache {config.cache}: {warmed} entries after warm ({calls} provider calls)")
    return 0


_COMMANDS = {
    "index": cmd_index,
    "query": cmd_query,
    "eval": cmd_eval,
    "lexicon": cmd_lexicon,
    "cache": cmd_cache,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TaskFinderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
