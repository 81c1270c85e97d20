"""Command-line entry point.

Subcommands:
  run         full benchmark (retrieval, judgment, exploration) over a dataset
  judge-only  retrieval plus the sufficiency judgment, no exploration
  coverage    retrieval-only answer coverage at several K values
  fixtures    write the offline demo (graph, dataset, scripted mock LLM)

Backends are picked by prefixed flags: ``--kg file:PATH`` or
``--kg sparql:URL``, ``--scorer lexical`` or ``--scorer remote:URL``,
``--llm mock:SCRIPT`` or ``--llm http:URL``.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Any

from . import __version__
from .bench import run_benchmark, run_coverage
from .dataset import load_dataset
from .errors import KgqaError
from .fixtures import write_demo
from .kg import load_triples
from .llm import HttpChatBackend, LlmGateway, MockLlm
from .pipeline import Pipeline, PipelineConfig
from .relevance import LexicalScorer, RemoteScorer
from .retrieval import RetrievalConfig
from .sparql import SparqlGraph


def _add_retrieval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beam-width", type=int, default=10, help="beam width for relation-path search")
    p.add_argument("--max-hops", type=int, default=2, help="relation-path length bound (2 suits WebQSP-style data, 4 CWQ-style)")
    p.add_argument("--num-relation-paths", type=int, default=10, help="relation paths kept per topic")
    p.add_argument("--instantiation-cap", type=int, default=20, help="grounded walks kept per relation path")
    p.add_argument("-K", "--top-k", type=int, default=10, help="reasoning paths handed to the judge")
    p.add_argument("-N", "--top-n", type=int, default=30, help="relations kept by the retriever filter during exploration")


def _add_backend_flags(p: argparse.ArgumentParser, with_llm: bool = True) -> None:
    p.add_argument("--dataset", required=True, help="JSONL dataset path")
    p.add_argument("--kg", required=True, help="file:TRIPLES.tsv or sparql:URL")
    p.add_argument("--kg-labels", default=None, help="optional id->label TSV for display names")
    p.add_argument("--scorer", default="lexical", help="lexical or remote:URL")
    if with_llm:
        p.add_argument("--llm", required=True, help="mock:SCRIPT.json or http:URL")
        p.add_argument("--model", default="gpt-4o-mini", help="model name for the http backend")
        p.add_argument("--api-key-env", default="LLM_API_KEY", help="environment variable holding the API key")
        p.add_argument("--temperature", type=float, default=0.3)
        p.add_argument("--max-retries", type=int, default=3, help="transport retries per LLM call")
        p.add_argument("--real-clock", action="store_true",
                       help="measure real wall time (default for http; mock runs default to deterministic latency sums)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest; the engine itself is deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgqa", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"kgqa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="full pipeline benchmark")
    _add_backend_flags(run_p)
    _add_retrieval_flags(run_p)
    run_p.add_argument("--d-max", type=int, default=2, help="maximum exploration rounds")
    run_p.add_argument("--entity-filter-top", type=int, default=20, help="entity pre-filter size")
    run_p.add_argument("--call-budget", type=int, default=40, help="hard LLM attempt cap per question")
    run_p.add_argument("--sep-token", default="[SEP]", help="separator token in ranker inputs")
    run_p.add_argument("--concurrency", type=int, default=4, help="questions in flight")

    judge_p = sub.add_parser("judge-only", help="retrieval + judgment, no exploration")
    _add_backend_flags(judge_p)
    _add_retrieval_flags(judge_p)
    judge_p.add_argument("--call-budget", type=int, default=40)
    judge_p.add_argument("--concurrency", type=int, default=4)

    cov_p = sub.add_parser("coverage", help="retrieval-only answer coverage")
    _add_backend_flags(cov_p, with_llm=False)
    _add_retrieval_flags(cov_p)
    cov_p.add_argument("--k-values", default="1,2,5,10",
                       help="comma-separated K values for coverage")

    fix_p = sub.add_parser("fixtures", help="write the offline demo files")
    fix_p.add_argument("--out", required=True, help="output directory")
    return parser


def _validate(args: argparse.Namespace) -> list[str]:
    errors: list[str] = []
    if not Path(args.dataset).is_file():
        errors.append(f"dataset not found: {args.dataset}")
    if ":" not in args.kg and args.kg != "":
        errors.append("--kg must be file:PATH or sparql:URL")
    else:
        scheme, _, value = args.kg.partition(":")
        if scheme == "file":
            if not Path(value).is_file():
                errors.append(f"triple file not found: {value}")
        elif scheme != "sparql":
            errors.append(f"unknown kg backend: {scheme!r}")
    if args.kg_labels and not Path(args.kg_labels).is_file():
        errors.append(f"label file not found: {args.kg_labels}")
    if args.scorer != "lexical":
        scheme, _, _ = args.scorer.partition(":")
        if scheme != "remote":
            errors.append(f"unknown scorer backend: {args.scorer!r}")
    if hasattr(args, "llm"):
        scheme, _, value = args.llm.partition(":")
        if scheme == "mock":
            if not Path(value).is_file():
                errors.append(f"mock script not found: {value}")
        elif scheme != "http":
            errors.append(f"unknown llm backend: {scheme!r}")
        if not 0.0 <= args.temperature <= 2.0:
            errors.append("temperature must be in [0, 2]")
    for name in ("beam_width", "max_hops", "num_relation_paths", "instantiation_cap",
                 "top_k", "top_n"):
        if getattr(args, name, 1) < 1:
            errors.append(f"--{name.replace('_', '-')} must be a positive integer")
    for name in ("d_max", "entity_filter_top", "call_budget", "concurrency"):
        if getattr(args, name, 1) < 1:
            errors.append(f"--{name.replace('_', '-')} must be a positive integer")
    if hasattr(args, "k_values"):
        try:
            ks = [int(k) for k in args.k_values.split(",") if k.strip()]
            if not ks or any(k < 1 for k in ks):
                raise ValueError
        except ValueError:
            errors.append("--k-values must be comma-separated positive integers")
    return errors


def _build_graph(args: argparse.Namespace):
    scheme, _, value = args.kg.partition(":")
    if scheme == "file":
        return load_triples(value, args.kg_labels)
    return SparqlGraph(value, label_path=args.kg_labels)


def _build_scorer(args: argparse.Namespace):
    if args.scorer == "lexical":
        return LexicalScorer()
    _, _, url = args.scorer.partition(":")
    return RemoteScorer(url)


def _build_gateway(args: argparse.Namespace) -> tuple[LlmGateway, bool]:
    """Returns the gateway and whether runs should use the real clock."""
    scheme, _, value = args.llm.partition(":")
    if scheme == "mock":
        backend = MockLlm.from_script(value)
        real_clock = args.real_clock
    else:
        backend = HttpChatBackend(value, model=args.model, api_key_env=args.api_key_env)
        real_clock = True
    gateway = LlmGateway(backend, temperature=args.temperature,
                         max_retries=args.max_retries)
    return gateway, real_clock


def _retrieval_config(args: argparse.Namespace) -> RetrievalConfig:
    return RetrievalConfig(
        beam_width=args.beam_width,
        max_hops=args.max_hops,
        num_relation_paths=args.num_relation_paths,
        instantiation_cap=args.instantiation_cap,
        top_k_paths=args.top_k,
        top_n_relations=args.top_n,
    )


def _manifest(args: argparse.Namespace) -> dict[str, Any]:
    # the output directory does not affect results, so it stays out of the
    # manifest and reruns into different directories stay byte-identical
    skip = {"command", "out"}
    manifest = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    manifest["version"] = __version__
    manifest["answer_normalization"] = (
        "case-fold, trim, collapse whitespace, strip surrounding punctuation"
    )
    return manifest


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "fixtures":
        written = write_demo(args.out)
        for name, path in sorted(written.items()):
            print(f"wrote {path}")
        print(
            "\nTry:\n  kgqa run"
            f" --dataset {written['viking_dataset.jsonl']}"
            f" --kg file:{written['viking_graph.tsv']}"
            f" --kg-labels {written['viking_labels.tsv']}"
            f" --scorer lexical --llm mock:{written['viking_mock.json']}"
            f" --out {Path(args.out) / 'report'}"
        )
        return 0

    errors = _validate(args)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return 2

    try:
        records = load_dataset(args.dataset)
        graph = _build_graph(args)
        scorer = _build_scorer(args)

        if args.command == "coverage":
            pipeline = Pipeline(
                graph, scorer, LlmGateway(MockLlm()),
                config=PipelineConfig(retrieval=_retrieval_config(args)),
            )
            k_values = [int(k) for k in args.k_values.split(",") if k.strip()]
            payload = run_coverage(records, pipeline, k_values, args.out, _manifest(args))
            for k in k_values:
                print(f"coverage@{k}: {payload['coverage'][str(k)]:.3f}")
            return 0

        gateway, real_clock = _build_gateway(args)
        config = PipelineConfig(
            retrieval=_retrieval_config(args),
            max_rounds=getattr(args, "d_max", 2),
            entity_filter_top=getattr(args, "entity_filter_top", 20),
            call_budget=args.call_budget,
            sep_token=getattr(args, "sep_token", "[SEP]"),
        )
        pipeline = Pipeline(
            graph, scorer, gateway, config=config,
            clock=time.perf_counter if real_clock else None,
        )
        report = run_benchmark(
            records,
            pipeline,
            out_dir=args.out,
            concurrency=args.concurrency,
            config_manifest=_manifest(args),
            judge_only=args.command == "judge-only",
        )
        print((Path(args.out) / "summary.txt").read_text(encoding="utf-8"), end="")
        return 1 if report.any_failed else 0
    except KgqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
