"""Command-line front door: narrate plans, ask one-shot questions, serve.

Exit codes: 0 success, 1 usage error, 2 input error (bad plan file or SQL),
3 environment error (database connection, TTS). stdout carries only the
payload; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import pickle
import sys
from pathlib import Path
from typing import Optional

from .answer_generator import PlanContext, dispatch
from .definition_index import build_index, load_corpus, normalize_text, search
from .errors import (
    AmbiguousStepReference,
    ConnectionFailure,
    FeatureDisabled,
    NeuronError,
    NoDefinitionFound,
    NoRuntimeStats,
    NoStepReference,
    TTSUnavailable,
    UnknownStep,
)
from .plan_ingest import PlanSource, connect, fetch_plan, parse_explain_json
from .question_processor import (
    QuestionCategory,
    load_training,
    stratified_cv_accuracy,
    train_classifier,
)
from .service import (
    DEFAULT_PORT,
    narration_payload,
    plan_content_id,
    serialize_json,
)

# QA submodule failures are answers in prose, not command failures.
_PROSE_ERRORS = (
    NoStepReference,
    AmbiguousStepReference,
    NoDefinitionFound,
    UnknownStep,
    NoRuntimeStats,
)

_ENVIRONMENT_ERRORS = (ConnectionFailure, TTSUnavailable, FeatureDisabled)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="neuron", description="Narrate PostgreSQL execution plans.")
    sub = parser.add_subparsers(dest="command")

    narrate = sub.add_parser("narrate", help="turn a plan into numbered steps")
    narrate.add_argument("--file", help="EXPLAIN (FORMAT JSON) file to read")
    narrate.add_argument("--dsn", help="PostgreSQL DSN to run the query against")
    narrate.add_argument("--sql", help="SQL text to explain (with --dsn)")
    narrate.add_argument(
        "--no-analyze",
        action="store_true",
        help="plain EXPLAIN instead of EXPLAIN ANALYZE",
    )
    narrate.add_argument(
        "--json",
        action="store_true",
        help="print the service narrate response body instead of plain text",
    )

    ask = sub.add_parser("ask", help="answer one question about a plan")
    ask.add_argument("--file", help="EXPLAIN (FORMAT JSON) file to read")
    ask.add_argument("--dsn", help="PostgreSQL DSN to run the query against")
    ask.add_argument("--sql", help="SQL text to explain (with --dsn)")
    ask.add_argument("--no-analyze", action="store_true")
    ask.add_argument(
        "--model-cache",
        help="directory holding a pickled classifier/index to skip retraining",
    )
    ask.add_argument("question", help="the question to answer")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--port", type=int, default=DEFAULT_PORT)

    corpus = sub.add_parser("corpus", help="corpus maintenance")
    corpus_sub = corpus.add_subparsers(dest="corpus_command")
    corpus_sub.add_parser("validate", help="check corpus and training file invariants")

    return parser


def _read_plan(args) -> "PlanContext":
    if args.file and args.dsn:
        raise UsageError("give either --file or --dsn, not both")
    if args.file:
        text = Path(args.file).read_text(encoding="utf-8")
        raw = parse_explain_json(text, source=PlanSource.FILE)
    elif args.dsn:
        if not args.sql:
            raise UsageError("--dsn needs --sql")
        conn = connect(args.dsn)
        try:
            raw = fetch_plan(conn, args.sql, analyze=not args.no_analyze)
        finally:
            try:
                conn.close()
            except Exception:
                pass
    else:
        raise UsageError("give --file or --dsn/--sql")
    return PlanContext.from_raw(raw)


def _cmd_narrate(args) -> int:
    ctx = _read_plan(args)
    if args.json:
        plan_id = plan_content_id(ctx.raw.plan_text)
        sys.stdout.buffer.write(serialize_json(narration_payload(plan_id, ctx)))
        sys.stdout.buffer.flush()
        return 0
    for step in ctx.script.steps:
        print(f"{step.step_id}. {step.text}")
    return 0


def _load_qa_parts(cache_dir: Optional[str]):
    if cache_dir:
        cache = Path(cache_dir) / "qa_model.pickle"
        if cache.is_file():
            with cache.open("rb") as fh:
                return pickle.load(fh)
    model = train_classifier(load_training())
    index = build_index(load_corpus())
    if cache_dir:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        with (Path(cache_dir) / "qa_model.pickle").open("wb") as fh:
            pickle.dump((model, index), fh)
    return model, index


def _cmd_ask(args) -> int:
    ctx = _read_plan(args)
    model, index = _load_qa_parts(args.model_cache)
    try:
        answer = dispatch(args.question, ctx, model, index)
    except _PROSE_ERRORS as exc:
        print(str(exc))
        return 0
    print(answer.text)
    return 0


def _cmd_serve(args) -> int:
    from .service import run_server

    run_server(port=args.port)
    return 0


def _cmd_corpus_validate(args) -> int:
    corpus = load_corpus()
    index = build_index(corpus)
    failures = []
    for doc in corpus:
        ranked = search(index, normalize_text(doc.term))
        if not ranked:
            failures.append(f"{doc.term!r}: no hits for its own term")
            continue
        top_score = ranked[0][1]
        top_ids = [doc_id for doc_id, score in ranked if score == top_score]
        if doc.doc_id not in top_ids:
            failures.append(f"{doc.term!r}: not ranked first for its own term")
    training = load_training()
    counts = {cat: 0 for cat in QuestionCategory}
    for _question, category in training.examples:
        counts[category] += 1
    for category, count in counts.items():
        if count == 0:
            failures.append(f"training file has no {category.value} questions")
    accuracy = stratified_cv_accuracy(training)
    if accuracy < 0.85:
        failures.append(f"cross-validation accuracy {accuracy:.3f} below 0.85")
    if failures:
        for line in failures:
            print(f"corpus validate: {line}", file=sys.stderr)
        return 2
    print(
        f"corpus ok: {len(corpus)} definitions, {len(training.examples)} "
        f"training questions, cv accuracy {accuracy:.3f}"
    )
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.command == "corpus" and args.corpus_command != "validate":
            raise UsageError("usage: neuron corpus validate")
    except UsageError as exc:
        print(f"neuron: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "narrate":
            return _cmd_narrate(args)
        if args.command == "ask":
            return _cmd_ask(args)
        if args.command == "serve":
            return _cmd_serve(args)
        return _cmd_corpus_validate(args)
    except UsageError as exc:
        print(f"neuron: {exc}", file=sys.stderr)
        return 1
    except _ENVIRONMENT_ERRORS as exc:
        print(f"neuron: {exc}", file=sys.stderr)
        return 3
    except NeuronError as exc:
        print(f"neuron: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"neuron: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
