"""Operator CLI: ingest, augment, serve, stats, validate.

Exit codes: 0 success, 1 runtime failure, 2 usage error. `--output json`
emits schema-stable JSON; the default human output is free-form.
"""

from __future__ import annotations

import datetime as _dt
import json
import sys
from pathlib import Path

import click

from .bundle import AssembleConfig, assemble_bundle
from .config import ConfigError, Settings, build_providers, load_settings
from .document import parse_document
from .errors import MedReaderError, SchemaValidationError
from .lexicon import Lexicon, load_lexicon
from .questions import load_questions
from .schemas import validate_bundle_dict
from .store import BundleStore
from .telemetry import SessionLog, compute_stats


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _settings(ctx_params: dict) -> Settings:
    try:
        return load_settings(
            config_file=ctx_params.get("config"),
            store=ctx_params.get("store"),
            port=ctx_params.get("port"),
            provider=ctx_params.get("provider"),
            qa_url=ctx_params.get("qa_url"),
            gen_url=ctx_params.get("gen_url"),
            gen_cache=ctx_params.get("gen_cache"),
            lexicon=ctx_params.get("lexicon"),
            questions=ctx_params.get("questions"),
            frontend_dir=ctx_params.get("frontend_dir"),
        )
    except ConfigError as exc:
        _fail(str(exc))


def _common_options(fn):
    fn = click.option("--store", type=click.Path(), default=None, help="Store directory.")(fn)
    fn = click.option("--config", type=click.Path(exists=True), default=None, help="JSON config file.")(fn)
    return fn


@click.group()
def main():
    """Augment medical research papers and serve them to the reader."""


@main.command()
@click.argument("document", type=click.Path(exists=True))
@_common_options
@click.option("--output", type=click.Choice(["human", "json"]), default="human")
def ingest(document, store, config, output):
    """Parse and store an interchange document; print its id."""
    settings = _settings(locals())
    try:
        paper = parse_document(Path(document).read_bytes())
    except MedReaderError as exc:
        _fail(str(exc))
    bundle_store = BundleStore(settings.store)
    paper_id = bundle_store.save_document(paper, created_at=_now())
    if output == "json":
        click.echo(json.dumps({"id": paper_id, "title": paper.title}))
    else:
        click.echo(f"ingested {paper.title!r} as {paper_id}")


@main.command()
@click.argument("paper_id")
@_common_options
@click.option("--provider", type=click.Choice(["external", "baseline", "stub"]), default=None)
@click.option("--lexicon", type=click.Path(exists=True), default=None, help="Lexicon TSV.")
@click.option("--questions", type=click.Path(exists=True), default=None, help="Question config JSON.")
@click.option("--qa-url", default=None, help="External QA provider endpoint.")
@click.option("--gen-url", default=None, help="External generation provider endpoint.")
@click.option("--gen-cache", type=click.Path(), default=None, help="Generation cache directory.")
@click.option("--workers", type=int, default=1, help="Parallel gist workers.")
@click.option("--output", type=click.Choice(["human", "json"]), default="human")
def augment(paper_id, store, config, provider, lexicon, questions, qa_url, gen_url, gen_cache, workers, output):
    """Assemble and store the augmentation bundle for an ingested paper."""
    settings = _settings(locals())
    bundle_store = BundleStore(settings.store)
    try:
        paper = bundle_store.load_document(paper_id)
        lex = (
            load_lexicon(Path(settings.lexicon).read_bytes())
            if settings.lexicon
            else Lexicon(entries={})
        )
        question_list = (
            load_questions(Path(settings.questions).read_bytes())
            if settings.questions
            else load_questions()
        )
        answers, generation, fallback = build_providers(settings)
        bundle = assemble_bundle(
            paper,
            lex,
            question_list,
            answers,
            generation,
            AssembleConfig(
                max_workers=workers,
                fallback_provider=fallback,
                created_at=_now(),
            ),
        )
        bundle_store.save_bundle(bundle)
    except MedReaderError as exc:
        _fail(str(exc))

    degraded = sum(g.degraded for g in bundle.section_gists) + sum(
        g.degraded for qa in bundle.questions for g in qa.gists if g is not None
    )
    summary = {
        "id": paper_id,
        "terms": len(bundle.terms),
        "section_gists": len(bundle.section_gists),
        "skipped_sections": len(bundle.meta.section_skips),
        "questions": len(bundle.questions),
        "passages": sum(len(qa.passages) for qa in bundle.questions),
        "degraded_gists": degraded,
    }
    if output == "json":
        click.echo(json.dumps(summary))
    else:
        click.echo(f"augmented {paper_id}")
        click.echo(f"  term occurrences : {summary['terms']}")
        click.echo(f"  section gists    : {summary['section_gists']} ({summary['skipped_sections']} skipped)")
        click.echo(f"  questions        : {summary['questions']}")
        for qa in bundle.questions:
            click.echo(f"    [{qa.question.source}] {qa.question.text} -> {len(qa.passages)} passage(s)")
        click.echo(f"  answer passages  : {summary['passages']}")
        click.echo(f"  degraded gists   : {summary['degraded_gists']}")


@main.command()
@_common_options
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.option("--provider", type=click.Choice(["external", "baseline", "stub"]), default=None)
@click.option("--lexicon", type=click.Path(exists=True), default=None)
@click.option("--questions", type=click.Path(exists=True), default=None)
@click.option("--qa-url", default=None)
@click.option("--gen-url", default=None)
@click.option("--gen-cache", type=click.Path(), default=None)
@click.option("--frontend-dir", type=click.Path(), default=None, help="Static reader UI directory to mount at /app.")
def serve(store, config, port, host, provider, lexicon, questions, qa_url, gen_url, gen_cache, frontend_dir):
    """Run the bundle/telemetry HTTP service."""
    settings = _settings(locals())
    if host:
        settings.host = host
    from .service import serve as run_service

    try:
        run_service(settings)
    except MedReaderError as exc:
        _fail(str(exc))


@main.command()
@click.argument("session_id")
@_common_options
@click.option("--output", type=click.Choice(["human", "json"]), default="human")
def stats(session_id, store, config, output):
    """Print usage statistics for a recorded session."""
    settings = _settings(locals())
    bundle_store = BundleStore(settings.store)
    log = SessionLog(bundle_store.session_log_path(session_id))
    session = compute_stats(session_id, log.events())
    if output == "json":
        click.echo(json.dumps(session.to_dict(), sort_keys=True))
        return
    click.echo(f"session {session_id}: {session.event_count} events")
    for kind, count in sorted(session.total_counts.items()):
        click.echo(f"  {kind:22s} {count}")
    click.echo("  per-minute:")
    for minute in sorted(session.per_minute_counts):
        counts = session.per_minute_counts[minute]
        line = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
        click.echo(f"    minute {minute}: {line}")
    click.echo(
        f"  dwell: {session.stay_count} stays, "
        f"mean {session.dwell_mean_seconds:.3f}s, "
        f"stdev {session.dwell_stdev_seconds:.3f}s"
    )


@main.command()
@click.argument("bundle_file", type=click.Path(exists=True))
def validate(bundle_file):
    """Schema-check a bundle file; nonzero exit with the field path on failure."""
    try:
        data = json.loads(Path(bundle_file).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        _fail(f"not valid JSON: {exc}")
    try:
        validate_bundle_dict(data)
    except SchemaValidationError as exc:
        click.echo(f"invalid: {exc.json_path}: {exc}", err=True)
        sys.exit(1)
    click.echo("valid")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


if __name__ == "__main__":
    main()
