"""Operator entry points: one-shot ask, interactive session, classifier
training, benchmark runs, and serving the HTTP API.

Exit codes: 0 success, 1 task failure, 2 usage error.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import yaml

from . import classifier as clf
from .bench import (
    BUNDLED_EXPECTED,
    bundled_suite_dir,
    emit_report,
    load_suite,
    run_benchmark,
    validate_suite,
)
from .clock import FakeClock, SystemClock
from .corpus import load_corpus
from .errors import CodeTutorError
from .gateway import BackendConfig, RemoteBackend, ScriptedBackend
from .orchestrator import Engine, EngineConfig
from .session import CodeAnswer, ConceptAnswer, TaskStatus


def _load_config_file(path) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return yaml.safe_load(fh) or {}


def _engine_config(ctx_obj: dict) -> EngineConfig:
    cfg = EngineConfig()
    for key, value in ctx_obj.get("config_file", {}).get("engine", {}).items():
        if hasattr(cfg, key):
            setattr(cfg, key, value)
    if ctx_obj.get("max_repair_iters"):
        cfg.max_lint_iters = ctx_obj["max_repair_iters"]
        cfg.max_runtime_iters = ctx_obj["max_repair_iters"]
    return cfg


def _make_engine_factory(ctx_obj: dict, engine_cfg: EngineConfig, model=None):
    backend_kind = ctx_obj.get("backend", "scripted")
    file_cfg = ctx_obj.get("config_file", {}).get("backend", {})

    def factory() -> Engine:
        clock = FakeClock() if ctx_obj.get("fake_clock") else SystemClock()
        if backend_kind == "remote":
            bc = BackendConfig(
                kind="Remote",
                base_url=ctx_obj.get("base_url") or file_cfg.get("base_url", ""),
                model_name=ctx_obj.get("model") or file_cfg.get("model_name", ""),
            )
            backend = RemoteBackend(bc)
        else:
            script_path = ctx_obj.get("script")
            if not script_path:
                raise click.UsageError("scripted backend requires --script FILE")
            backend = ScriptedBackend.from_file(script_path)
        return Engine(backend, engine_cfg, classifier_model=model, clock=clock)

    return factory


def _load_model(path):
    if not path:
        return None
    return clf.load(path)


@click.group()
@click.option("--backend", type=click.Choice(["remote", "scripted"]), default="scripted")
@click.option("--base-url", default=None, help="Remote backend base URL.")
@click.option("--model", default=None, help="Remote backend model name.")
@click.option("--script", default=None, type=click.Path(), help="Scripted backend response file (JSON).")
@click.option("--max-repair-iters", default=None, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--classifier-model", "classifier_path", default=None, type=click.Path(exists=True),
              help="Trained classifier model file; verb heuristic when omitted.")
@click.option("--fake-clock", is_flag=True, hidden=True, help="Deterministic timestamps for tests.")
@click.pass_context
def main(ctx, backend, base_url, model, script, max_repair_iters, config_path, classifier_path, fake_clock):
    """Recursive prompt-driven assistant for multi-step programming scenarios."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        backend=backend,
        base_url=base_url,
        model=model,
        script=script,
        max_repair_iters=max_repair_iters,
        config_file=_load_config_file(config_path),
        classifier_path=classifier_path,
        fake_clock=fake_clock or bool(os.environ.get("CODETUTOR_FAKE_CLOCK")),
    )


def _print_answer(st):
    click.echo(f"[{st.kind.value}] sub-task #{st.id}: {st.status.value}")
    if isinstance(st.answer, ConceptAnswer):
        click.echo(st.answer.explanation)
        if st.answer.keywords:
            click.echo("keywords: " + ", ".join(k.surface for k in st.answer.keywords))
        for r in st.answer.related:
            click.echo(f"Q: {r.question}\nA: {r.answer}")
    elif isinstance(st.answer, CodeAnswer):
        click.echo(st.answer.code.rstrip())
        if st.answer.lint:
            click.echo(f"lint: {st.answer.lint.verdict} (revision {st.answer.revision})")
            for i, m in enumerate(st.answer.lint.messages, start=1):
                click.echo(f"  [{i}] line {m.line}, col {m.column}: {m.rule} {m.text}")
        if st.answer.run:
            click.echo(f"run: {st.answer.run.verdict}")
            if st.answer.run.stdout:
                click.echo(st.answer.run.stdout.rstrip())


@main.command()
@click.argument("question", required=True)
@click.pass_context
def ask(ctx, question):
    """Answer one question end to end and exit."""
    try:
        model = _load_model(ctx.obj.get("classifier_path"))
        engine = _make_engine_factory(ctx.obj, _engine_config(ctx.obj), model)()
        session = engine.new_session()
        st = engine.handle_subtask(session, question)
        _print_answer(st)
        sys.exit(0 if st.status == TaskStatus.COMPLETED else 1)
    except CodeTutorError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--scenario", "scenario_id", default=None, help="Seed the session from a bundled scenario id.")
@click.pass_context
def session(ctx, scenario_id):
    """Interactive loop: questions, numbered lint-message repairs, accept."""
    try:
        model = _load_model(ctx.obj.get("classifier_path"))
        engine = _make_engine_factory(ctx.obj, _engine_config(ctx.obj), model)()
        scenario = None
        if scenario_id:
            scenario = next(
                (s for s in load_suite(bundled_suite_dir()) if s.id == scenario_id), None
            )
            if scenario is None:
                raise click.UsageError(f"unknown scenario {scenario_id!r}")
            click.echo(f"scenario: {scenario.detail}")
            for i, goal in enumerate(scenario.goals, start=1):
                click.echo(f"  {i}. {goal}")
        sess = engine.new_session(scenario=scenario)
    except CodeTutorError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo("type a question; a lint message number to repair; 'accept'; 'quit'")
    while True:
        try:
            line = click.prompt(">", prompt_suffix=" ").strip()
        except (EOFError, click.Abort):
            break
        if not line:
            continue
        if line in ("quit", "exit"):
            break
        try:
            if line == "accept":
                st = engine.accept(sess)
                click.echo(f"accepted sub-task #{st.id}")
                continue
            if line.isdigit():
                st = next(
                    (t for t in reversed(sess.subtasks) if isinstance(t.answer, CodeAnswer)),
                    None,
                )
                if st is None or st.answer.lint is None or not st.answer.lint.messages:
                    click.echo("no lint messages to repair")
                    continue
                idx = int(line) - 1
                if not 0 <= idx < len(st.answer.lint.messages):
                    click.echo("no such message")
                    continue
                target = st.answer.lint.messages[idx]
                engine.repair_lint_loop(sess, st, st.answer.code, st.answer.lint, target=target)
                _print_answer(st)
                continue
            if sess.subtasks:
                st = engine.followup_buildup(sess, line)
            else:
                st = engine.handle_subtask(sess, line)
            _print_answer(st)
        except CodeTutorError as exc:
            click.echo(f"error: {exc}", err=True)
    sys.exit(0)


@main.command("train-classifier")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--epochs", default=None, type=int)
@click.option("--out", "out_path", default="classifier.bin", type=click.Path())
def train_classifier(corpus_path, seed, epochs, out_path):
    """Train the question router on a labeled corpus (text TAB label)."""
    try:
        corpus = load_corpus(corpus_path)
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(1)
    hyper = clf.Hyper()
    if epochs:
        hyper.epochs = epochs
    try:
        model, metrics = clf.train(corpus, hyper, seed=seed)
    except CodeTutorError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    clf.save(model, out_path)
    click.echo(f"trained on {len(corpus)} questions, model saved to {out_path}")
    for epoch, (loss, acc) in enumerate(
        zip(metrics["train_loss"], metrics["val_accuracy"]), start=1
    ):
        click.echo(f"epoch {epoch}: train_loss={loss:.4f} val_accuracy={acc:.4f}")
    sys.exit(0)


@main.command()
@click.option("--suite", "suite_dir", default="bundled", help="Suite directory or 'bundled'.")
@click.option("--timeout-secs", default=3600.0, type=float)
@click.option("--judge", type=click.Choice(["auto", "interactive"]), default="auto")
@click.option("--report", "report_dir", default=None, type=click.Path())
@click.pass_context
def bench(ctx, suite_dir, timeout_secs, judge, report_dir):
    """Run the scenario suite through the engine and report results."""
    try:
        path = bundled_suite_dir() if suite_dir == "bundled" else Path(suite_dir)
        suite = load_suite(path)
        if suite_dir == "bundled":
            validate_suite(suite, BUNDLED_EXPECTED)
        engine_cfg = _engine_config(ctx.obj)
        engine_cfg.subtask_timeout = timeout_secs
        model = _load_model(ctx.obj.get("classifier_path"))
        factory = _make_engine_factory(ctx.obj, engine_cfg, model)
        result = run_benchmark(
            suite,
            factory,
            judge="Interactive" if judge == "interactive" else "AutoAcceptOnPass",
        )
        click.echo(emit_report(result, "TextTable"))
        if report_dir:
            from .report import write_report_files

            paths = write_report_files(result, report_dir)
            click.echo(f"report files written under {report_dir}")
        incomplete = sum(1 for r in result.per_subtask if r.outcome != "Completed")
        sys.exit(0 if incomplete == 0 else 1)
    except CodeTutorError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--bind", default="127.0.0.1:8731")
@click.pass_context
def serve(ctx, bind):
    """Serve the HTTP API consumed by the web UI."""
    from .api import serve as api_serve

    model = _load_model(ctx.obj.get("classifier_path"))
    factory = _make_engine_factory(ctx.obj, _engine_config(ctx.obj), model)
    try:
        api_serve(bind, factory)
    except OSError as exc:
        click.echo(f"bind failure: {exc}", err=True)
        sys.exit(1)
    sys.exit(0)


if __name__ == "__main__":
    main()
