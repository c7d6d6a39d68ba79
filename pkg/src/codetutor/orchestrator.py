"""End-to-end engine: route a sub-task, run the concept or coding flow,
repair failures through bounded buildup loops, and chain follow-ups on the
previous final code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import verifier
from .clock import SystemClock
from .errors import (
    BusySessionError,
    ConfigError,
    EmptyTextError,
    LoopExhaustedError,
    NoPriorCodeError,
    ParseFailure,
    UnknownKeywordError,
)
from .gateway import with_retry
from .prompts import PromptConfig, RenderedPrompt, TemplateCatalog, parse_reply
from .session import (
    CodeAnswer,
    ConceptAnswer,
    EventKind,
    Keyword,
    LintReport,
    RelatedQA,
    RunReport,
    Session,
    SubTask,
    TaskKind,
    TaskStatus,
    add_subtask,
    finish_subtask,
    log_event,
    new_session,
    set_status,
)


@dataclass
class EngineConfig:
    max_lint_iters: int = 8
    max_runtime_iters: int = 8
    subtask_timeout: float = 3600.0
    auto_accept_on_pass: bool = True
    context_depth: int = 1
    run_code: bool = True
    auto_repair_runtime: bool = True
    max_retries: int = 2

    def validate(self) -> None:
        if self.max_lint_iters < 1 or self.max_runtime_iters < 1:
            raise ConfigError("iteration limits must be >= 1")
        if self.subtask_timeout <= 0:
            raise ConfigError("subtask_timeout must be positive")
        if self.context_depth < 0:
            raise ConfigError("context_depth must be >= 0")


@dataclass
class RepairIteration:
    trigger: str  # "Lint" | "Runtime" | "UserRequest"
    q_buildup: str
    code_before: str
    code_after: str
    report_after: dict
    no_progress: bool = False


@dataclass
class RepairTrace:
    iterations: list[RepairIteration] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.iterations)


_CODE_VERBS = re.compile(
    r"^\s*(implement|write|build|solve|apply|use|code|create|develop|program|fix|extend|add|retrieve)\b",
    re.IGNORECASE,
)


def heuristic_classify(text: str) -> TaskKind:
    """Verb-pattern fallback router used when no trained model is supplied."""
    if not text.strip():
        raise EmptyTextError("cannot classify empty text")
    return TaskKind.CODE if _CODE_VERBS.match(text) else TaskKind.CONCEPT


@dataclass
class _FlowContext:
    lint_iters: int = 0
    runtime_iters: int = 0
    trace: RepairTrace = field(default_factory=RepairTrace)


class Engine:
    """Drives one session at a time against a completion backend."""

    def __init__(
        self,
        backend,
        config: Optional[EngineConfig] = None,
        classifier_model=None,
        catalog: Optional[TemplateCatalog] = None,
        verifier_config: Optional[verifier.VerifierConfig] = None,
        prompt_config: Optional[PromptConfig] = None,
        clock=None,
    ):
        self.backend = backend
        self.config = config or EngineConfig()
        self.config.validate()
        self.classifier_model = classifier_model
        self.catalog = catalog or TemplateCatalog.load(prompt_config)
        self.verifier_config = verifier_config or verifier.VerifierConfig()
        self.clock = clock or SystemClock()

    # -- helpers -----------------------------------------------------------

    def _ts(self) -> int:
        return int(self.clock.now() * 1000)

    def new_session(self, scenario=None) -> Session:
        return new_session(scenario=scenario, config=self.config)

    def classify(self, text: str) -> TaskKind:
        if self.classifier_model is not None:
            from .classifier import classify
            return classify(self.classifier_model, text)
        return heuristic_classify(text)

    def _complete(self, session: Session, prompt: RenderedPrompt, purpose: str) -> str:
        log_event(
            session,
            EventKind.PROMPT_SENT,
            {"purpose": purpose, "messages": [{"role": r, "content": c} for r, c in prompt.messages]},
            self._ts(),
        )
        result = with_retry(self.backend, prompt, max_retries=self.config.max_retries)
        log_event(
            session,
            EventKind.RESPONSE_RECEIVED,
            {"purpose": purpose, "content": result.text, "attempts": result.attempts},
            self._ts(),
        )
        return result.text

    def _ask_parsed(self, session: Session, prompt: RenderedPrompt, expected: str, purpose: str):
        """One completion, with a single re-ask on parse failure."""
        raw = self._complete(session, prompt, purpose)
        style = self.catalog.config.delimiter_style
        try:
            return parse_reply(raw, expected, style)
        except ParseFailure:
            raw = self._complete(session, prompt, purpose + "-reask")
            return parse_reply(raw, expected, style)

    def _lint(self, session: Session, code: str) -> LintReport:
        report, _ = verifier.verify_code(code, self.verifier_config, do_run=False)
        log_event(
            session,
            EventKind.LINT_RUN,
            {"verdict": report.verdict, "message_count": len(report.messages)},
            self._ts(),
        )
        return report

    def _run(self, session: Session, code: str) -> RunReport:
        ws = verifier.write_workspace(code, self.verifier_config)
        try:
            report = verifier.run(ws, self.verifier_config)
        finally:
            ws.cleanup()
        log_event(
            session,
            EventKind.CODE_RUN,
            {"verdict": report.verdict, "err_summary": report.err_summary},
            self._ts(),
        )
        return report

    # -- public operations -------------------------------------------------

    def handle_subtask(
        self,
        session: Session,
        question: str,
        force_buildup: bool = False,
        chain_on_prior: bool = True,
    ) -> SubTask:
        """Append a sub-task, route it, run its flow, stamp the outcome."""
        if session.in_progress() is not None:
            raise BusySessionError("a sub-task is already in progress")
        if not question.strip():
            raise EmptyTextError("question must be non-empty")
        st = add_subtask(session, question, self._ts())
        kind = self.classify(question)
        if force_buildup:
            kind = TaskKind.CODE
        st.kind = kind
        log_event(
            session,
            EventKind.CLASSIFIED,
            {"subtask_id": st.id, "kind": kind.value},
            self._ts(),
        )
        set_status(session, st.id, TaskStatus.IN_PROGRESS)

        prior_code = self._latest_final_code(session, exclude=st.id)
        if force_buildup and prior_code is None:
            finish_subtask(session, st.id, TaskStatus.FAILED, 0.0, self._ts())
            raise NoPriorCodeError("buildup forced without a completed code sub-task")

        t0 = self.clock.now()
        failed = False
        try:
            if kind == TaskKind.CONCEPT:
                self.concept_flow(session, st)
            else:
                seed = None
                if chain_on_prior and prior_code is not None:
                    seed = self.catalog.render_buildup_chain(question, prior_code)
                self.code_flow(session, st, seed_prompt=seed)
        except (ParseFailure, LoopExhaustedError) as exc:
            failed = True
            log_event(
                session,
                EventKind.REPAIR_REQUESTED,
                {"subtask_id": st.id, "trigger": "FlowError", "error": str(exc)},
                self._ts(),
            )
        elapsed = self.clock.now() - t0
        if elapsed > self.config.subtask_timeout:
            finish_subtask(session, st.id, TaskStatus.TIMED_OUT, elapsed, self._ts())
        elif failed:
            finish_subtask(session, st.id, TaskStatus.FAILED, elapsed, self._ts())
        elif self.config.auto_accept_on_pass:
            finish_subtask(session, st.id, TaskStatus.COMPLETED, elapsed, self._ts())
        else:
            st.elapsed = elapsed  # stays InProgress until accept()
        return st

    def accept(self, session: Session) -> SubTask:
        """Explicit user acceptance of the in-progress sub-task's answer."""
        st = session.in_progress()
        if st is None:
            raise BusySessionError("no sub-task awaiting acceptance")
        finish_subtask(session, st.id, TaskStatus.COMPLETED, st.elapsed, self._ts())
        return st

    def concept_flow(self, session: Session, st: SubTask) -> ConceptAnswer:
        prompt = self.catalog.render_concept(st.text)
        reply = self._ask_parsed(session, prompt, "ConceptSections", "concept")
        explanation = reply.sections["explanation"]
        low = explanation.lower()
        keywords = [
            Keyword(surface=k) for k in reply.sections["keywords"] if k.lower() in low
        ]
        related = [
            RelatedQA(question=p["question"], answer=p["answer"])
            for p in reply.sections["related"][: self.catalog.config.max_related]
        ]
        answer = ConceptAnswer(explanation=explanation, keywords=keywords, related=related)
        st.answer = answer
        return answer

    def define_keyword(self, session: Session, task_id: int, surface: str) -> Keyword:
        st = session.subtask(task_id)
        if not isinstance(st.answer, ConceptAnswer):
            raise UnknownKeywordError("sub-task has no concept answer")
        match = next(
            (k for k in st.answer.keywords if k.surface.lower() == surface.lower()), None
        )
        if match is None:
            raise UnknownKeywordError(f"keyword {surface!r} not in the stored set")
        prompt = self.catalog.render_keyword_define(match, st.answer.explanation)
        reply = self._ask_parsed(session, prompt, "DefinitionOnly", "keyword-define")
        match.definition = reply.sections["definition"]
        log_event(
            session,
            EventKind.KEYWORD_DEFINED,
            {"subtask_id": task_id, "surface": match.surface, "definition": match.definition},
            self._ts(),
        )
        return match

    def code_flow(
        self, session: Session, st: SubTask, seed_prompt: Optional[RenderedPrompt] = None
    ) -> CodeAnswer:
        ctx = _FlowContext()
        if seed_prompt is not None:
            reply = self._ask_parsed(session, seed_prompt, "CodeOnly", "buildup-chain")
            related = []
        else:
            prompt = self.catalog.render_code(st.text)
            reply = self._ask_parsed(session, prompt, "CodeSections", "code")
            related = [
                RelatedQA(question=p["question"], answer=p["answer"])
                for p in reply.sections.get("related", [])[: self.catalog.config.max_related]
            ]
        code = reply.sections["code"]
        answer = CodeAnswer(code=code, related=related, revision=0)
        answer.trace = ctx.trace
        st.answer = answer

        report = self._lint(session, code)
        if report.verdict == "Fail":
            code, report = self.repair_lint_loop(session, st, code, report, ctx)
        answer.code = code
        answer.lint = report
        answer.revision = len(ctx.trace)

        if self.config.run_code:
            run_report = self._run(session, code)
            answer.run = run_report
            if (
                run_report.verdict == "RuntimeError"
                and self.config.auto_repair_runtime
            ):
                self.repair_runtime(session, st, run_report.err_summary, "Fix", ctx)
        return st.answer

    def repair_lint_loop(
        self,
        session: Session,
        st: SubTask,
        code: str,
        report: LintReport,
        ctx: Optional[_FlowContext] = None,
        target=None,
    ):
        """Iterate buildup-lint prompts until the code passes or budget ends."""
        ctx = ctx or _FlowContext()
        no_progress = False
        while report.verdict == "Fail":
            if ctx.lint_iters >= self.config.max_lint_iters:
                raise LoopExhaustedError(
                    f"lint repair budget ({self.config.max_lint_iters}) exhausted",
                    trace=ctx.trace,
                    no_progress=no_progress,
                )
            message = target if target is not None else report.messages[0]
            target = None  # user-selected message applies to the first pass only
            prompt = self.catalog.render_buildup_lint(message, code)
            log_event(
                session,
                EventKind.REPAIR_REQUESTED,
                {
                    "subtask_id": st.id,
                    "trigger": "Lint",
                    "rule": message.rule,
                    "line": message.line,
                    "text": message.text,
                },
                self._ts(),
            )
            reply = self._ask_parsed(session, prompt, "CodeOnly", "buildup-lint")
            new_code = reply.sections["code"]
            no_progress = new_code == code
            ctx.lint_iters += 1
            new_report = self._lint(session, new_code)
            ctx.trace.iterations.append(
                RepairIteration(
                    trigger="Lint",
                    q_buildup=prompt.user_content,
                    code_before=code,
                    code_after=new_code,
                    report_after={
                        "lint": new_report.verdict,
                        "messages": len(new_report.messages),
                    },
                    no_progress=no_progress,
                )
            )
            code, report = new_code, new_report
            if isinstance(st.answer, CodeAnswer):
                st.answer.code = code
                st.answer.lint = report
                st.answer.revision = len(ctx.trace)
        return code, report

    def repair_runtime(
        self, session: Session, st: SubTask, err_or_req: str, mode: str,
        ctx: Optional[_FlowContext] = None,
    ):
        """Fix-or-extend loop over lint-passing code; Fix requires run Ok."""
        if not isinstance(st.answer, CodeAnswer) or st.answer.lint is None:
            raise NoPriorCodeError("runtime repair requires a linted code answer")
        ctx = ctx or _FlowContext()
        trigger = "Runtime" if mode == "Fix" else "UserRequest"
        code = st.answer.code
        while True:
            if ctx.runtime_iters >= self.config.max_runtime_iters:
                raise LoopExhaustedError(
                    f"runtime repair budget ({self.config.max_runtime_iters}) exhausted",
                    trace=ctx.trace,
                )
            prompt = self.catalog.render_buildup_runtime(err_or_req, mode, code)
            log_event(
                session,
                EventKind.REPAIR_REQUESTED,
                {"subtask_id": st.id, "trigger": trigger, "request": err_or_req},
                self._ts(),
            )
            reply = self._ask_parsed(session, prompt, "CodeOnly", "buildup-runtime")
            new_code = reply.sections["code"]
            ctx.runtime_iters += 1
            lint_report = self._lint(session, new_code)
            if lint_report.verdict == "Fail":
                new_code, lint_report = self.repair_lint_loop(
                    session, st, new_code, lint_report, ctx
                )
            report_after = {"lint": lint_report.verdict}
            run_report = None
            if mode == "Fix":
                run_report = self._run(session, new_code)
                report_after["run"] = run_report.verdict
            ctx.trace.iterations.append(
                RepairIteration(
                    trigger=trigger,
                    q_buildup=prompt.user_content,
                    code_before=code,
                    code_after=new_code,
                    report_after=report_after,
                    no_progress=new_code == code,
                )
            )
            code = new_code
            st.answer.code = code
            st.answer.lint = lint_report
            st.answer.revision = len(ctx.trace)
            if run_report is not None:
                st.answer.run = run_report
            if mode == "Request":
                return code, ctx.trace
            if run_report.verdict == "Ok":
                return code, ctx.trace
            err_or_req = run_report.err_summary or "the program failed at runtime"

    def followup_buildup(
        self, session: Session, next_question: str, force_buildup: bool = False
    ) -> SubTask:
        """Chain a follow-up onto the previous sub-task's final code."""
        if force_buildup and self._latest_final_code(session) is None:
            raise NoPriorCodeError("buildup forced without a completed code sub-task")
        return self.handle_subtask(
            session, next_question, force_buildup=force_buildup, chain_on_prior=True
        )

    def _latest_final_code(self, session: Session, exclude: Optional[int] = None):
        for st in reversed(session.subtasks):
            if exclude is not None and st.id == exclude:
                continue
            if (
                st.status == TaskStatus.COMPLETED
                and isinstance(st.answer, CodeAnswer)
                and st.answer.lint is not None
                and st.answer.lint.verdict == "Pass"
            ):
                return st.answer.code
        return None
