"""Domain types and the append-only session state machine.

A session is an ordered list of sub-tasks plus an append-only event log.
Every mutation appends an event; the log serializes to line-delimited JSON
and replays losslessly.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Optional

from .errors import (
    ConfigError,
    EmptyTextError,
    IllegalTransitionError,
    SequenceGapError,
    UnknownIdError,
)


class TaskKind(str, Enum):
    CONCEPT = "Concept"
    CODE = "Code"
    UNCLASSIFIED = "Unclassified"


class TaskStatus(str, Enum):
    PENDING = "Pending"
    IN_PROGRESS = "InProgress"
    COMPLETED = "Completed"
    FAILED = "Failed"
    TIMED_OUT = "TimedOut"


# Legal status edges. Terminal states have no successors.
_TRANSITIONS = {
    TaskStatus.PENDING: {TaskStatus.IN_PROGRESS},
    TaskStatus.IN_PROGRESS: {
        TaskStatus.COMPLETED,
        TaskStatus.FAILED,
        TaskStatus.TIMED_OUT,
    },
    TaskStatus.COMPLETED: set(),
    TaskStatus.FAILED: set(),
    TaskStatus.TIMED_OUT: set(),
}


class EventKind(str, Enum):
    SUBTASK_STARTED = "SubTaskStarted"
    CLASSIFIED = "Classified"
    PROMPT_SENT = "PromptSent"
    RESPONSE_RECEIVED = "ResponseReceived"
    LINT_RUN = "LintRun"
    CODE_RUN = "CodeRun"
    REPAIR_REQUESTED = "RepairRequested"
    KEYWORD_DEFINED = "KeywordDefined"
    SUBTASK_FINISHED = "SubTaskFinished"


@dataclass
class RelatedQA:
    question: str
    answer: str

    def __post_init__(self):
        if not self.question.strip() or not self.answer.strip():
            raise EmptyTextError("related Q&A fields must be non-empty")


@dataclass
class Keyword:
    surface: str
    definition: Optional[str] = None

    def __post_init__(self):
        if not self.surface.strip():
            raise EmptyTextError("keyword surface must be non-empty")
        if self.definition is not None and not self.definition.strip():
            raise EmptyTextError("keyword definition, once set, must be non-empty")


@dataclass
class ConceptAnswer:
    explanation: str
    keywords: list[Keyword] = field(default_factory=list)
    related: list[RelatedQA] = field(default_factory=list)

    def __post_init__(self):
        low = self.explanation.lower()
        for kw in self.keywords:
            if kw.surface.lower() not in low:
                raise EmptyTextError(
                    f"keyword {kw.surface!r} does not appear in the explanation"
                )


@dataclass
class LintMessage:
    file: str
    line: int
    column: int
    rule: str
    text: str


@dataclass
class LintReport:
    verdict: str  # "Pass" | "Fail"
    messages: list[LintMessage] = field(default_factory=list)
    tool_exit: int = 0

    def __post_init__(self):
        if (self.verdict == "Pass") != (len(self.messages) == 0):
            raise ValueError("verdict Pass iff message set is empty")


@dataclass
class RunReport:
    verdict: str  # "Ok" | "RuntimeError" | "Timeout" | "ResourceLimit"
    stdout: str = ""
    stderr: str = ""
    err_summary: Optional[str] = None
    duration: float = 0.0

    def __post_init__(self):
        if (self.verdict == "RuntimeError") != (self.err_summary is not None):
            raise ValueError("err_summary present iff verdict is RuntimeError")


@dataclass
class CodeAnswer:
    code: str
    related: list[RelatedQA] = field(default_factory=list)
    lint: Optional[LintReport] = None
    run: Optional[RunReport] = None
    revision: int = 0
    trace: object = None  # orchestrator.RepairTrace, attached by the engine


@dataclass
class SubTask:
    id: int
    text: str
    kind: TaskKind = TaskKind.UNCLASSIFIED
    status: TaskStatus = TaskStatus.PENDING
    elapsed: float = 0.0
    answer: object = None  # ConceptAnswer | CodeAnswer | None

    def __post_init__(self):
        if not self.text.strip():
            raise EmptyTextError("sub-task text must be non-empty")


@dataclass
class SessionEvent:
    seq: int
    ts_ms: int
    kind: EventKind
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "ts_ms": self.ts_ms,
                "kind": self.kind.value,
                "payload": self.payload,
            },
            sort_keys=True,
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "SessionEvent":
        d = json.loads(line)
        return cls(
            seq=d["seq"],
            ts_ms=d["ts_ms"],
            kind=EventKind(d["kind"]),
            payload=d["payload"],
        )


@dataclass
class Session:
    id: str
    scenario: object = None  # bench.ScenarioSpec | None
    subtasks: list[SubTask] = field(default_factory=list)
    events: list[SessionEvent] = field(default_factory=list)
    config: object = None  # orchestrator.EngineConfig

    @property
    def last_seq(self) -> int:
        return self.events[-1].seq if self.events else 0

    def in_progress(self) -> Optional[SubTask]:
        for st in self.subtasks:
            if st.status == TaskStatus.IN_PROGRESS:
                return st
        return None

    def subtask(self, task_id: int) -> SubTask:
        if not 1 <= task_id <= len(self.subtasks):
            raise UnknownIdError(f"no sub-task with id {task_id}")
        return self.subtasks[task_id - 1]


def new_session(scenario=None, config=None) -> Session:
    """Create an empty session, validating the engine config."""
    if config is not None:
        config.validate()
    return Session(id=uuid.uuid4().hex[:12], scenario=scenario, config=config)


def append_event(session: Session, event: SessionEvent) -> Session:
    if event.seq != session.last_seq + 1:
        raise SequenceGapError(
            f"expected seq {session.last_seq + 1}, got {event.seq}"
        )
    if session.events and event.ts_ms < session.events[-1].ts_ms:
        raise SequenceGapError("event timestamps must be non-decreasing")
    session.events.append(event)
    return session


def log_event(session: Session, kind: EventKind, payload: dict, ts_ms: int) -> SessionEvent:
    """Convenience: build the next event and append it."""
    ev = SessionEvent(seq=session.last_seq + 1, ts_ms=ts_ms, kind=kind, payload=payload)
    append_event(session, ev)
    return ev


def add_subtask(session: Session, text: str, ts_ms: int) -> SubTask:
    st = SubTask(id=len(session.subtasks) + 1, text=text)
    session.subtasks.append(st)
    log_event(
        session,
        EventKind.SUBTASK_STARTED,
        {"subtask_id": st.id, "text": text},
        ts_ms,
    )
    return st


def set_status(session: Session, task_id: int, status: TaskStatus) -> SubTask:
    st = session.subtask(task_id)
    if status not in _TRANSITIONS[st.status]:
        raise IllegalTransitionError(f"{st.status.value} -> {status.value}")
    if status == TaskStatus.IN_PROGRESS and session.in_progress() is not None:
        raise IllegalTransitionError("another sub-task is already InProgress")
    st.status = status
    _check_single_in_progress(session)
    return st


def finish_subtask(
    session: Session, task_id: int, outcome: TaskStatus, elapsed: float, ts_ms: int
) -> Session:
    """Terminate an InProgress sub-task and log the outcome."""
    if outcome not in (TaskStatus.COMPLETED, TaskStatus.FAILED, TaskStatus.TIMED_OUT):
        raise IllegalTransitionError(f"{outcome.value} is not a terminal outcome")
    st = session.subtask(task_id)
    if st.status != TaskStatus.IN_PROGRESS:
        raise IllegalTransitionError(
            f"cannot finish sub-task in status {st.status.value}"
        )
    if (
        outcome == TaskStatus.COMPLETED
        and isinstance(st.answer, CodeAnswer)
        and (st.answer.lint is None or st.answer.lint.verdict != "Pass")
    ):
        raise IllegalTransitionError(
            "a completed code sub-task must carry a passing lint report"
        )
    st.status = outcome
    st.elapsed = elapsed
    log_event(
        session,
        EventKind.SUBTASK_FINISHED,
        {"subtask_id": task_id, "outcome": outcome.value, "elapsed": elapsed},
        ts_ms,
    )
    _check_single_in_progress(session)
    return session


def _check_single_in_progress(session: Session) -> None:
    n = sum(1 for s in session.subtasks if s.status == TaskStatus.IN_PROGRESS)
    if n > 1:
        raise IllegalTransitionError("more than one sub-task InProgress")


# ---------------------------------------------------------------------------
# Transcript persistence: one JSON record per line, UTF-8.

def dump_transcript(session: Session) -> str:
    return "".join(ev.to_json() + "\n" for ev in session.events)


def write_transcript(session: Session, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_transcript(session))


def load_transcript(path) -> list[SessionEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(SessionEvent.from_json(line))
    return events


def replay(events: list[SessionEvent], session_id: str = "replayed") -> Session:
    """Rebuild a session's event log from a stored transcript."""
    session = Session(id=session_id)
    for ev in events:
        append_event(session, ev)
    return session
