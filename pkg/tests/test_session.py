import pytest

from codetutor import session as S
from codetutor.errors import (
    ConfigError,
    EmptyTextError,
    IllegalTransitionError,
    SequenceGapError,
)
from codetutor.orchestrator import EngineConfig
from codetutor.session import EventKind, TaskStatus


def _event(seq, kind=EventKind.PROMPT_SENT, ts=0, payload=None):
    return S.SessionEvent(seq=seq, ts_ms=ts, kind=kind, payload=payload or {})


def test_new_session_empty():
    sess = S.new_session()
    assert sess.subtasks == []
    assert sess.events == []
    assert sess.last_seq == 0


def test_new_session_rejects_bad_config():
    with pytest.raises(ConfigError):
        S.new_session(config=EngineConfig(max_lint_iters=0))
    with pytest.raises(ConfigError):
        S.new_session(config=EngineConfig(subtask_timeout=0))


def test_append_event_first():
    sess = S.new_session()
    S.append_event(sess, _event(1))
    assert len(sess.events) == 1


def test_append_event_gap_rejected():
    sess = S.new_session()
    for i in range(1, 6):
        S.append_event(sess, _event(i, ts=i))
    with pytest.raises(SequenceGapError):
        S.append_event(sess, _event(7, ts=7))


def test_subtask_text_non_empty():
    with pytest.raises(EmptyTextError):
        S.SubTask(id=1, text="   ")


def test_status_transitions():
    sess = S.new_session()
    st = S.add_subtask(sess, "Understand heaps", ts_ms=0)
    assert st.status == TaskStatus.PENDING
    S.set_status(sess, st.id, TaskStatus.IN_PROGRESS)
    S.finish_subtask(sess, st.id, TaskStatus.COMPLETED, 97.3, ts_ms=1)
    assert st.status == TaskStatus.COMPLETED
    assert st.elapsed == 97.3


def test_finish_pending_is_illegal():
    sess = S.new_session()
    st = S.add_subtask(sess, "q", ts_ms=0)
    with pytest.raises(IllegalTransitionError):
        S.finish_subtask(sess, st.id, TaskStatus.COMPLETED, 10, ts_ms=1)


def test_timed_out_outcome():
    sess = S.new_session()
    st = S.add_subtask(sess, "q", ts_ms=0)
    S.set_status(sess, st.id, TaskStatus.IN_PROGRESS)
    S.finish_subtask(sess, st.id, TaskStatus.TIMED_OUT, 3600, ts_ms=1)
    assert st.status == TaskStatus.TIMED_OUT


def test_single_in_progress_guard():
    sess = S.new_session()
    a = S.add_subtask(sess, "first", ts_ms=0)
    b = S.add_subtask(sess, "second", ts_ms=1)
    S.set_status(sess, a.id, TaskStatus.IN_PROGRESS)
    with pytest.raises(IllegalTransitionError):
        S.set_status(sess, b.id, TaskStatus.IN_PROGRESS)


def test_completed_code_requires_lint_pass():
    sess = S.new_session()
    st = S.add_subtask(sess, "write code", ts_ms=0)
    S.set_status(sess, st.id, TaskStatus.IN_PROGRESS)
    st.answer = S.CodeAnswer(code="x = 1\n")
    with pytest.raises(IllegalTransitionError):
        S.finish_subtask(sess, st.id, TaskStatus.COMPLETED, 5, ts_ms=1)
    st.answer.lint = S.LintReport(verdict="Pass")
    S.finish_subtask(sess, st.id, TaskStatus.COMPLETED, 5, ts_ms=2)


def test_lint_report_verdict_invariant():
    with pytest.raises(ValueError):
        S.LintReport(verdict="Pass", messages=[S.LintMessage("f", 1, 1, "X1", "bad")])
    with pytest.raises(ValueError):
        S.LintReport(verdict="Fail", messages=[])


def test_run_report_err_summary_invariant():
    with pytest.raises(ValueError):
        S.RunReport(verdict="RuntimeError")
    with pytest.raises(ValueError):
        S.RunReport(verdict="Ok", err_summary="boom")


def test_concept_answer_keyword_subset():
    with pytest.raises(EmptyTextError):
        S.ConceptAnswer(explanation="short text", keywords=[S.Keyword("absent")])
    ans = S.ConceptAnswer(explanation="Uses Memoization heavily", keywords=[S.Keyword("memoization")])
    assert ans.keywords[0].surface == "memoization"


def test_transcript_round_trip_bytes(tmp_path):
    sess = S.new_session()
    S.log_event(sess, EventKind.SUBTASK_STARTED, {"subtask_id": 1, "text": "q"}, 10)
    S.log_event(sess, EventKind.CLASSIFIED, {"subtask_id": 1, "kind": "Concept"}, 20)
    S.log_event(sess, EventKind.SUBTASK_FINISHED, {"subtask_id": 1, "outcome": "Completed"}, 30)
    path = tmp_path / "transcript.jsonl"
    S.write_transcript(sess, path)
    first = path.read_bytes()
    replayed = S.replay(S.load_transcript(path))
    S.write_transcript(replayed, path)
    assert path.read_bytes() == first


def test_timestamps_non_decreasing():
    sess = S.new_session()
    S.append_event(sess, _event(1, ts=100))
    with pytest.raises(SequenceGapError):
        S.append_event(sess, _event(2, ts=50))
