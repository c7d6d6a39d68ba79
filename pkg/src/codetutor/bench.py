"""Scenario suite loading, benchmark runs, and aggregate metrics.

A suite is a directory of scenario files (keys: id, category, detail,
goals). The harness feeds each scenario's goals through the engine in
order, applies the per-sub-task timeout rule, and reports per-sub-task,
per-scenario, and per-category results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from importlib import resources
from pathlib import Path

import yaml

from .errors import CodeTutorError, SuiteError
from .orchestrator import Engine, EngineConfig
from .session import EventKind, TaskStatus

CATEGORIES = ["algorithm", "machine_learning", "real_world"]
CATEGORY_LABELS = {
    "algorithm": "Algorithm",
    "machine_learning": "MachineLearning",
    "real_world": "RealWorld",
}

# Bundled-suite constants: (scenarios, subtasks) per category.
BUNDLED_EXPECTED = {
    "algorithm": (8, 31),
    "machine_learning": (6, 26),
    "real_world": (6, 22),
}


@dataclass
class ScenarioSpec:
    id: str
    category: str
    detail: str
    goals: list[str]


@dataclass
class SubTaskRow:
    scenario_id: str
    category: str
    goal_index: int  # 1-based
    outcome: str
    elapsed: float
    llm_calls: int
    repair_iters: int


@dataclass
class BenchResult:
    judge: str
    per_subtask: list[SubTaskRow] = field(default_factory=list)
    suite_stats: dict = field(default_factory=dict)


def bundled_suite_dir() -> Path:
    return Path(resources.files("codetutor") / "data" / "suite")


def load_suite(suite_dir) -> list[ScenarioSpec]:
    """Load and validate every scenario file, ordered by (category, id)."""
    suite_dir = Path(suite_dir)
    if not suite_dir.is_dir():
        raise SuiteError(f"suite directory not found: {suite_dir}")
    scenarios = []
    seen = set()
    for path in sorted(suite_dir.glob("*.yaml")):
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise SuiteError(f"{path.name}: {exc}") from exc
        if not isinstance(data, dict):
            raise SuiteError(f"{path.name}: scenario file must be a mapping")
        for key in ("id", "category", "detail", "goals"):
            if key not in data:
                raise SuiteError(f"{path.name}: missing key {key!r}")
        if data["category"] not in CATEGORIES:
            raise SuiteError(f"{path.name}: unknown category {data['category']!r}")
        goals = data["goals"]
        if not isinstance(goals, list) or not goals or not all(
            isinstance(g, str) and g.strip() for g in goals
        ):
            raise SuiteError(f"{path.name}: goals must be a non-empty list of strings")
        if data["id"] in seen:
            raise SuiteError(f"{path.name}: duplicate scenario id {data['id']!r}")
        seen.add(data["id"])
        scenarios.append(
            ScenarioSpec(
                id=data["id"],
                category=data["category"],
                detail=str(data["detail"]).strip(),
                goals=[g.strip() for g in goals],
            )
        )
    scenarios.sort(key=lambda s: (CATEGORIES.index(s.category), s.id))
    return scenarios


def suite_stats(suite: list[ScenarioSpec]) -> dict:
    """(scenarios, subtasks, subtasks/scenario) per category; exact ratios."""
    stats = {}
    for cat in CATEGORIES:
        members = [s for s in suite if s.category == cat]
        n_scen = len(members)
        n_sub = sum(len(s.goals) for s in members)
        ratio = Fraction(n_sub, n_scen) if n_scen else Fraction(0)
        stats[cat] = {
            "scenarios": n_scen,
            "subtasks": n_sub,
            "subtasks_per_scenario": ratio,
        }
    return stats


def validate_suite(suite: list[ScenarioSpec], expected: dict | None = None) -> dict:
    """Compute per-category statistics; check against expected constants."""
    stats = suite_stats(suite)
    if expected is not None:
        mismatches = []
        for cat, (n_scen, n_sub) in expected.items():
            got = stats[cat]
            if got["scenarios"] != n_scen:
                mismatches.append(f"{cat}: scenarios {got['scenarios']} != {n_scen}")
            if got["subtasks"] != n_sub:
                mismatches.append(f"{cat}: subtasks {got['subtasks']} != {n_sub}")
        if mismatches:
            raise SuiteError("suite mismatch: " + "; ".join(mismatches))
    return stats


def _count_kinds(events, start_idx: int, kind: EventKind) -> int:
    return sum(1 for ev in events[start_idx:] if ev.kind == kind)


def run_benchmark(
    suite: list[ScenarioSpec],
    engine_factory,
    judge: str = "AutoAcceptOnPass",
    prompt_fn=None,
) -> BenchResult:
    """Run every scenario's goals through a fresh engine and session.

    engine_factory() -> Engine, called once per scenario so scripted
    backends start from a clean cursor. judge=Interactive asks prompt_fn
    (default: stdin) y/n before accepting each passing answer.
    """
    if judge not in ("AutoAcceptOnPass", "Interactive"):
        raise ValueError(f"unknown judge {judge!r}")
    result = BenchResult(judge=judge, suite_stats=_stats_serializable(suite_stats(suite)))
    for scenario in suite:
        engine = engine_factory()
        if judge == "Interactive":
            engine.config.auto_accept_on_pass = False
        session = engine.new_session(scenario=scenario)
        aborted = False
        for idx, goal in enumerate(scenario.goals, start=1):
            if aborted:
                result.per_subtask.append(
                    SubTaskRow(scenario.id, scenario.category, idx, "Failed", 0.0, 0, 0)
                )
                continue
            ev_start = len(session.events)
            try:
                if idx == 1:
                    st = engine.handle_subtask(session, goal)
                else:
                    st = engine.followup_buildup(session, goal)
                if judge == "Interactive" and st.status == TaskStatus.IN_PROGRESS:
                    ask = prompt_fn or (lambda q: input(q))
                    if ask(f"[{scenario.id} #{idx}] accept this answer? [y/n] ").strip().lower().startswith("y"):
                        engine.accept(session)
                    else:
                        from .session import finish_subtask
                        finish_subtask(session, st.id, TaskStatus.FAILED, st.elapsed, engine._ts())
                outcome = st.status.value
                elapsed = st.elapsed
            except CodeTutorError:
                # Backend hard failure: record and abort this scenario only.
                aborted = True
                outcome, elapsed = "Failed", 0.0
                st = None
            calls = _count_kinds(session.events, ev_start, EventKind.RESPONSE_RECEIVED)
            repairs = _count_kinds(session.events, ev_start, EventKind.REPAIR_REQUESTED)
            result.per_subtask.append(
                SubTaskRow(scenario.id, scenario.category, idx, outcome, elapsed, calls, repairs)
            )
    return result


def _stats_serializable(stats: dict) -> dict:
    out = {}
    for cat, s in stats.items():
        out[cat] = {
            "scenarios": s["scenarios"],
            "subtasks": s["subtasks"],
            "subtasks_per_scenario": float(s["subtasks_per_scenario"]),
        }
    return out


def aggregate(result: BenchResult) -> dict:
    """Per-category aggregates; means over completed items, plus an
    all-attempts variant. The denominator is always stated by key name."""
    if not result.per_subtask:
        raise ValueError("empty result")
    report = {}
    for cat in CATEGORIES:
        rows = [r for r in result.per_subtask if r.category == cat]
        if not rows:
            continue
        completed = [r for r in rows if r.outcome == "Completed"]
        scen_ids = sorted({r.scenario_id for r in rows})
        scen_times_completed = []
        scen_times_all = []
        for sid in scen_ids:
            srows = [r for r in rows if r.scenario_id == sid]
            scen_times_all.append(sum(r.elapsed for r in srows))
            if all(r.outcome == "Completed" for r in srows):
                scen_times_completed.append(sum(r.elapsed for r in srows))
        report[cat] = {
            "scenarios": len(scen_ids),
            "subtasks": len(rows),
            "completed": len(completed),
            "failed": sum(1 for r in rows if r.outcome == "Failed"),
            "timed_out": sum(1 for r in rows if r.outcome == "TimedOut"),
            "incomplete": len(rows) - len(completed),
            "mean_time_per_scenario_completed": _mean([t for t in scen_times_completed]),
            "mean_time_per_subtask_completed": _mean([r.elapsed for r in completed]),
            "mean_time_per_scenario_all": _mean(scen_times_all),
            "mean_time_per_subtask_all": _mean([r.elapsed for r in rows]),
            "llm_calls": sum(r.llm_calls for r in rows),
            "repair_iters": sum(r.repair_iters for r in rows),
        }
    return report


def _mean(values: list[float]):
    return sum(values) / len(values) if values else None


def fmt_seconds(value) -> str:
    """Display seconds as in-prose figures: 377, 97.3, 83.4."""
    if value is None:
        return "-"
    s = f"{value:.1f}"
    return s[:-2] if s.endswith(".0") else s


def format_suite_stats(stats: dict) -> str:
    """Three-row table mirroring the suite statistics layout."""
    labels = [CATEGORY_LABELS[c] for c in CATEGORIES]
    lines = ["{:<26}{}".format("", " ".join(labels))]
    rows = [
        ("Number of Scenarios", [str(stats[c]["scenarios"]) for c in CATEGORIES]),
        ("Number of Subtasks", [str(stats[c]["subtasks"]) for c in CATEGORIES]),
        (
            "Subtasks per Scenario",
            [f"{float(stats[c]['subtasks_per_scenario']):.2f}" for c in CATEGORIES],
        ),
    ]
    for name, cells in rows:
        lines.append("{:<26}{}".format(name, " ".join(cells)))
    return "\n".join(lines)


def emit_report(result: BenchResult, format: str = "TextTable") -> str:
    """Deterministic report document: TextTable or StructuredData (JSON)."""
    agg = aggregate(result)
    if format == "StructuredData":
        doc = {
            "judge": result.judge,
            "suite_stats": result.suite_stats,
            "per_category": agg,
            "per_subtask": [asdict(r) for r in result.per_subtask],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if format != "TextTable":
        raise ValueError(f"unknown report format {format!r}")
    lines = []
    if result.suite_stats:
        lines.append(format_suite_stats(result.suite_stats))
        lines.append("")
    lines.append(f"Judge: {result.judge}")
    lines.append("")
    header = "{:<18}{:>10}{:>11}{:>10}{:>10}{:>16}{:>16}".format(
        "Category", "Subtasks", "Completed", "Failed", "TimedOut",
        "s/scenario*", "s/sub-goal*",
    )
    lines.append(header)
    for cat in CATEGORIES:
        if cat not in agg:
            continue
        a = agg[cat]
        lines.append(
            "{:<18}{:>10}{:>11}{:>10}{:>10}{:>16}{:>16}".format(
                CATEGORY_LABELS[cat],
                a["subtasks"],
                a["completed"],
                a["failed"],
                a["timed_out"],
                fmt_seconds(a["mean_time_per_scenario_completed"]),
                fmt_seconds(a["mean_time_per_subtask_completed"]),
            )
        )
    lines.append("* means over completed items only (all-attempts variant in StructuredData)")
    return "\n".join(lines) + "\n"
