"""Isolated workspace verification: lint and sandboxed execution.

Both tools are templated external commands ({file} placeholder) so the
teaching-language toolchain is swappable. The run step applies wall-clock,
memory, and captured-output caps in a child process.
"""

from __future__ import annotations

import os
import re
import resource
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

from .errors import SandboxSetupError, ToolCrashError, ToolNotFoundError
from .session import LintMessage, LintReport, RunReport


@dataclass
class Limits:
    wall_seconds: float = 30.0
    memory_bytes: int = 512 * 1024 * 1024
    output_bytes: int = 1024 * 1024


@dataclass
class VerifierConfig:
    lint_cmd: str = f"{sys.executable} -m codetutor.lintcheck {{file}}"
    run_cmd: str = f"{sys.executable} {{file}}"
    limits: Limits = field(default_factory=Limits)
    entry_name: str = "main.py"


@dataclass
class Workspace:
    root: str
    entry_file: str
    limits: Limits

    def cleanup(self) -> None:
        shutil.rmtree(self.root, ignore_errors=True)


def write_workspace(code: str, config: VerifierConfig | None = None) -> Workspace:
    """Write code verbatim into a fresh isolated directory."""
    if not code:
        raise ValueError("code must be non-empty")
    config = config or VerifierConfig()
    try:
        root = tempfile.mkdtemp(prefix="codetutor-ws-")
        entry = os.path.join(root, config.entry_name)
        with open(entry, "w", encoding="utf-8", newline="") as fh:
            fh.write(code)
    except OSError as exc:
        raise IOError(f"failed to create workspace: {exc}") from exc
    return Workspace(root=root, entry_file=entry, limits=config.limits)


# Grammar: FILE:LINE:COL: RULE TEXT, with an optional-column variant
# FILE:LINE: RULE TEXT (column defaults to 1). The rule token is a short
# uppercase code like F821; tools that omit it get rule "".
_WITH_COL = re.compile(r"^(?P<file>[^\s:][^:]*):(?P<line>\d+):(?P<col>\d+):\s*(?P<rest>.+)$")
_NO_COL = re.compile(r"^(?P<file>[^\s:][^:]*):(?P<line>\d+):\s*(?P<rest>.+)$")
_RULE_TOKEN = re.compile(r"^([A-Z]+\d+)\s+(.*)$")


def parse_lint_output(raw: str) -> list[LintMessage]:
    """Tolerant line parser: unmatched lines are ignored. Never raises."""
    messages = []
    for line in raw.splitlines():
        m = _WITH_COL.match(line) or _NO_COL.match(line)
        if not m:
            continue
        rest = m.group("rest").strip()
        rule_match = _RULE_TOKEN.match(rest)
        if rule_match:
            rule, text = rule_match.group(1), rule_match.group(2)
        else:
            rule, text = "", rest
        if not text:
            continue
        messages.append(
            LintMessage(
                file=m.group("file"),
                line=int(m.group("line")),
                column=int(m.group("col")) if "col" in m.groupdict() and m.groupdict().get("col") else 1,
                rule=rule,
                text=text,
            )
        )
    return messages


def _split_cmd(template: str, entry_file: str) -> list[str]:
    return [part.replace("{file}", entry_file) for part in shlex.split(template)]


def lint(ws: Workspace, config: VerifierConfig | None = None) -> LintReport:
    """Run the configured lint command; Pass iff exit 0 and no messages."""
    config = config or VerifierConfig()
    cmd = _split_cmd(config.lint_cmd, ws.entry_file)
    try:
        proc = subprocess.run(
            cmd, capture_output=True, text=True, timeout=ws.limits.wall_seconds,
            cwd=ws.root,
        )
    except FileNotFoundError as exc:
        raise ToolNotFoundError(f"lint command not found: {cmd[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise ToolCrashError(f"lint command timed out: {cmd[0]}") from exc
    messages = parse_lint_output(proc.stdout) + parse_lint_output(proc.stderr)
    if proc.returncode == 0 and not messages:
        return LintReport(verdict="Pass", messages=[], tool_exit=0)
    if proc.returncode != 0 and not messages:
        raise ToolCrashError(
            f"lint exited {proc.returncode} with unparseable output: "
            f"{(proc.stderr or proc.stdout)[:300]}"
        )
    messages.sort(key=lambda m: (m.line, m.column, m.rule))
    return LintReport(verdict="Fail", messages=messages, tool_exit=proc.returncode)


def _child_limits(memory_bytes: int):
    def apply():
        try:
            resource.setrlimit(resource.RLIMIT_AS, (memory_bytes, memory_bytes))
        except (ValueError, OSError):
            pass
        os.setsid()
    return apply


def _truncate(text: str, cap: int) -> tuple[str, bool]:
    if len(text.encode("utf-8", errors="replace")) <= cap:
        return text, False
    data = text.encode("utf-8", errors="replace")[:cap]
    return data.decode("utf-8", errors="replace") + "\n[output truncated]", True


def run(ws: Workspace, config: VerifierConfig | None = None, stdin: str = "") -> RunReport:
    """Execute the workspace entry file under wall/memory/output caps."""
    config = config or VerifierConfig()
    cmd = _split_cmd(config.run_cmd, ws.entry_file)
    start = time.monotonic()
    try:
        proc = subprocess.run(
            cmd,
            capture_output=True,
            text=True,
            timeout=ws.limits.wall_seconds,
            cwd=ws.root,
            input=stdin,
            preexec_fn=_child_limits(ws.limits.memory_bytes),
        )
    except FileNotFoundError as exc:
        raise ToolNotFoundError(f"run command not found: {cmd[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        duration = time.monotonic() - start
        out = exc.stdout or ""
        err = exc.stderr or ""
        if isinstance(out, bytes):
            out = out.decode("utf-8", errors="replace")
        if isinstance(err, bytes):
            err = err.decode("utf-8", errors="replace")
        stdout, _ = _truncate(out, ws.limits.output_bytes)
        stderr, _ = _truncate(err, ws.limits.output_bytes)
        return RunReport(verdict="Timeout", stdout=stdout, stderr=stderr, duration=duration)
    except OSError as exc:
        raise SandboxSetupError(str(exc)) from exc
    duration = time.monotonic() - start
    stdout, _ = _truncate(proc.stdout, ws.limits.output_bytes)
    stderr, _ = _truncate(proc.stderr, ws.limits.output_bytes)
    if proc.returncode == 0:
        return RunReport(verdict="Ok", stdout=stdout, stderr=stderr, duration=duration)
    if proc.returncode < 0 or "MemoryError" in stderr:
        # Killed by a signal (e.g. the memory cap) rather than a traceback.
        if not stderr.strip():
            return RunReport(
                verdict="ResourceLimit", stdout=stdout, stderr=stderr, duration=duration
            )
    err_lines = [ln for ln in stderr.splitlines() if ln.strip()]
    summary = err_lines[-1] if err_lines else f"exit code {proc.returncode}"
    return RunReport(
        verdict="RuntimeError",
        stdout=stdout,
        stderr=stderr,
        err_summary=summary,
        duration=duration,
    )


def verify_code(code: str, config: VerifierConfig | None = None, do_run: bool = False):
    """Convenience: lint (and optionally run) code in a throwaway workspace."""
    config = config or VerifierConfig()
    ws = write_workspace(code, config)
    try:
        lint_report = lint(ws, config)
        run_report = None
        if do_run and lint_report.verdict == "Pass":
            run_report = run(ws, config)
        return lint_report, run_report
    finally:
        ws.cleanup()
