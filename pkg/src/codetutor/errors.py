"""Exception hierarchy shared across the engine."""


class CodeTutorError(Exception):
    """Base class for all engine errors."""


class ConfigError(CodeTutorError):
    """Invalid engine or backend configuration."""


class SequenceGapError(CodeTutorError):
    """Event sequence number is not the successor of the last event."""


class UnknownIdError(CodeTutorError):
    """Referenced sub-task id does not exist."""


class IllegalTransitionError(CodeTutorError):
    """Sub-task status transition not permitted by the state machine."""


class EmptyTextError(CodeTutorError):
    """A required text field is empty or whitespace-only."""


class DegenerateCorpusError(CodeTutorError):
    """Training corpus contains only one class."""


class ShapeMismatchError(CodeTutorError):
    """Input tensor shape does not match the model contract."""


class VersionMismatchError(CodeTutorError):
    """Serialized model file has an unrecognized magic header or version."""


class TemplateError(CodeTutorError):
    """Prompt template failed validation at load time."""


class PromptBudgetError(CodeTutorError):
    """Rendered prompt exceeds the configured token budget estimate."""


class ParseFailure(CodeTutorError):
    """A mandatory section is missing from a model reply."""

    def __init__(self, section: str, detail: str = ""):
        self.section = section
        msg = f"missing or malformed section: {section}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ScriptExhaustedError(CodeTutorError):
    """Strict scripted backend ran out of canned responses."""


class TransportFailure(CodeTutorError):
    """Network-level failure talking to a remote backend."""


class HttpStatusError(CodeTutorError):
    """Remote backend returned a non-2xx HTTP status."""

    def __init__(self, status: int, body: str = ""):
        self.status = status
        super().__init__(f"HTTP {status}: {body[:200]}")


class MalformedResponseError(CodeTutorError):
    """Remote backend returned JSON that does not match the wire schema."""


class ToolNotFoundError(CodeTutorError):
    """Configured lint or run command binary is missing."""


class ToolCrashError(CodeTutorError):
    """Lint tool exited nonzero with unparseable output."""


class SandboxSetupError(CodeTutorError):
    """Failed to set up the isolated execution environment."""


class LoopExhaustedError(CodeTutorError):
    """Repair loop hit its iteration budget without converging."""

    def __init__(self, message: str, trace=None, no_progress: bool = False):
        super().__init__(message)
        self.trace = trace
        self.no_progress = no_progress


class BusySessionError(CodeTutorError):
    """A sub-task is already in progress on this session."""


class UnknownKeywordError(CodeTutorError):
    """Keyword is not part of the stored keyword set."""


class NoPriorCodeError(CodeTutorError):
    """Buildup chaining forced without a completed code sub-task."""


class SuiteError(CodeTutorError):
    """Scenario suite failed to load or validate."""
