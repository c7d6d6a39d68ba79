"""Prompt chain rendering and structured reply parsing.

Templates live in a catalog of text files with a small front-matter header
(id, delimiter_style, role, declared placeholders). Rendering is pure;
payloads have delimiter tokens escaped before substitution and restored
after parsing, so a reply's code section never contains delimiter markers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .errors import EmptyTextError, ParseFailure, PromptBudgetError, TemplateError
from .session import Keyword, LintMessage

TEMPLATE_IDS = [
    "ConceptMain", "ConceptKeywords", "ConceptRelated", "KeywordDefine",
    "CodeMain", "CodeRelated", "BuildupLint", "BuildupRuntime",
    "BuildupRequest", "BuildupChain",
]

DELIMITERS = {
    "TripleQuote": ("'''", "'''"),
    "AngleTag": ("<code>", "</code>"),
}

# Reserved escape sequences for delimiter tokens occurring inside payloads.
_ESCAPES = {
    "'''": "[:tq:]",
    "<code>": "[:cod:]",
    "</code>": "[:dcod:]",
}

_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")


@dataclass
class PromptTemplate:
    id: str
    role_preamble: str
    body: str
    delimiter_style: str
    placeholders: set[str]


@dataclass
class RenderedPrompt:
    messages: list[tuple[str, str]]  # (role, content)

    @property
    def user_content(self) -> str:
        return "\n\n".join(c for r, c in self.messages if r == "user")


@dataclass
class StructuredReply:
    raw: str
    sections: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


@dataclass
class PromptConfig:
    language: str = "Python"
    max_related: int = 3
    delimiter_style: str = "TripleQuote"
    token_budget: int = 16000
    chars_per_token: int = 4


def escape_payload(text: str) -> str:
    for token, esc in _ESCAPES.items():
        text = text.replace(token, esc)
    return text


def unescape_payload(text: str) -> str:
    for token, esc in _ESCAPES.items():
        text = text.replace(esc, token)
    return text


def _parse_template(raw: str, source: str) -> PromptTemplate:
    if "\n---\n" not in raw:
        raise TemplateError(f"{source}: missing front-matter separator")
    head, body = raw.split("\n---\n", 1)
    meta = {}
    for line in head.splitlines():
        if ":" not in line:
            raise TemplateError(f"{source}: bad front-matter line {line!r}")
        key, value = line.split(":", 1)
        meta[key.strip()] = value.strip()
    for key in ("id", "delimiter_style", "role", "placeholders"):
        if key not in meta:
            raise TemplateError(f"{source}: missing front-matter key {key!r}")
    if meta["delimiter_style"] not in DELIMITERS:
        raise TemplateError(f"{source}: unknown delimiter style {meta['delimiter_style']!r}")
    declared = {p.strip() for p in meta["placeholders"].split(",") if p.strip()}
    used = set(_PLACEHOLDER_RE.findall(body))
    if used - declared:
        raise TemplateError(f"{source}: undeclared placeholders {sorted(used - declared)}")
    if declared - used:
        raise TemplateError(f"{source}: unused declared placeholders {sorted(declared - used)}")
    return PromptTemplate(
        id=meta["id"],
        role_preamble=meta["role"],
        body=body.strip("\n"),
        delimiter_style=meta["delimiter_style"],
        placeholders=declared,
    )


class TemplateCatalog:
    """All templates loaded and validated at startup."""

    def __init__(self, templates: dict[str, PromptTemplate], config: Optional[PromptConfig] = None):
        self.templates = templates
        self.config = config or PromptConfig()
        missing = set(TEMPLATE_IDS) - set(templates)
        if missing:
            raise TemplateError(f"catalog is missing templates: {sorted(missing)}")

    @classmethod
    def load(cls, config: Optional[PromptConfig] = None) -> "TemplateCatalog":
        templates = {}
        base = resources.files("codetutor") / "templates"
        for tid in TEMPLATE_IDS:
            raw = (base / f"{tid}.txt").read_text(encoding="utf-8")
            tpl = _parse_template(raw, f"{tid}.txt")
            if tpl.id != tid:
                raise TemplateError(f"{tid}.txt declares id {tpl.id!r}")
            templates[tid] = tpl
        return cls(templates, config)

    # -- rendering ---------------------------------------------------------

    def _delims(self) -> tuple[str, str]:
        return DELIMITERS[self.config.delimiter_style]

    def _render(self, template_ids: list[str], bindings: dict) -> RenderedPrompt:
        parts = []
        role = self.templates[template_ids[0]].role_preamble
        for tid in template_ids:
            tpl = self.templates[tid]
            body = tpl.body
            for name in tpl.placeholders:
                if name not in bindings:
                    raise TemplateError(f"{tid}: unbound placeholder {name!r}")
                body = body.replace("{" + name + "}", str(bindings[name]))
            parts.append(body)
        content = "\n\n".join(parts)
        budget_chars = self.config.token_budget * self.config.chars_per_token
        if len(content) > budget_chars:
            raise PromptBudgetError(
                f"rendered prompt is ~{len(content) // self.config.chars_per_token} tokens, "
                f"budget is {self.config.token_budget}"
            )
        return RenderedPrompt(messages=[("system", role), ("user", content)])

    def _require(self, value: str, name: str) -> str:
        if not value or not value.strip():
            raise EmptyTextError(f"{name} must be non-empty")
        return value

    def render_concept(self, question: str) -> RenderedPrompt:
        self._require(question, "question")
        return self._render(
            ["ConceptMain", "ConceptKeywords", "ConceptRelated"],
            {"question": escape_payload(question), "max_related": self.config.max_related},
        )

    def render_code(self, question: str) -> RenderedPrompt:
        self._require(question, "question")
        open_d, close_d = self._delims()
        return self._render(
            ["CodeMain", "CodeRelated"],
            {
                "question": escape_payload(question),
                "language": self.config.language,
                "open_delim": open_d,
                "close_delim": close_d,
                "max_related": self.config.max_related,
            },
        )

    def render_buildup_lint(self, message: LintMessage, code: str) -> RenderedPrompt:
        self._require(code, "code")
        open_d, close_d = self._delims()
        return self._render(
            ["BuildupLint"],
            {
                "rule": message.rule or "warning",
                "line": message.line,
                "column": message.column,
                "message": escape_payload(message.text),
                "code": escape_payload(code),
                "open_delim": open_d,
                "close_delim": close_d,
            },
        )

    def render_buildup_runtime(self, err_or_req: str, mode: str, code: str) -> RenderedPrompt:
        self._require(err_or_req, "err_or_req")
        self._require(code, "code")
        if mode not in ("Fix", "Request"):
            raise TemplateError(f"unknown buildup mode {mode!r}")
        open_d, close_d = self._delims()
        bindings = {
            "code": escape_payload(code),
            "open_delim": open_d,
            "close_delim": close_d,
        }
        if mode == "Fix":
            bindings["error"] = escape_payload(err_or_req.rstrip("?").strip())
            return self._render(["BuildupRuntime"], bindings)
        bindings["request"] = escape_payload(err_or_req.rstrip(".").strip())
        return self._render(["BuildupRequest"], bindings)

    def render_buildup_chain(self, next_question: str, final_code: str) -> RenderedPrompt:
        self._require(next_question, "next_question")
        self._require(final_code, "final_code")
        open_d, close_d = self._delims()
        return self._render(
            ["BuildupChain"],
            {
                "question": escape_payload(next_question),
                "code": escape_payload(final_code),
                "open_delim": open_d,
                "close_delim": close_d,
            },
        )

    def render_keyword_define(self, keyword: Keyword, context: str) -> RenderedPrompt:
        self._require(keyword.surface, "keyword surface")
        return self._render(
            ["KeywordDefine"],
            {"keyword": escape_payload(keyword.surface), "context": escape_payload(context)},
        )


# ---------------------------------------------------------------------------
# Reply grammar

def _extract_code(raw: str, style: str, reply: StructuredReply) -> str:
    open_d, close_d = DELIMITERS[style]
    if style == "TripleQuote":
        pattern = re.compile(r"'''\n?(.*?)'''", re.DOTALL)
    else:
        pattern = re.compile(re.escape(open_d) + r"\n?(.*?)" + re.escape(close_d), re.DOTALL)
    blocks = pattern.findall(raw)
    if not blocks:
        raise ParseFailure("code", "no delimited code block found")
    if len(blocks) > 1:
        reply.warnings.append(f"{len(blocks)} code blocks found; using the first")
    code = unescape_payload(blocks[0].rstrip() + "\n")
    if not code.strip():
        raise ParseFailure("code", "empty code block")
    return code


def _strip_code_blocks(raw: str, style: str) -> str:
    open_d, close_d = DELIMITERS[style]
    if style == "TripleQuote":
        return re.sub(r"'''\n?.*?'''", "", raw, flags=re.DOTALL)
    return re.sub(re.escape(open_d) + r".*?" + re.escape(close_d), "", raw, flags=re.DOTALL)


def _parse_related(lines: list[str]) -> list[dict]:
    pairs = []
    question = None
    for line in lines:
        line = line.strip()
        if line.startswith("Q:"):
            question = line[2:].strip()
        elif line.startswith("A:") and question is not None:
            pairs.append({"question": question, "answer": line[2:].strip()})
            question = None
    return pairs


def parse_reply(raw: str, expected: str, delimiter_style: str = "TripleQuote") -> StructuredReply:
    """Extract sections from a model reply per the reply grammar.

    expected is one of ConceptSections, CodeSections, CodeOnly,
    DefinitionOnly. Missing mandatory sections raise ParseFailure naming
    the section.
    """
    if not raw or not raw.strip():
        raise ParseFailure("reply", "empty response")
    reply = StructuredReply(raw=raw)

    if expected == "DefinitionOnly":
        reply.sections["definition"] = unescape_payload(raw.strip())
        return reply

    if expected == "CodeOnly":
        reply.sections["code"] = _extract_code(raw, delimiter_style, reply)
        return reply

    if expected == "CodeSections":
        reply.sections["code"] = _extract_code(raw, delimiter_style, reply)
        text = _strip_code_blocks(raw, delimiter_style)
        related = _parse_related(_section_lines(text, "RELATED"))
        reply.sections["related"] = related
        return reply

    if expected == "ConceptSections":
        text = _strip_code_blocks(raw, delimiter_style)
        lines = text.splitlines()
        kw_idx = _find_header(lines, "KEYWORDS")
        if kw_idx is None:
            raise ParseFailure("keywords")
        rel_idx = _find_header(lines, "RELATED")
        if rel_idx is None or rel_idx < kw_idx:
            raise ParseFailure("related")
        explanation = unescape_payload("\n".join(lines[:kw_idx]).strip())
        if not explanation:
            raise ParseFailure("explanation")
        keywords = [
            ln.strip()[2:].strip()
            for ln in lines[kw_idx + 1:rel_idx]
            if ln.strip().startswith("- ")
        ]
        if not keywords:
            raise ParseFailure("keywords", "no dash-prefixed entries")
        related = _parse_related(lines[rel_idx + 1:])
        if not related:
            raise ParseFailure("related", "no Q:/A: pairs")
        reply.sections["explanation"] = explanation
        reply.sections["keywords"] = [unescape_payload(k) for k in keywords]
        reply.sections["related"] = related
        return reply

    raise ValueError(f"unknown expected kind {expected!r}")


def _find_header(lines: list[str], name: str) -> Optional[int]:
    for i, line in enumerate(lines):
        if line.strip().rstrip(":").upper() == name:
            return i
    return None


def _section_lines(text: str, name: str) -> list[str]:
    lines = text.splitlines()
    idx = _find_header(lines, name)
    return lines[idx + 1:] if idx is not None else []
