import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codetutor.errors import (
    EmptyTextError,
    ParseFailure,
    PromptBudgetError,
    TemplateError,
)
from codetutor.prompts import (
    DELIMITERS,
    PromptConfig,
    TemplateCatalog,
    _parse_template,
    escape_payload,
    parse_reply,
    unescape_payload,
)
from codetutor.session import Keyword, LintMessage

from conftest import CONCEPT_REPLY, UNIVERSAL_REPLY


def reference_parse_concept(raw):
    """Independent line-oriented parse of a concept reply (no regex reuse)."""
    explanation = []
    keywords = []
    related = []
    state = "explanation"
    pending_q = None
    for line in raw.splitlines():
        bare = line.strip()
        if bare.rstrip(":").upper() == "KEYWORDS":
            state = "keywords"
            continue
        if bare.rstrip(":").upper() == "RELATED":
            state = "related"
            continue
        if state == "explanation":
            explanation.append(line)
        elif state == "keywords" and bare.startswith("- "):
            keywords.append(bare[2:].strip())
        elif state == "related":
            if bare.startswith("Q:"):
                pending_q = bare[2:].strip()
            elif bare.startswith("A:") and pending_q is not None:
                related.append({"question": pending_q, "answer": bare[2:].strip()})
                pending_q = None
    return "\n".join(explanation).strip(), keywords, related


# -- catalog / rendering -----------------------------------------------------

def test_catalog_loads_all_templates(catalog):
    assert len(catalog.templates) == 10
    for tpl in catalog.templates.values():
        assert tpl.role_preamble
        assert tpl.delimiter_style in DELIMITERS


def test_render_concept_contains_question(catalog):
    rendered = catalog.render_concept("What is a heap?")
    assert rendered.messages[0][0] == "system"
    assert "What is a heap?" in rendered.user_content
    assert "KEYWORDS" in rendered.user_content
    assert "RELATED" in rendered.user_content


def test_render_is_pure(catalog):
    a = catalog.render_code("Implement quicksort.")
    b = catalog.render_code("Implement quicksort.")
    assert a.messages == b.messages


def test_render_code_mentions_language_and_delimiters(catalog):
    rendered = catalog.render_code("Implement quicksort.")
    assert "Python" in rendered.user_content
    assert "'''" in rendered.user_content


def test_render_rejects_empty_question(catalog):
    with pytest.raises(EmptyTextError):
        catalog.render_concept("   ")
    with pytest.raises(EmptyTextError):
        catalog.render_code("")


def test_render_buildup_lint_names_location(catalog):
    msg = LintMessage(file="main.py", line=3, column=5, rule="F821", text="undefined name 'x'")
    rendered = catalog.render_buildup_lint(msg, "print(x)\n")
    assert "3" in rendered.user_content
    assert "5" in rendered.user_content
    assert "undefined name 'x'" in rendered.user_content
    assert "print(x)" in rendered.user_content


def test_render_buildup_runtime_fix_prefix(catalog):
    rendered = catalog.render_buildup_runtime(
        "ZeroDivisionError: division by zero", "Fix", "print(1/0)\n"
    )
    assert rendered.user_content.startswith(
        "How to fix ZeroDivisionError: division by zero?"
    )


def test_render_buildup_request_prefix(catalog):
    rendered = catalog.render_buildup_runtime(
        "add input validation", "Request", "x = 1\n"
    )
    assert rendered.user_content.startswith("I want to add input validation.")


def test_render_buildup_bad_mode(catalog):
    with pytest.raises(TemplateError):
        catalog.render_buildup_runtime("boom", "Panic", "x = 1\n")


def test_render_buildup_chain_embeds_code(catalog):
    rendered = catalog.render_buildup_chain("Extend it with logging.", "x = 1\n")
    assert "Extend it with logging." in rendered.user_content
    assert "x = 1" in rendered.user_content


def test_render_keyword_define(catalog):
    rendered = catalog.render_keyword_define(Keyword("memoization"), "dynamic programming")
    assert "memoization" in rendered.user_content


def test_payload_delimiters_escaped(catalog):
    rendered = catalog.render_code("Explain ''' in Python.")
    assert "Explain ''' in" not in rendered.user_content
    assert "[:tq:]" in rendered.user_content


def test_escape_round_trip():
    text = "a ''' b <code>c</code> d"
    assert unescape_payload(escape_payload(text)) == text


def test_budget_exceeded():
    catalog = TemplateCatalog.load(PromptConfig(token_budget=10))
    with pytest.raises(PromptBudgetError):
        catalog.render_concept("What is a heap?")


def test_template_validation_rejects_undeclared_placeholder():
    raw = "id: X\ndelimiter_style: TripleQuote\nrole: r\nplaceholders: a\n---\n{a} {b}\n"
    with pytest.raises(TemplateError):
        _parse_template(raw, "X.txt")


def test_template_validation_rejects_unused_placeholder():
    raw = "id: X\ndelimiter_style: TripleQuote\nrole: r\nplaceholders: a, b\n---\n{a}\n"
    with pytest.raises(TemplateError):
        _parse_template(raw, "X.txt")


def test_unbound_placeholder_at_render():
    raw = "id: X\ndelimiter_style: TripleQuote\nrole: r\nplaceholders: a\n---\n{a}\n"
    tpl = _parse_template(raw, "X.txt")
    catalog = TemplateCatalog.load()
    catalog.templates["X"] = tpl
    with pytest.raises(TemplateError):
        catalog._render(["X"], {})


# -- parse_reply -------------------------------------------------------------

def test_parse_concept_sections():
    reply = parse_reply(CONCEPT_REPLY, "ConceptSections")
    ref_explanation, ref_keywords, ref_related = reference_parse_concept(CONCEPT_REPLY)
    assert reply.sections["explanation"] == ref_explanation
    assert reply.sections["keywords"] == ref_keywords
    assert reply.sections["related"] == ref_related
    assert len(reply.sections["related"]) == 2


def test_parse_universal_reply_satisfies_all_kinds():
    concept = parse_reply(UNIVERSAL_REPLY, "ConceptSections")
    assert concept.sections["keywords"] == ["sorting", "complexity"]
    code = parse_reply(UNIVERSAL_REPLY, "CodeSections")
    assert code.sections["code"] == "print('ok')\n"
    only = parse_reply(UNIVERSAL_REPLY, "CodeOnly")
    assert only.sections["code"] == "print('ok')\n"


def test_parse_code_sections_related_optional():
    reply = parse_reply("'''\nx = 1\n'''\n", "CodeSections")
    assert reply.sections["code"] == "x = 1\n"
    assert reply.sections["related"] == []


def test_parse_missing_code_block():
    with pytest.raises(ParseFailure) as excinfo:
        parse_reply("no code here", "CodeOnly")
    assert excinfo.value.section == "code"


def test_parse_empty_code_block():
    with pytest.raises(ParseFailure) as excinfo:
        parse_reply("'''\n   \n'''", "CodeOnly")
    assert excinfo.value.section == "code"


def test_parse_two_code_blocks_warns_first_wins():
    raw = "'''\nfirst = 1\n'''\nand then\n'''\nsecond = 2\n'''\n"
    reply = parse_reply(raw, "CodeOnly")
    assert reply.sections["code"] == "first = 1\n"
    assert reply.warnings and "2 code blocks" in reply.warnings[0]


def test_parse_concept_missing_keywords():
    raw = "Some explanation.\nRELATED:\nQ: q\nA: a\n"
    with pytest.raises(ParseFailure) as excinfo:
        parse_reply(raw, "ConceptSections")
    assert excinfo.value.section == "keywords"


def test_parse_concept_missing_related():
    raw = "Some explanation.\nKEYWORDS:\n- a\n"
    with pytest.raises(ParseFailure) as excinfo:
        parse_reply(raw, "ConceptSections")
    assert excinfo.value.section == "related"


def test_parse_concept_missing_explanation():
    raw = "KEYWORDS:\n- a\nRELATED:\nQ: q\nA: a\n"
    with pytest.raises(ParseFailure) as excinfo:
        parse_reply(raw, "ConceptSections")
    assert excinfo.value.section == "explanation"


def test_parse_empty_reply():
    with pytest.raises(ParseFailure):
        parse_reply("   \n", "CodeOnly")


def test_parse_definition_only():
    reply = parse_reply("A cache keeps recent values.\n", "DefinitionOnly")
    assert reply.sections["definition"] == "A cache keeps recent values."


def test_parse_angle_tag_style():
    raw = "<code>\nx = 1\n</code>\n"
    reply = parse_reply(raw, "CodeOnly", delimiter_style="AngleTag")
    assert reply.sections["code"] == "x = 1\n"


def test_parse_restores_escaped_delimiters():
    raw = "'''\nprint([:tq:])\n'''\n"
    reply = parse_reply(raw, "CodeOnly")
    assert reply.sections["code"] == "print(''')\n"


@settings(max_examples=40, deadline=None)
@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=200))
def test_parse_reply_total(raw):
    """Any input either parses or raises ParseFailure; nothing else escapes."""
    try:
        parse_reply(raw, "ConceptSections")
    except ParseFailure:
        pass


@settings(max_examples=40, deadline=None)
@given(st.text(alphabet="ab c'<>/deo\n", max_size=120))
def test_code_extraction_never_contains_delimiters(raw):
    wrapped = f"'''\n{escape_payload(raw)}x\n'''"
    reply = parse_reply(wrapped, "CodeOnly")
    assert "[:tq:]" not in reply.sections["code"] or "'''" not in raw
