"""Loading the labeled question corpus (one `text TAB label` record per line)."""

from importlib import resources
from pathlib import Path

from .classifier import LabeledQuestion


def load_corpus(path) -> list[LabeledQuestion]:
    questions = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                text, label = line.rsplit("\t", 1)
                questions.append(LabeledQuestion(text=text, label=int(label)))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus record") from exc
    return questions


def bundled_corpus_path() -> Path:
    return Path(resources.files("codetutor") / "data" / "corpus.tsv")


def load_bundled_corpus() -> list[LabeledQuestion]:
    return load_corpus(bundled_corpus_path())
