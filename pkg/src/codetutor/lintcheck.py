"""Minimal static checker emitting `FILE:LINE:COL: RULE TEXT` diagnostics.

Reports E999 syntax errors and F821 undefined names. Undefined-name
analysis is deliberately conservative: a name is flagged only when it is
never bound anywhere in the module and is not a builtin, so valid programs
are not rejected by scoping corner cases. Usable standalone:

    python -m codetutor.lintcheck FILE...
"""

from __future__ import annotations

import ast
import builtins
import sys

_BUILTINS = set(dir(builtins)) | {"__file__", "__name__", "__doc__", "__builtins__"}


def _bound_names(tree: ast.AST) -> set[str]:
    bound: set[str] = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and isinstance(node.ctx, (ast.Store, ast.Del)):
            bound.add(node.id)
        elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            bound.add(node.name)
        elif isinstance(node, ast.arg):
            bound.add(node.arg)
        elif isinstance(node, (ast.Import, ast.ImportFrom)):
            for alias in node.names:
                name = alias.asname or alias.name.split(".")[0]
                bound.add(name)
        elif isinstance(node, (ast.Global, ast.Nonlocal)):
            bound.update(node.names)
        elif isinstance(node, ast.ExceptHandler) and node.name:
            bound.add(node.name)
        elif isinstance(node, (ast.MatchAs, ast.MatchStar)) and node.name:
            bound.add(node.name)
        elif isinstance(node, ast.MatchMapping) and node.rest:
            bound.add(node.rest)
    return bound


def check_source(source: str, filename: str = "<source>") -> list[str]:
    """Return diagnostic lines for one source text."""
    try:
        tree = ast.parse(source, filename=filename)
    except SyntaxError as exc:
        line = exc.lineno or 1
        col = (exc.offset or 1) or 1
        return [f"{filename}:{line}:{col}: E999 {exc.msg}"]
    bound = _bound_names(tree)
    diags = []
    for node in ast.walk(tree):
        if (
            isinstance(node, ast.Name)
            and isinstance(node.ctx, ast.Load)
            and node.id not in bound
            and node.id not in _BUILTINS
        ):
            diags.append(
                f"{filename}:{node.lineno}:{node.col_offset + 1}: "
                f"F821 undefined name '{node.id}'"
            )
    diags.sort(key=lambda d: (int(d.split(":")[1]), int(d.split(":")[2])))
    return diags


def main(argv: list[str] | None = None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    if not argv:
        print("usage: python -m codetutor.lintcheck FILE...", file=sys.stderr)
        return 2
    found = False
    for path in argv:
        try:
            with open(path, encoding="utf-8") as fh:
                source = fh.read()
        except OSError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return 2
        for diag in check_source(source, path):
            found = True
            print(diag)
    return 1 if found else 0


if __name__ == "__main__":
    sys.exit(main())
