import pytest

from codetutor import classifier as clf
from codetutor.clock import FakeClock
from codetutor.corpus import load_bundled_corpus
from codetutor.gateway import ScriptedBackend
from codetutor.orchestrator import Engine, EngineConfig
from codetutor.prompts import TemplateCatalog

# One reply satisfying every section grammar at once: concept sections plus
# a clean delimited program. Lets a single script drive mixed flows.
UNIVERSAL_REPLY = """\
This explanation covers the idea, touching on sorting and complexity.
KEYWORDS:
- sorting
- complexity
RELATED:
Q: What should I study next?
A: Practice with small examples.
'''
print('ok')
'''
"""

CLEAN_CODE_REPLY = """\
'''
x = 1
print(x)
'''
RELATED:
Q: How would you extend this?
A: Add input handling.
"""

BUGGY_CODE_REPLY = """\
'''
print(y)
'''
RELATED:
Q: q
A: a
"""

FIXED_CODE_REPLY = """\
'''
y = 2
print(y)
'''
"""

ZERO_DIV_REPLY = """\
'''
print(1 / 0)
'''
RELATED:
Q: q
A: a
"""

GUARDED_FIX_REPLY = """\
'''
d = 0
print(0 if d == 0 else 1 / d)
'''
"""

CONCEPT_REPLY = """\
Sorting arranges data in a defined order and often relies on comparisons.
KEYWORDS:
- comparisons
- order
RELATED:
Q: What is a stable sort?
A: One that keeps equal keys in their original order.
Q: Why does complexity matter?
A: It predicts how cost grows with input size.
"""


@pytest.fixture(scope="session")
def catalog():
    return TemplateCatalog.load()


@pytest.fixture(scope="session")
def bundled_corpus():
    return load_bundled_corpus()


@pytest.fixture(scope="session")
def trained_model(bundled_corpus):
    model, metrics = clf.train(bundled_corpus, seed=0)
    return model, metrics


def make_engine(script, config=None, **kwargs):
    backend = ScriptedBackend(script, strict=kwargs.pop("strict", True))
    engine = Engine(
        backend,
        config or EngineConfig(),
        clock=kwargs.pop("clock", FakeClock()),
        **kwargs,
    )
    return engine, backend
