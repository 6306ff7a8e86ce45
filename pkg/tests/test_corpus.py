import re

import pytest
from conftest import CORPUS, corpus_text, load

HEADER = re.compile(r"\(\* rejected: (.+?) \*\)")

POSITIVE = sorted(p.name for p in CORPUS.glob("*.cc") if not p.name.startswith("bad_"))
NEGATIVE = sorted(p.name for p in CORPUS.glob("bad_*.cc"))


def test_corpus_is_present():
    assert "nat.cc" in POSITIVE
    assert len(NEGATIVE) >= 10


@pytest.mark.parametrize("name", POSITIVE)
def test_positive_files_are_accepted(name, sessions):
    session = sessions(name)
    assert session.ok, [d.render(name) for d in session.diagnostics]
    assert session.results


@pytest.mark.parametrize("name", NEGATIVE)
def test_negative_files_fail_with_the_declared_rule(name):
    text = corpus_text(name)
    expected = HEADER.match(text)
    assert expected, f"{name} has no rejected header"
    session = load(text)
    assert session.diagnostics, f"{name} was accepted"
    assert session.diagnostics[0].rule == expected.group(1)
    assert session.diagnostics[0].line is not None
