# tests/conftest.py
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]  # корень репозитория
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from app.hfset import HF, encode_tuple, natural  # noqa: E402
from app.schemas import ModelConfig  # noqa: E402
from app.syntax import IndRef, Term, mk_app  # noqa: E402
from app.vernacular import Session  # noqa: E402

CORPUS = ROOT / "corpus"

NAT_SOURCE = "Inductive nat : Type0 := O : nat | S : nat -> nat.\n"


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


def load(source: str, model: ModelConfig = None) -> Session:
    return Session(model=model).load(source)


def numeral(session: Session, k: int) -> Term:
    """S (S ... O) as a term of the session's nat."""
    zero = session.resolve("O")
    succ = session.resolve("S")
    assert isinstance(zero, IndRef) and isinstance(succ, IndRef)
    t = zero
    for _ in range(k):
        t = mk_app(succ, [t])
    return t


def numeral_hf(k: int) -> HF:
    """⟦O⟧ = ⟨1⟩, ⟦S n⟧ = ⟨2, ⟦n⟧⟩."""
    h = encode_tuple([natural(1)])
    for _ in range(k):
        h = encode_tuple([natural(2), h])
    return h


@pytest.fixture(scope="session")
def small_model() -> ModelConfig:
    return ModelConfig(fixpoint_depth=8, universe_rank=2, sample_budget=16)


@pytest.fixture(scope="session")
def nat_session() -> Session:
    return load(corpus_text("nat.cc"))


@pytest.fixture(scope="session")
def sessions():
    """Every positive corpus file, loaded once."""
    loaded = {}

    def get(name: str) -> Session:
        if name not in loaded:
            loaded[name] = load(corpus_text(name))
        return loaded[name]

    return get
