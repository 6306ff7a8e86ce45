import pytest
from conftest import numeral

from app.errors import FuelExhausted
from app.reduction import Reducer, constructor_head
from app.schemas import ReductionConfig
from app.syntax import EMPTY_CONTEXT, PROP, App, BVar, Fix, Lam, Pi, Sort, Var, unfold_app


def reducer(session, max_steps=None):
    cfg = ReductionConfig() if max_steps is None else ReductionConfig(max_steps=max_steps)
    return Reducer(session.ctx, cfg)


def test_beta(nat_session):
    t = nat_session.parse_term("(fun (x : nat) => S x) O")
    assert reducer(nat_session).normalize(t) == numeral(nat_session, 1)


def test_delta_unfolds_definitions(nat_session):
    assert reducer(nat_session).whnf(Var("two")) == numeral(nat_session, 2)


def test_zeta(nat_session):
    t = nat_session.parse_term("let y := S O in S y")
    assert reducer(nat_session).normalize(t) == numeral(nat_session, 2)


def test_iota_selects_the_constructor_branch(nat_session):
    t = nat_session.parse_term("match two with | O => O | S p => p end")
    assert reducer(nat_session).normalize(t) == numeral(nat_session, 1)


def test_fix_unfolds_on_constructor(nat_session):
    r = reducer(nat_session)
    assert r.normalize(nat_session.parse_term("plus two two")) == numeral(nat_session, 4)
    assert r.fix_unfoldings
    assert all(h.is_constructor for h in r.fix_unfoldings)
    assert constructor_head(numeral(nat_session, 2)).name == "S"


def test_fix_is_stuck_on_a_variable(nat_session):
    t = nat_session.parse_term("fun (n : nat) => plus O n")
    nf = reducer(nat_session).normalize(t)
    assert isinstance(nf, Lam)
    head, args = unfold_app(nf.body)
    assert isinstance(head, Fix)
    assert args[-1] == BVar(0)


def test_fix_reduces_when_recursive_argument_is_known(nat_session):
    t = nat_session.parse_term("fun (n : nat) => plus n O")
    assert reducer(nat_session).normalize(t) == Lam("n", nat_session.resolve("nat"), BVar(0))


def test_fuel_is_bounded():
    omega = Lam("x", PROP, App(BVar(0), BVar(0)))
    with pytest.raises(FuelExhausted) as err:
        Reducer(EMPTY_CONTEXT, ReductionConfig(max_steps=50)).whnf(App(omega, omega))
    assert err.value.rule == "fuel"


def test_conversion_up_to_computation(nat_session):
    r = reducer(nat_session)
    assert r.conv(nat_session.parse_term("plus two one"), Var("three"))
    assert not r.conv(nat_session.parse_term("plus two two"), Var("three"))


def test_cumulativity_chain():
    r = Reducer(EMPTY_CONTEXT)
    assert r.subtype(PROP, Sort(0))
    assert r.subtype(Sort(0), Sort(1))
    assert r.subtype(PROP, Sort(3))
    assert not r.subtype(Sort(0), PROP)
    assert not r.subtype(Sort(1), Sort(0))


def test_cumulativity_under_products():
    r = Reducer(EMPTY_CONTEXT)
    nat = Var("nat")
    assert r.subtype(Pi("_", nat, PROP), Pi("_", nat, Sort(0)))
    assert not r.subtype(Pi("_", PROP, nat), Pi("_", Sort(0), nat))


POSITIVE = [
    "identity.cc",
    "nat.cc",
    "prec.cc",
    "prop_cum.cc",
    "titi.cc",
    "toto.cc",
    "treeforest.cc",
]


def corpus_terms(session):
    """Terms and types of every accepted judgment, each in its own context."""
    for j in session.judgments:
        yield j.context, j.term
        yield j.context, j.type


@pytest.mark.parametrize("name", POSITIVE)
def test_normalize_is_idempotent(name, sessions):
    for ctx, t in corpus_terms(sessions(name)):
        r = Reducer(ctx)
        nf = r.normalize(t)
        assert r.normalize(nf) == nf


@pytest.mark.parametrize("name", POSITIVE)
def test_conversion_is_an_equivalence_on_corpus_terms(name, sessions):
    session = sessions(name)
    r = Reducer(session.ctx)
    terms = [r.normalize(t) for _, t in corpus_terms(session)]
    related = {
        (i, k): r.conv(a, b) for i, a in enumerate(terms) for k, b in enumerate(terms)
    }
    for i in range(len(terms)):
        assert related[i, i]
        for k in range(len(terms)):
            assert related[i, k] == related[k, i]
            if not related[i, k]:
                continue
            for m in range(len(terms)):
                if related[k, m]:
                    assert related[i, m]


@pytest.mark.parametrize("name", POSITIVE)
def test_mutual_subtypes_are_convertible(name, sessions):
    session = sessions(name)
    r = Reducer(session.ctx)
    types = [j.type for j in session.judgments] + [PROP, Sort(0), Sort(1)]
    for a in types:
        for b in types:
            if r.subtype(a, b) and r.subtype(b, a):
                assert r.conv(a, b)
