import itertools
import random

import pytest
from conftest import NAT_SOURCE, corpus_text, load, numeral, numeral_hf

from app.errors import BoundExceeded
from app.hfset import (
    EMPTY,
    aczel_app,
    aczel_lam,
    encode_tuple,
    hf,
    lfp,
    natural,
)
from app.model import (
    PROP_VALUE,
    Fin,
    FunSpace,
    Judgment,
    Semantics,
    Universe,
    build_fix_rules,
    build_ind_rules,
    check_judgment,
    check_soundness,
    interp,
    interp_ctx,
    mem_at_depth,
)
from app.schemas import ModelConfig, Verdict
from app.syntax import (
    EMPTY_CONTEXT,
    PROP,
    BVar,
    Lam,
    Pi,
    Sort,
    Var,
    mk_app,
    open_binder,
    substitute,
)

YES, NO, UNKNOWN = Verdict.YES, Verdict.NO, Verdict.UNKNOWN

TREE_FOREST = """
Inductive tree (A : Type0) : Type0 :=
  | node : A -> forest A -> tree A
with forest (A : Type0) : Type0 :=
  | emptyf : forest A
  | consf : tree A -> forest A -> forest A.
"""

PROP_IDENTITY_TYPE = Pi("a", PROP, Pi("_", BVar(0), BVar(1)))
PROP_IDENTITY = Lam("a", PROP, Lam("p", BVar(0), BVar(0)))


def first_valuation(ctx, cfg):
    valuations = interp_ctx(ctx, cfg)
    assert valuations.items
    return valuations.items[0]


def judgment(session, name):
    return next(j for j in session.judgments if j.name == name)


# -- verdicts -------------------------------------------------------------------


def test_verdict_conjunction():
    assert YES & YES is YES
    assert YES & UNKNOWN is UNKNOWN
    assert UNKNOWN & NO is NO
    assert Verdict.of(False) is NO


# -- interpretation of types and terms ----------------------------------------


def test_consistency_witness_is_empty():
    assert interp(EMPTY_CONTEXT, Pi("x", PROP, BVar(0)), ()) == Fin(EMPTY)
    assert mem_at_depth(Fin(numeral_hf(0)), Fin(EMPTY)) is NO


def test_prop_and_universes():
    assert interp(EMPTY_CONTEXT, PROP, ()) == PROP_VALUE == Fin(natural(2))
    assert interp(EMPTY_CONTEXT, Sort(1), ()) == Universe(1)


def test_proof_irrelevance_of_the_polymorphic_identity():
    assert interp(EMPTY_CONTEXT, PROP_IDENTITY_TYPE, ()) == Fin(natural(1))
    assert interp(EMPTY_CONTEXT, PROP_IDENTITY, ()) == Fin(EMPTY)


def test_corpus_proofs_denote_the_empty_set():
    session = load(
        corpus_text("prop_cum.cc")
        + "Definition q : P := fun (b : Prop) (y : b) => id b y.\n"
    )
    assert session.ok, session.diagnostics
    cfg = ModelConfig(fixpoint_depth=8, universe_rank=2, sample_budget=16)
    valuation = first_valuation(session.ctx, cfg)
    names = [e.name for e in session.ctx]
    values = dict(zip(names, valuation))
    assert values["P"] == Fin(natural(1))
    assert values["p"] == Fin(EMPTY)
    assert values["q"] == values["p"]


def test_type_constructor_applied_to_a_proposition(small_model):
    # I P denotes 1 whether P was declared in Prop or in Type0
    session = load(
        "Definition P : Prop := forall (a : Prop), a -> a.\n"
        "Definition Q : Type0 := forall (a : Prop), a -> a.\n"
        "Definition I : Type0 -> Type0 := fun (A : Type0) => A -> A.\n"
    )
    assert session.ok, session.diagnostics
    valuation = first_valuation(session.ctx, small_model)
    for name in ("P", "Q"):
        t = session.parse_term(f"I {name}")
        assert interp(session.ctx, t, valuation, small_model) == Fin(natural(1))


def test_interp_ctx_clauses():
    empty = interp_ctx(EMPTY_CONTEXT)
    assert empty.items == ((),) and empty.complete
    props = interp_ctx(EMPTY_CONTEXT.assume("P", PROP))
    assert props.items == ((Fin(EMPTY),), (Fin(natural(1)),))
    assert props.complete
    session = load(NAT_SOURCE + "Definition x : nat := O.\n")
    defined = interp_ctx(session.ctx)
    assert defined.items == ((Fin(numeral_hf(0)),),)


def test_interp_ctx_respects_the_sample_budget():
    ctx = EMPTY_CONTEXT.assume("P", PROP).assume("Q", PROP).assume("R", PROP)
    full = interp_ctx(ctx, ModelConfig(sample_budget=64))
    assert len(full.items) == 8 and full.complete
    cut = interp_ctx(ctx, ModelConfig(sample_budget=3))
    assert len(cut.items) == 3 and not cut.complete


def test_addition_against_a_unary_oracle(nat_session, small_model):
    s = nat_session
    valuation = first_valuation(s.ctx, small_model)
    for m, n in itertools.product(range(6), repeat=2):
        t = mk_app(Var("plus"), [numeral(s, m), numeral(s, n)])
        assert s.normalize(t) == numeral(s, m + n)
        assert interp(s.ctx, t, valuation, small_model) == Fin(numeral_hf(m + n))


def test_let_annotation_does_not_matter():
    session = load("Definition P : Prop := forall (a : Prop), a -> a.\n")
    values = set()
    for annotation in ("Prop", "Type0"):
        t = session.parse_term(f"let y := forall (a : Prop), a -> a : {annotation} in y -> y")
        session.checker.infer(session.ctx, t)
        values.add(interp(session.ctx, t, first_valuation(session.ctx, None)))
    assert values == {Fin(natural(1))}


def test_case_with_a_defined_motive(small_model):
    session = load(corpus_text("nat.cc") + "Definition P : nat -> Type0 := fun (y : nat) => nat.\n")
    assert session.ok, session.diagnostics
    t = session.parse_term("case S O return P of O | fun (p : nat) => p end")
    session.checker.infer(session.ctx, t)
    valuation = first_valuation(session.ctx, small_model)
    assert interp(session.ctx, t, valuation, small_model) == Fin(numeral_hf(0))


def test_case_with_a_motive_from_the_context(small_model):
    session = load(
        "Inductive bool : Type0 := tt : bool | ff : bool.\n"
        "Parameter Q : bool -> Prop.\n"
        "Parameter q1 : Q tt.\n"
        "Parameter q2 : Q ff.\n"
    )
    assert session.ok, session.diagnostics
    t = session.parse_term("case ff return Q of q1 | q2 end")
    session.checker.infer(session.ctx, t)
    valuation = first_valuation(session.ctx, small_model)
    q2 = valuation[2]
    assert interp(session.ctx, t, valuation, small_model) == q2


BODIES = [
    "S {x}",
    "plus {x} two",
    "plus {x} {x}",
    "plus (S {x}) O",
    "{x}",
    "match {x} with | O => one | S p => p end",
]


def test_beta_soundness(nat_session, small_model):
    s = nat_session
    valuation = first_valuation(s.ctx, small_model)
    rnd = random.Random(7)
    for _ in range(500):
        body = rnd.choice(BODIES)
        arg = "(" + _numeral_text(rnd.randint(0, 4)) + ")"
        redex = s.parse_term(f"(fun (y : nat) => {body.format(x='y')}) {arg}")
        contractum = s.parse_term(body.format(x=arg))
        left = interp(s.ctx, redex, valuation, small_model)
        right = interp(s.ctx, contractum, valuation, small_model)
        assert left == right


def test_substitutivity(nat_session, small_model):
    s = nat_session
    valuation = first_valuation(s.ctx, small_model)
    nat = s.parse_term("nat")
    extended = s.ctx.assume("x", nat)
    rnd = random.Random(11)
    for _ in range(500):
        k = rnd.randint(0, 4)
        u = numeral(s, k)
        closed = s.parse_term("fun (x : nat) => " + rnd.choice(BODIES).format(x="x"))
        t = open_binder(closed.body, "x")
        alpha = interp(s.ctx, u, valuation, small_model)
        assert alpha == Fin(numeral_hf(k))
        left = interp(s.ctx, substitute(t, "x", u), valuation, small_model)
        right = interp(extended, t, valuation + (alpha,), small_model)
        assert left == right


def _numeral_text(k):
    return "O" if k == 0 else "S (" + _numeral_text(k - 1) + ")"


# -- membership -----------------------------------------------------------------


def test_membership_in_an_inductive_family():
    session = load(NAT_SOURCE)
    nat = interp(session.ctx, session.resolve("nat"), ())
    assert mem_at_depth(Fin(numeral_hf(1)), nat, ModelConfig(fixpoint_depth=4)) is YES
    assert mem_at_depth(Fin(natural(3)), nat, ModelConfig(fixpoint_depth=4)) is NO
    assert mem_at_depth(Fin(numeral_hf(6)), nat, ModelConfig(fixpoint_depth=3)) is UNKNOWN


def test_membership_in_universes():
    cfg = ModelConfig(universe_rank=2)
    assert mem_at_depth(Universe(0), Universe(1), cfg) is YES
    assert mem_at_depth(Universe(1), Universe(0), cfg) is NO
    assert mem_at_depth(PROP_VALUE, Universe(0), cfg) is YES
    tall = hf(hf(hf(hf(EMPTY))))
    assert mem_at_depth(Fin(tall), Universe(0), cfg) is UNKNOWN


def test_membership_in_finite_function_spaces():
    space = FunSpace(Fin(natural(2)), lambda x: PROP_VALUE)
    identity = Fin(aczel_lam([(EMPTY, EMPTY), (natural(1), natural(1))]))
    assert mem_at_depth(identity, space) is YES
    stray = Fin(aczel_lam([(natural(3), natural(1))]))
    assert mem_at_depth(stray, space) is NO
    assert mem_at_depth(Fin(EMPTY), Fin(natural(1))) is YES


@pytest.mark.parametrize("size", range(4))
def test_products_of_subsingletons(size):
    sem = Semantics(ModelConfig())
    domain = natural(size)
    points = domain.sorted()
    for images in itertools.product([EMPTY, natural(1)], repeat=size):
        table = dict(zip(points, images))
        space = sem.lower(FunSpace(Fin(domain), lambda x: Fin(table[x.value])))
        assert space <= natural(1)
        assert (space == natural(1)) == all(image == natural(1) for image in images)


# -- inductive rule sets --------------------------------------------------------


def test_nat_rules():
    session = load(NAT_SOURCE)
    block = session.ctx.blocks()[0]
    rules = build_ind_rules(session.ctx, (), block, ModelConfig())
    zero = encode_tuple([natural(0), numeral_hf(0)])
    one = encode_tuple([natural(0), numeral_hf(1)])
    base = rules.rule(1, (), ())
    assert base.premises == frozenset() and base.conclusion == zero
    step = rules.rule(2, (), (numeral_hf(0),))
    assert step.premises == frozenset({zero}) and step.conclusion == one
    assert rules.premises(one) == frozenset({zero})
    assert rules.premises(encode_tuple([natural(0), natural(3)])) is None


@pytest.mark.parametrize("depth", [1, 4, 6])
def test_nat_fixpoint_holds_the_numerals_below_depth(depth):
    session = load(NAT_SOURCE)
    cfg = ModelConfig(fixpoint_depth=depth)
    rules = build_ind_rules(session.ctx, (), session.ctx.blocks()[0], cfg)
    result = lfp(rules, cfg)
    assert not result.complete
    assert result.elements == frozenset(
        encode_tuple([natural(0), numeral_hf(j)]) for j in range(depth)
    )


def test_tree_forest_fixpoint_at_a_two_element_parameter():
    session = load(TREE_FOREST)
    cfg = ModelConfig(fixpoint_depth=3)
    A = natural(2)
    rules = build_ind_rules(session.ctx, (), session.ctx.blocks()[0], cfg).at([A])
    result = lfp(rules, cfg)
    emptyf = encode_tuple([natural(2)])
    assert encode_tuple([natural(1), A, emptyf]) in result
    for a in (EMPTY, natural(1)):
        assert encode_tuple([natural(0), A, encode_tuple([natural(1), a, emptyf])]) in result


def test_parameters_stay_out_of_constructor_tuples():
    session = load(corpus_text("titi.cc"))
    block = session.ctx.blocks()[1]
    rules = build_ind_rules(session.ctx, (), block, ModelConfig())
    x = natural(2)
    assert rules.rule(1, (x,), ()).conclusion == encode_tuple(
        [natural(0), x, encode_tuple([natural(1)])]
    )
    # titi nat in the premises has no finite parameter value
    with pytest.raises(BoundExceeded):
        rules.rule(2, (x,), (numeral_hf(0), numeral_hf(0)))


def test_indices_appear_inside_constructor_tuples():
    session = load(corpus_text("toto.cc"))
    block = session.ctx.blocks()[1]
    rules = build_ind_rules(session.ctx, (), block, ModelConfig())
    x = natural(2)
    assert rules.rule(1, (), (x,)).conclusion == encode_tuple(
        [natural(0), x, encode_tuple([natural(1), x])]
    )


def test_family_members_checked_top_down(small_model, sessions):
    titi = sessions("titi.cc")
    verdicts = [check_judgment(j, small_model).verdict for j in titi.judgments]
    assert verdicts[:2] == [YES, YES]


# -- recursion rule sets ----------------------------------------------------------


def test_plus_rules(nat_session, small_model):
    j = judgment(nat_session, "plus")
    rules = build_fix_rules(j.context, first_valuation(j.context, small_model), j.term, small_model)
    m = numeral_hf(2)
    base = rules.rule(0, (m,), numeral_hf(0))
    assert base.premises == frozenset()
    assert base.conclusion == encode_tuple([m, numeral_hf(0), m])
    step = rules.rule(0, (m,), numeral_hf(2))
    assert step.premises == frozenset({encode_tuple([m, numeral_hf(1), numeral_hf(3)])})
    assert step.conclusion == encode_tuple([m, numeral_hf(2), numeral_hf(4)])
    assert rules.premises(step.conclusion) == step.premises
    assert rules.premises(encode_tuple([m, numeral_hf(2), numeral_hf(2)])) is None
    with pytest.raises(BoundExceeded):
        rules.conclusions(frozenset())


def test_primitive_recursion_rules(sessions, small_model):
    s = sessions("prec.cc")
    j = judgment(s, "PRec")
    rules = build_fix_rules(j.context, (), j.term, small_model)
    A, g = natural(2), EMPTY
    negate = aczel_lam([(EMPTY, natural(1)), (natural(1), EMPTY)])
    h = aczel_lam([(numeral_hf(k), negate) for k in range(4)])
    assert aczel_app(aczel_app(h, numeral_hf(0)), g) == natural(1)

    base = rules.rule(0, (A, g, h), numeral_hf(0))
    assert base.premises == frozenset()
    assert base.conclusion == encode_tuple([A, g, h, numeral_hf(0), g])

    step = rules.rule(0, (A, g, h), numeral_hf(1))
    assert step.premises == frozenset({encode_tuple([A, g, h, numeral_hf(0), g])})
    assert step.conclusion == encode_tuple([A, g, h, numeral_hf(1), natural(1)])
    assert rules.apply(0, tuple(Fin(v) for v in (A, g, h, numeral_hf(2)))) == Fin(EMPTY)


# trees are (label, children); labels index into A = {0, 1}
TREES = [
    ("a", []),
    ("a", [("b", [])]),
    ("a", [("a", []), ("b", [])]),
    ("a", [("b", [("a", [])])]),
    ("a", [("b", [("a", []), ("b", [])]), ("a", [])]),
]
LABELS = {"a": EMPTY, "b": natural(1)}


def tree_size(tree):
    return 1 + sum(tree_size(child) for child in tree[1])


def tree_text(tree):
    return f"node nat O ({forest_text(tree[1])})"


def forest_text(children):
    if not children:
        return "emptyf nat"
    return f"consf nat ({tree_text(children[0])}) ({forest_text(children[1:])})"


def tree_hf(tree):
    return encode_tuple([natural(1), LABELS[tree[0]], forest_hf(tree[1])])


def forest_hf(children):
    if not children:
        return encode_tuple([natural(2)])
    return encode_tuple([natural(3), tree_hf(children[0]), forest_hf(children[1:])])


@pytest.mark.parametrize("tree", TREES, ids=[str(tree_size(t)) for t in TREES])
def test_tree_sizes(tree, sessions, small_model):
    s = sessions("treeforest.cc")
    expected = tree_size(tree)
    t = s.parse_term(f"Tsize nat ({tree_text(tree)})")
    assert s.normalize(t) == numeral(s, expected)

    j = judgment(s, "Tsize")
    valuation = first_valuation(j.context, small_model)
    rules = build_fix_rules(j.context, valuation, j.term, small_model)
    A = natural(2)
    rule = rules.rule(0, (A,), tree_hf(tree))
    assert rule.conclusion == encode_tuple([A, tree_hf(tree), numeral_hf(expected)])
    assert rules.premises(rule.conclusion) == rule.premises
    assert rules.apply(0, (Fin(A), Fin(tree_hf(tree)))) == Fin(numeral_hf(expected))


# -- soundness ----------------------------------------------------------------------


def test_polymorphic_identity_judgment_is_sound():
    report = check_soundness(
        [Judgment("pid", EMPTY_CONTEXT, PROP_IDENTITY, PROP_IDENTITY_TYPE)]
    )
    assert [r.verdict for r in report.results] == [YES]
    assert report.results[0].samples == 1


def test_a_false_judgment_is_refuted():
    report = check_soundness([Judgment("bad", EMPTY_CONTEXT, PROP, Pi("x", PROP, BVar(0)))])
    assert not report.ok
    assert report.count(NO) == 1


POSITIVE = [
    "nat.cc",
    "treeforest.cc",
    "toto.cc",
    "titi.cc",
    "prec.cc",
    "identity.cc",
    "prop_cum.cc",
]


@pytest.mark.parametrize("name", POSITIVE)
def test_soundness_suite_never_refutes(name, sessions):
    cfg = ModelConfig(fixpoint_depth=8, universe_rank=2, sample_budget=64)
    report = check_soundness(sessions(name).judgments, cfg)
    assert report.ok, report.render()


@pytest.mark.parametrize(
    "name, judgment_name",
    [("nat.cc", "two"), ("identity.cc", "pid"), ("prop_cum.cc", "p"), ("prop_cum.cc", "IP")],
)
def test_finite_judgments_are_confirmed(name, judgment_name, sessions):
    cfg = ModelConfig(fixpoint_depth=8, universe_rank=2, sample_budget=64)
    result = check_judgment(judgment(sessions(name), judgment_name), cfg)
    assert result.verdict is YES, result.notes
