import random

import pytest
from conftest import numeral_hf

from app.errors import BoundExceeded
from app.hfset import (
    EMPTY,
    FiniteRuleSet,
    Rule,
    aczel_app,
    aczel_lam,
    as_natural,
    decode_tuple,
    encode_tuple,
    hf,
    hierarchy,
    lfp,
    lfp_stages,
    natural,
    pair,
    rank,
    render,
    unpair,
)
from app.schemas import ModelConfig


def test_naturals():
    assert natural(0) == EMPTY
    assert natural(1) == hf(EMPTY)
    assert natural(2) == hf(EMPTY, hf(EMPTY))
    assert [as_natural(natural(n)) for n in range(6)] == list(range(6))
    assert as_natural(hf(hf(EMPTY))) is None
    assert rank(natural(4)) == 4


def test_pairs():
    a, b = natural(1), natural(3)
    assert unpair(pair(a, b)) == (a, b)
    assert unpair(pair(a, a)) == (a, a)
    assert pair(a, b) != pair(b, a)
    assert unpair(natural(2)) is None


def test_tuples():
    items = (natural(2), EMPTY, natural(1))
    assert decode_tuple(encode_tuple(items)) == items
    assert encode_tuple([]) == EMPTY
    assert decode_tuple(natural(3)) is None


def test_render():
    assert render(EMPTY) == "0"
    assert render(natural(2)) == "2"
    assert render(numeral_hf(0)) == "⟨1⟩"
    assert render(numeral_hf(2)) == "⟨2,⟨2,⟨1⟩⟩⟩"
    assert render(hf(hf(natural(2)))) == "{{2}}"


def test_hierarchy_sizes():
    assert [len(hierarchy(level, 100)[0]) for level in range(5)] == [0, 1, 2, 4, 16]
    assert hierarchy(4, 100)[1]
    elements, complete = hierarchy(4, 5)
    assert len(elements) == 5 and not complete
    assert hierarchy(3, 100)[0][0] == EMPTY


@pytest.mark.parametrize("seed", range(20))
def test_aczel_application_inverts_abstraction(seed):
    rnd = random.Random(seed)
    universe, _ = hierarchy(3, 100)
    larger, _ = hierarchy(4, 100)
    for _ in range(50):
        domain = rnd.sample(universe, rnd.randint(1, len(universe)))
        graph = [(x, hf(*rnd.sample(universe, rnd.randint(0, 3)))) for x in domain]
        lam = aczel_lam(graph)
        for x, y in graph:
            assert aczel_app(lam, x) == y
        for x in [x for x in larger if x not in domain][:4]:
            assert aczel_app(lam, x) == EMPTY


def _closure(rules):
    """Least set closed under the rules, computed without stages."""
    known = set()
    changed = True
    while changed:
        changed = False
        for rule in rules:
            if rule.premises <= known and rule.conclusion not in known:
                known.add(rule.conclusion)
                changed = True
    return frozenset(known)


@pytest.mark.parametrize("seed", range(100))
def test_lfp_matches_the_closure(seed):
    rnd = random.Random(seed)
    atoms = [natural(n) for n in range(8)]
    rules = []
    for conclusion in rnd.sample(atoms, rnd.randint(1, len(atoms))):
        premises = frozenset(rnd.sample(atoms, rnd.randint(0, 3)))
        rules.append(Rule(premises, conclusion))
    result = lfp(FiniteRuleSet(rules), ModelConfig(fixpoint_depth=64))
    assert result.complete
    assert result.elements == _closure(rules)


def _chain(length):
    atoms = [natural(n) for n in range(length)]
    return FiniteRuleSet(
        [Rule(frozenset(), atoms[0])]
        + [Rule(frozenset({atoms[i]}), atoms[i + 1]) for i in range(length - 1)]
    )


def test_lfp_truncated_at_depth():
    result = lfp(_chain(10), ModelConfig(fixpoint_depth=3))
    assert result.elements == frozenset(natural(n) for n in range(3))
    assert not result.complete
    assert result.status == "truncated-at-depth"
    assert result.depth == 3


def test_lfp_closed_exactly_at_depth():
    result = lfp(_chain(3), ModelConfig(fixpoint_depth=3))
    assert result.complete and len(result) == 3
    result = lfp(_chain(3), ModelConfig(fixpoint_depth=10))
    assert result.complete and result.depth == 3


def test_lfp_respects_the_frontier_cap():
    rules = FiniteRuleSet([Rule(frozenset(), natural(n)) for n in range(5)])
    with pytest.raises(BoundExceeded):
        lfp(rules, ModelConfig(fixpoint_depth=4, frontier_cap=3))


def test_finite_rule_sets_can_be_non_deterministic():
    a, b = natural(1), natural(2)
    assert FiniteRuleSet([Rule(frozenset(), a), Rule(frozenset({a}), b)]).is_deterministic()
    assert not FiniteRuleSet(
        [Rule(frozenset(), b), Rule(frozenset({a}), b)]
    ).is_deterministic()


def _random_rules(rnd):
    atoms = [natural(n) for n in range(8)]
    return FiniteRuleSet(
        Rule(frozenset(rnd.sample(atoms, rnd.randint(0, 2))), c)
        for c in rnd.sample(atoms, rnd.randint(1, len(atoms)))
    ), atoms


@pytest.mark.parametrize("seed", range(30))
def test_rule_operator_is_monotone(seed):
    rnd = random.Random(1000 + seed)
    rules, atoms = _random_rules(rnd)
    smaller = frozenset(rnd.sample(atoms, rnd.randint(0, 4)))
    larger = smaller | frozenset(rnd.sample(atoms, rnd.randint(0, 4)))
    assert rules.conclusions(smaller) <= rules.conclusions(larger)


@pytest.mark.parametrize("seed", range(100))
def test_lfp_is_least(seed):
    rnd = random.Random(2000 + seed)
    rules, _ = _random_rules(rnd)
    cfg = ModelConfig(fixpoint_depth=64)
    stages = list(lfp_stages(rules, cfg))
    assert all(a <= b for a, b in zip(stages, stages[1:]))
    fixpoint = lfp(rules, cfg).elements
    assert rules.conclusions(fixpoint) <= fixpoint
    for x in fixpoint:
        without = fixpoint - {x}
        assert not rules.conclusions(without) <= without
