"""Hereditarily finite sets, trace encoding of functions and rule sets."""

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import BoundExceeded
from .schemas import ModelConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HF:
    """A hereditarily finite set; equality is extensional."""

    elements: frozenset = frozenset()

    def __iter__(self) -> Iterator["HF"]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, item: object) -> bool:
        return item in self.elements

    def __le__(self, other: "HF") -> bool:
        return self.elements <= other.elements

    def union(self, other: "HF") -> "HF":
        return HF(self.elements | other.elements)

    def sorted(self) -> List["HF"]:
        return sorted(self.elements, key=sort_key)

    def __repr__(self) -> str:
        return f"HF({render(self)})"


EMPTY = HF()


def hf(*items: HF) -> HF:
    return HF(frozenset(items))


@lru_cache(maxsize=None)
def sort_key(h: HF) -> Tuple:
    return (rank(h), len(h), tuple(sorted(sort_key(e) for e in h.elements)))


@lru_cache(maxsize=None)
def rank(h: HF) -> int:
    if not h.elements:
        return 0
    return 1 + max(rank(e) for e in h.elements)


@lru_cache(maxsize=None)
def natural(n: int) -> HF:
    """Von Neumann natural: ``n = {0, ..., n-1}``."""
    if n < 0:
        raise ValueError("naturals are non-negative")
    if n == 0:
        return EMPTY
    previous = natural(n - 1)
    return HF(previous.elements | {previous})


def as_natural(h: HF) -> Optional[int]:
    n = len(h)
    return n if natural(n) == h else None


def pair(a: HF, b: HF) -> HF:
    """Kuratowski pair ``{{a}, {a, b}}``."""
    return hf(hf(a), hf(a, b))


def unpair(h: HF) -> Optional[Tuple[HF, HF]]:
    parts = list(h.elements)
    if len(parts) == 1:
        (only,) = parts
        if len(only) == 1:
            (a,) = only.elements
            return a, a
        return None
    if len(parts) != 2:
        return None
    small, big = sorted(parts, key=len)
    if len(small) != 1 or len(big) != 2 or not small <= big:
        return None
    (a,) = small.elements
    (b,) = big.elements - small.elements
    return a, b


def encode_tuple(items: Sequence[HF]) -> HF:
    """Right-nested tuple: ``⟨⟩ = ∅`` and ``⟨a, rest⟩ = (a, ⟨rest⟩)``."""
    result = EMPTY
    for item in reversed(items):
        result = pair(item, result)
    return result


def decode_tuple(h: HF) -> Optional[Tuple[HF, ...]]:
    items = []
    while h != EMPTY:
        parts = unpair(h)
        if parts is None:
            return None
        items.append(parts[0])
        h = parts[1]
    return tuple(items)


def aczel_app(u: HF, x: HF) -> HF:
    """``{z | (x, z) ∈ u}``; defined for any sets."""
    result = set()
    for element in u.elements:
        parts = unpair(element)
        if parts is not None and parts[0] == x:
            result.add(parts[1])
    return HF(frozenset(result))


def aczel_lam(graph: Iterable[Tuple[HF, HF]]) -> HF:
    """Union over the graph of ``{x} × f(x)``."""
    return HF(frozenset(pair(x, z) for x, y in graph for z in y.elements))


def encode_graph(graph: Iterable[Tuple[HF, HF]]) -> HF:
    """Plain set of pairs, used for finite function values in rules."""
    return HF(frozenset(pair(x, y) for x, y in graph))


def hierarchy(level: int, budget: int) -> Tuple[List[HF], bool]:
    """Up to ``budget`` elements of ``V_level`` in canonical order, and whether that is all."""
    if level <= 0:
        return [], True
    below, below_complete = hierarchy(level - 1, budget)
    result: List[HF] = []
    for size in range(len(below) + 1):
        for combo in itertools.combinations(below, size):
            if len(result) >= budget:
                return result, False
            result.append(HF(frozenset(combo)))
    return result, below_complete


def render(h: HF) -> str:
    if h == EMPTY:
        return "0"
    items = decode_tuple(h)
    if items is not None:
        return "⟨" + ",".join(render(i) for i in items) + "⟩"
    n = as_natural(h)
    if n is not None:
        return str(n)
    return "{" + ",".join(render(e) for e in h.sorted()) + "}"


# ---------------------------------------------------------------------------
# rule sets


@dataclass(frozen=True)
class Rule:
    premises: frozenset
    conclusion: HF

    def __str__(self) -> str:
        above = ", ".join(render(p) for p in sorted(self.premises, key=sort_key)) or "∅"
        return f"{{{above}}} / {render(self.conclusion)}"


class RuleSet(ABC):
    """A set of rules ``u/v`` given intensionally."""

    @abstractmethod
    def premises(self, conclusion: HF) -> Optional[frozenset]:
        """Premises of the rule concluding ``conclusion``, or None if there is none."""

    @abstractmethod
    def conclusions(self, known: frozenset) -> frozenset:
        """All conclusions of rules whose premises lie in ``known``."""

    def derivable(self, conclusion: HF, known: frozenset) -> bool:
        premises = self.premises(conclusion)
        return premises is not None and premises <= known


class FiniteRuleSet(RuleSet):
    def __init__(self, rules: Iterable[Rule]):
        self.rules: Tuple[Rule, ...] = tuple(rules)

    def premises(self, conclusion: HF) -> Optional[frozenset]:
        for rule in self.rules:
            if rule.conclusion == conclusion:
                return rule.premises
        return None

    def conclusions(self, known: frozenset) -> frozenset:
        return frozenset(r.conclusion for r in self.rules if r.premises <= known)

    def is_deterministic(self) -> bool:
        seen = {}
        for rule in self.rules:
            if seen.setdefault(rule.conclusion, rule.premises) != rule.premises:
                return False
        return True


@dataclass(frozen=True)
class Fixpoint:
    elements: frozenset
    complete: bool
    depth: int

    @property
    def status(self) -> str:
        return "complete" if self.complete else "truncated-at-depth"

    def __contains__(self, item: object) -> bool:
        return item in self.elements

    def __len__(self) -> int:
        return len(self.elements)


def lfp_stages(rules: RuleSet, cfg: ModelConfig) -> Iterator[frozenset]:
    """Successive approximations ``X_0 = ∅``, ``X_(n+1) = X_n ∪ Γ(X_n)``."""
    current: frozenset = frozenset()
    yield current
    for _ in range(cfg.fixpoint_depth):
        following = current | rules.conclusions(current)
        if len(following) > cfg.frontier_cap:
            raise BoundExceeded(
                f"fixpoint iteration produced {len(following)} elements "
                f"(cap {cfg.frontier_cap})"
            )
        yield following
        if following == current:
            return
        current = following


def lfp(rules: RuleSet, cfg: ModelConfig) -> Fixpoint:
    stages = list(lfp_stages(rules, cfg))
    depth = len(stages) - 1
    last = stages[-1]
    complete = depth > 0 and stages[-2] == last
    if not complete and depth == cfg.fixpoint_depth:
        # one more application tells whether the last stage is already closed
        complete = (last | rules.conclusions(last)) == last
    if complete and depth > 0 and stages[-2] == last:
        depth -= 1
    logger.debug("fixpoint: %d elements, %s", len(last), "complete" if complete else "truncated")
    return Fixpoint(last, complete, depth)
