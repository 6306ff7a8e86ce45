"""Finite set-theoretic model of the calculus.

Values of terms are hereditarily finite sets when they are small enough and
lazy descriptors otherwise:

* ``Fin``       a concrete hereditarily finite set;
* ``Universe``  ``⟦Type i⟧``, approximated by the sets of rank at most ``r + i``;
* ``FunSpace``  ``⟦Πx:A.B⟧`` as a domain plus a codomain map;
* ``IndFamily`` ``⟦d p b⟧``, the slice of an inductive fixpoint at parameters and indices;
* ``Trace``     ``⟦λx:A.t⟧`` over a domain that cannot be materialized.

Membership is answered with a three-valued ``Verdict``: ``no`` is only given
when it is certain, ``unknown`` whenever a bound was hit.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .errors import BoundExceeded, InterpretationUndefined, KernelError
from .hfset import (
    EMPTY,
    HF,
    Rule,
    RuleSet,
    aczel_app,
    aczel_lam,
    as_natural,
    decode_tuple,
    encode_tuple,
    hierarchy,
    lfp,
    lfp_stages,
    natural,
    rank,
    render,
    sort_key,
    unpair,
)
from .kernel import TypeChecker
from .reduction import Reducer
from .schemas import (
    JudgmentResult,
    ModelConfig,
    ReductionConfig,
    SoundnessReport,
    Verdict,
)
from .syntax import (
    App,
    Assum,
    BVar,
    Case,
    Context,
    Def,
    Fix,
    IndRef,
    InductiveBlock,
    Lam,
    LetIn,
    Pi,
    Sort,
    Term,
    Var,
    fresh_name,
    has_loose_bvars,
    instantiate,
    map_subterms,
    mentions_block,
    mk_app,
    open_binder,
    unfold_app,
)

logger = logging.getLogger(__name__)

YES, NO, UNKNOWN = Verdict.YES, Verdict.NO, Verdict.UNKNOWN


class SemValue:
    __slots__ = ()


@dataclass(frozen=True)
class Fin(SemValue):
    value: HF


@dataclass(frozen=True)
class Universe(SemValue):
    level: int


@dataclass(frozen=True, eq=False)
class FunSpace(SemValue):
    domain: SemValue
    codomain: Callable[[SemValue], SemValue]


@dataclass(frozen=True, eq=False)
class Trace(SemValue):
    domain: SemValue
    body: Callable[[SemValue], SemValue]


@dataclass(frozen=True)
class IndFamily(SemValue):
    rules: "InductiveRules"
    index: int
    params: Tuple[SemValue, ...]
    indices: Tuple[SemValue, ...]


PROP_VALUE = Fin(natural(2))
EMPTY_VALUE = Fin(EMPTY)


@dataclass(frozen=True)
class Enumeration:
    items: Tuple
    complete: bool


@dataclass(frozen=True, eq=False)
class Env:
    free: Mapping[str, SemValue] = field(default_factory=dict)
    bound: Tuple[SemValue, ...] = ()

    def push(self, value: SemValue) -> "Env":
        return Env(self.free, self.bound + (value,))

    def closed(self) -> "Env":
        return Env(self.free, ())

    def bind(self, name: str, value: SemValue) -> "Env":
        free = dict(self.free)
        free[name] = value
        return Env(free, self.bound)


# ---------------------------------------------------------------------------
# operations on semantic values


class Semantics:
    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self._lowered: Dict[SemValue, Optional[HF]] = {}

    # -- lowering ---------------------------------------------------------------

    def lower(self, v: SemValue) -> Optional[HF]:
        """The hereditarily finite set denoted by ``v``, if it can be computed."""
        if isinstance(v, Fin):
            return v.value
        if v in self._lowered:
            return self._lowered[v]
        result: Optional[HF] = None
        try:
            if isinstance(v, FunSpace):
                result = self._lower_funspace(v)
            elif isinstance(v, Trace):
                result = self._lower_trace(v)
            elif isinstance(v, IndFamily):
                result = self._lower_family(v)
        except (BoundExceeded, InterpretationUndefined) as exc:
            logger.debug("cannot lower %r: %s", v, exc)
            result = None
        self._lowered[v] = result
        return result

    def lower_strict(self, v: SemValue, what: str) -> HF:
        value = self.lower(v)
        if value is None:
            raise BoundExceeded(f"{what} is not a finite set within the configured bounds")
        return value

    def _lower_funspace(self, v: FunSpace) -> Optional[HF]:
        domain = self.lower(v.domain)
        if domain is None:
            return None
        points = domain.sorted()
        choices = []
        total = 1
        for x in points:
            image = self.lower(v.codomain(Fin(x)))
            if image is None:
                return None
            total *= len(image)
            if total > self.cfg.product_cap:
                return None
            choices.append(image.sorted())
        return HF(
            frozenset(aczel_lam(zip(points, choice)) for choice in itertools.product(*choices))
        )

    def _lower_trace(self, v: Trace) -> Optional[HF]:
        domain = self.lower(v.domain)
        if domain is None or len(domain) > self.cfg.product_cap:
            return None
        graph = []
        for x in domain.sorted():
            y = self.lower(v.body(Fin(x)))
            if y is None:
                return None
            graph.append((x, y))
        return aczel_lam(graph)

    def _lower_family(self, v: IndFamily) -> Optional[HF]:
        items, complete = v.rules.family_members(v.index, v.params, v.indices)
        if not complete:
            return None
        return HF(frozenset(items))

    # -- enumeration ------------------------------------------------------------

    def enumerate(self, v: SemValue) -> Enumeration:
        """Up to ``sample_budget`` elements of ``v``, and whether they are all of them."""
        budget = self.cfg.sample_budget
        lowered = self.lower(v)
        if lowered is not None:
            items = lowered.sorted()
            return Enumeration(tuple(items[:budget]), len(items) <= budget)
        if isinstance(v, Universe):
            items, _ = hierarchy(self.cfg.universe_rank + v.level + 1, budget)
            return Enumeration(tuple(items), False)
        if isinstance(v, IndFamily):
            items, _ = v.rules.family_members(v.index, v.params, v.indices)
            return Enumeration(tuple(items[:budget]), False)
        if isinstance(v, FunSpace):
            return self._enumerate_functions(v)
        return Enumeration((), False)

    def _enumerate_functions(self, v: FunSpace) -> Enumeration:
        domain = self.enumerate(v.domain)
        if not domain.complete:
            return Enumeration((), False)
        images = []
        complete = True
        for x in domain.items:
            image = self.enumerate(v.codomain(Fin(x)))
            complete = complete and image.complete
            images.append(image.items)
        items = []
        for choice in itertools.product(*images):
            if len(items) >= self.cfg.sample_budget:
                return Enumeration(tuple(items), False)
            items.append(aczel_lam(zip(domain.items, choice)))
        return Enumeration(tuple(items), complete)

    # -- application ------------------------------------------------------------

    def apply(self, f: SemValue, x: SemValue) -> SemValue:
        if isinstance(f, Trace):
            if self.mem(x, f.domain) is NO:
                return EMPTY_VALUE
            return f.body(x)
        graph = self.lower(f)
        if graph is None:
            raise InterpretationUndefined("application of a value that is not a function trace")
        arg = self.lower(x)
        if arg is None:
            # an argument outside the hereditarily finite sets never occurs in a finite trace
            return EMPTY_VALUE
        return Fin(aczel_app(graph, arg))

    def apply_all(self, f: SemValue, args: Sequence[SemValue]) -> SemValue:
        for a in args:
            f = self.apply(f, a)
        return f

    # -- membership and equality ------------------------------------------------

    def mem(self, v: SemValue, t: SemValue, depth: Optional[int] = None) -> Verdict:
        depth = self.cfg.fixpoint_depth if depth is None else depth
        if isinstance(t, Fin):
            value = self.lower(v)
            if value is None:
                return UNKNOWN
            return Verdict.of(value in t.value)
        if isinstance(t, Universe):
            if isinstance(v, Universe):
                return Verdict.of(v.level < t.level)
            value = self.lower(v)
            if value is not None and rank(value) <= self.cfg.universe_rank + t.level:
                return YES
            return UNKNOWN
        if isinstance(t, IndFamily):
            value = self.lower(v)
            if value is None:
                return UNKNOWN
            return t.rules.check_member(t.index, t.params, t.indices, value, depth)
        if isinstance(t, FunSpace):
            return self._mem_funspace(v, t)
        lowered = self.lower(t)
        if lowered is not None:
            return self.mem(v, Fin(lowered), depth)
        return UNKNOWN

    def _mem_funspace(self, v: SemValue, t: FunSpace) -> Verdict:
        lowered = self.lower(t)
        if lowered is not None:
            return self.mem(v, Fin(lowered))
        domain = self.enumerate(t.domain)
        verdict = YES if domain.complete else UNKNOWN
        graph = self.lower(v) if isinstance(v, Fin) else None
        if graph is not None and domain.complete:
            points = set(domain.items)
            for element in graph:
                parts = unpair(element)
                if parts is None or parts[0] not in points:
                    return NO
        for x in domain.items:
            try:
                image = self.apply(v, Fin(x))
                verdict = verdict & self.mem(image, t.codomain(Fin(x)))
            except BoundExceeded:
                verdict = verdict & UNKNOWN
            if verdict is NO:
                return NO
        return verdict

    def equal(self, a: SemValue, b: SemValue) -> Verdict:
        if a is b or a == b:
            return YES
        if isinstance(a, Universe) and isinstance(b, Universe):
            return NO
        if isinstance(a, IndFamily) and isinstance(b, IndFamily):
            if a.rules is b.rules and a.index == b.index:
                verdict = YES
                for x, y in zip(a.params + a.indices, b.params + b.indices):
                    verdict = verdict & self.equal(x, y)
                if verdict is YES:
                    return YES
        la, lb = self.lower(a), self.lower(b)
        if la is not None and lb is not None:
            return Verdict.of(la == lb)
        return UNKNOWN


# ---------------------------------------------------------------------------
# inductive rule sets


def _split_premise(domain: Term) -> Tuple[List[Term], Term]:
    """Split ``Π u:H. d' p' w`` into the premise binders and the applied target."""
    hs = []
    while isinstance(domain, Pi):
        hs.append(domain.domain)
        domain = domain.codomain
    return hs, domain


@dataclass(frozen=True)
class ConShape:
    tag: int
    name: str
    target: int
    domains: Tuple[Term, ...]
    recursive: Tuple[bool, ...]
    indices: Tuple[Term, ...]


class InductiveRules(RuleSet):
    """Rules of an inductive block.

    A conclusion ``⟨i, p, b, ⟨k, z⟩⟩`` says that ``⟨k, z⟩`` belongs to the
    ``i``-th type of the block at parameters ``p`` and indices ``b``. Its
    premises are the memberships of the recursive arguments of ``z``.
    """

    def __init__(
        self,
        interp: "Interpreter",
        block: InductiveBlock,
        env: Env,
        fixed_params: Optional[Tuple[HF, ...]] = None,
    ):
        self.interp = interp
        self.sem = interp.sem
        self.block = block
        self.env = env.closed()
        self.n = block.param_count
        self.fixed_params = fixed_params
        self.shapes = tuple(self._shape(con) for con in block.con_names)
        self._views: Dict[Tuple[HF, ...], "InductiveRules"] = {}
        self._members: Dict[Tuple[HF, ...], Tuple[frozenset, bool]] = {}

    def _shape(self, con: str) -> ConShape:
        ty = self.block.con_type(con)
        domains = []
        while isinstance(ty, Pi):
            domains.append(ty.domain)
            ty = ty.codomain
        _, args = unfold_app(ty)
        recursive = tuple(mentions_block(d, self.block) for d in domains[self.n:])
        return ConShape(
            tag=self.block.con_tag(con),
            name=con,
            target=self.block.ind_index(self.block.con_target(con)),
            domains=tuple(domains),
            recursive=recursive,
            indices=tuple(args[self.n:]),
        )

    def restricted(self, params: Tuple[HF, ...]) -> "InductiveRules":
        """The same rules with the parameters fixed."""
        if params not in self._views:
            self._views[params] = InductiveRules(self.interp, self.block, self.env, params)
        return self._views[params]

    def at(self, params: Sequence[HF]) -> "InductiveRules":
        return self.restricted(tuple(params))

    def _eval(self, t: Term, stack: Sequence[SemValue]) -> SemValue:
        env = self.env
        for v in stack:
            env = env.push(v)
        return self.interp.eval(t, env)

    def _telescope(self, domains: Sequence[Term], stack: List[SemValue]) -> Enumeration:
        if not domains:
            return Enumeration(((),), True)
        first = self.sem.enumerate(self._eval(domains[0], stack))
        items = []
        complete = first.complete
        for x in first.items:
            rest = self._telescope(domains[1:], stack + [Fin(x)])
            complete = complete and rest.complete
            items.extend((x,) + tail for tail in rest.items)
            if len(items) > self.sem.cfg.frontier_cap:
                raise BoundExceeded("premise index set is too large")
        return Enumeration(tuple(items), complete)

    def _target(self, tail: Term, stack: List[SemValue]):
        head, args = unfold_app(tail)
        values = [self._eval(a, stack) for a in args]
        return self.block.ind_index(head.name), values[: self.n], values[self.n:]

    # -- top-down membership ---------------------------------------------------

    def check_member(
        self,
        index: int,
        params: Sequence[SemValue],
        indices: Sequence[SemValue],
        value: HF,
        depth: int,
    ) -> Verdict:
        if depth <= 0:
            return UNKNOWN
        items = decode_tuple(value)
        if not items:
            return NO
        tag = as_natural(items[0])
        if tag is None or not 1 <= tag <= len(self.shapes):
            return NO
        shape = self.shapes[tag - 1]
        args = items[1:]
        if shape.target != index or len(args) != len(shape.recursive):
            return NO
        stack: List[SemValue] = list(params)
        verdict = YES
        for j, z in enumerate(args):
            domain = shape.domains[self.n + j]
            if shape.recursive[j]:
                verdict = verdict & self._check_recursive(domain, stack, z, depth)
            else:
                verdict = verdict & self.sem.mem(Fin(z), self._eval(domain, stack), depth)
            if verdict is NO:
                return NO
            stack.append(Fin(z))
        for term, expected in zip(shape.indices, indices):
            verdict = verdict & self.sem.equal(self._eval(term, stack), expected)
            if verdict is NO:
                return NO
        return verdict

    def _check_recursive(self, domain: Term, stack: List[SemValue], z: HF, depth: int) -> Verdict:
        hs, tail = _split_premise(domain)
        try:
            points = self._telescope(hs, stack)
        except BoundExceeded:
            return UNKNOWN
        verdict = YES if points.complete else UNKNOWN
        for us in points.items:
            inner = stack + [Fin(u) for u in us]
            index, params, indices = self._target(tail, inner)
            image = z
            for u in us:
                image = aczel_app(image, u)
            verdict = verdict & self.check_member(index, params, indices, image, depth - 1)
            if verdict is NO:
                return NO
        return verdict

    # -- explicit rules ---------------------------------------------------------

    def rule(self, tag: int, params: Sequence[HF], args: Sequence[HF]) -> Rule:
        """The rule for constructor ``tag`` at parameters ``params`` and arguments ``args``."""
        shape = self.shapes[tag - 1]
        stack: List[SemValue] = [Fin(p) for p in params] + [Fin(a) for a in args]
        indices = [
            self.sem.lower_strict(self._eval(t, stack), "an index") for t in shape.indices
        ]
        conclusion = encode_tuple(
            [natural(shape.target), *params, *indices, encode_tuple([natural(tag), *args])]
        )
        premises = set()
        for j, z in enumerate(args):
            if not shape.recursive[j]:
                continue
            prefix = stack[: self.n + j]
            hs, tail = _split_premise(shape.domains[self.n + j])
            points = self._telescope(hs, prefix)
            if not points.complete:
                raise BoundExceeded(f"premise index set of {shape.name} is not finite")
            for us in points.items:
                inner = prefix + [Fin(u) for u in us]
                index, p2, w2 = self._target(tail, inner)
                image = z
                for u in us:
                    image = aczel_app(image, u)
                premises.add(
                    encode_tuple(
                        [
                            natural(index),
                            *(self.sem.lower_strict(p, "a parameter") for p in p2),
                            *(self.sem.lower_strict(w, "an index") for w in w2),
                            image,
                        ]
                    )
                )
        return Rule(frozenset(premises), conclusion)

    def premises(self, conclusion: HF) -> Optional[frozenset]:
        items = decode_tuple(conclusion)
        if not items:
            return None
        index = as_natural(items[0])
        if index is None or index >= len(self.block.ind_names):
            return None
        ind = self.block.ind_names[index]
        width = self.n + self.block.index_count(ind)
        if len(items) != width + 2:
            return None
        params = items[1 : 1 + self.n]
        if self.fixed_params is not None and tuple(params) != self.fixed_params:
            return None
        value = decode_tuple(items[-1])
        if not value:
            return None
        tag = as_natural(value[0])
        if tag is None or not 1 <= tag <= len(self.shapes):
            return None
        shape = self.shapes[tag - 1]
        if shape.target != index or len(value) - 1 != len(shape.recursive):
            return None
        stack: List[SemValue] = [Fin(p) for p in params]
        for j, z in enumerate(value[1:]):
            if not shape.recursive[j]:
                domain = self._eval(shape.domains[self.n + j], stack)
                if self.sem.mem(Fin(z), domain) is NO:
                    return None
            stack.append(Fin(z))
        try:
            rule = self.rule(tag, params, value[1:])
        except (BoundExceeded, InterpretationUndefined):
            return None
        return rule.premises if rule.conclusion == conclusion else None

    # -- forward enumeration ----------------------------------------------------

    def _parameter_choices(self) -> List[Tuple[HF, ...]]:
        if self.fixed_params is not None:
            return [self.fixed_params]
        domains = []
        ty = self.block.arity(self.block.ind_names[0])
        for _ in range(self.n):
            domains.append(ty.domain)
            ty = ty.codomain
        return list(self._telescope(domains, []).items)

    def conclusions(self, known: frozenset) -> frozenset:
        by_prefix: Dict[Tuple[HF, ...], List[HF]] = {}
        for element in known:
            items = decode_tuple(element)
            if items:
                by_prefix.setdefault(items[:-1], []).append(items[-1])
        results = set()
        for params in self._parameter_choices():
            for shape in self.shapes:
                stack: List[SemValue] = [Fin(p) for p in params]
                for args in self._arguments(shape, stack, 0, by_prefix):
                    inner = stack + [Fin(a) for a in args]
                    indices = [
                        self.sem.lower_strict(self._eval(t, inner), "an index")
                        for t in shape.indices
                    ]
                    results.add(
                        encode_tuple(
                            [
                                natural(shape.target),
                                *params,
                                *indices,
                                encode_tuple([natural(shape.tag), *args]),
                            ]
                        )
                    )
                    if len(results) > self.sem.cfg.frontier_cap:
                        raise BoundExceeded("too many conclusions in one fixpoint step")
        return frozenset(results)

    def _arguments(
        self,
        shape: ConShape,
        stack: List[SemValue],
        j: int,
        by_prefix: Mapping[Tuple[HF, ...], List[HF]],
    ) -> Iterator[Tuple[HF, ...]]:
        if j == len(shape.recursive):
            yield ()
            return
        domain = shape.domains[self.n + j]
        if shape.recursive[j]:
            candidates = self._recursive_candidates(domain, stack, by_prefix)
        else:
            candidates = list(self.sem.enumerate(self._eval(domain, stack)).items)
        for z in candidates:
            for rest in self._arguments(shape, stack + [Fin(z)], j + 1, by_prefix):
                yield (z,) + rest

    def _recursive_candidates(
        self,
        domain: Term,
        stack: List[SemValue],
        by_prefix: Mapping[Tuple[HF, ...], List[HF]],
    ) -> List[HF]:
        hs, tail = _split_premise(domain)
        points = self._telescope(hs, stack)
        if not points.complete:
            raise BoundExceeded("premise index set is not finite")
        options = []
        for us in points.items:
            inner = stack + [Fin(u) for u in us]
            index, params, indices = self._target(tail, inner)
            key = (
                natural(index),
                *(self.sem.lower_strict(p, "a parameter") for p in params),
                *(self.sem.lower_strict(w, "an index") for w in indices),
            )
            options.append(sorted(by_prefix.get(tuple(key), []), key=sort_key))
        if not hs:
            return options[0]
        result = []
        for choice in itertools.product(*options):
            result.append(_curry_graph(list(zip(points.items, choice))))
            if len(result) > self.sem.cfg.frontier_cap:
                raise BoundExceeded("too many functional arguments")
        return result

    # -- slices -------------------------------------------------------------------

    def family_members(
        self, index: int, params: Sequence[SemValue], indices: Sequence[SemValue]
    ) -> Tuple[List[HF], bool]:
        """Elements of the ``index``-th type at ``params``/``indices`` found by iteration."""
        try:
            key = tuple(self.sem.lower_strict(p, "a parameter") for p in params)
            wanted = tuple(self.sem.lower_strict(b, "an index") for b in indices)
        except BoundExceeded:
            return [], False
        if key not in self._members:
            view = self.restricted(key)
            last: frozenset = frozenset()
            complete = False
            try:
                fixpoint = lfp(view, self.sem.cfg)
                last, complete = fixpoint.elements, fixpoint.complete
            except BoundExceeded:
                try:
                    for stage in lfp_stages(view, self.sem.cfg):
                        last = stage
                except BoundExceeded:
                    pass
            self._members[key] = (last, complete)
        elements, complete = self._members[key]
        prefix = (natural(index), *key, *wanted)
        found = []
        for element in elements:
            items = decode_tuple(element)
            if items and items[:-1] == prefix:
                found.append(items[-1])
        found.sort(key=lambda h: (rank(h), len(h)))
        return found, complete


def _curry_graph(entries: List[Tuple[Tuple[HF, ...], HF]]) -> HF:
    """Trace of ``u1 ↦ … ↦ value`` from entries ``((u1, …), value)``."""
    if not entries:
        return EMPTY
    if not entries[0][0]:
        return entries[0][1]
    groups: Dict[HF, List[Tuple[Tuple[HF, ...], HF]]] = {}
    for us, value in entries:
        groups.setdefault(us[0], []).append((us[1:], value))
    return aczel_lam((u, _curry_graph(rest)) for u, rest in groups.items())


# ---------------------------------------------------------------------------
# recursion rule sets


@dataclass(frozen=True)
class RecursiveCall:
    function: int
    args: Tuple[Term, ...]
    placeholder: str


@dataclass(frozen=True)
class FixSchema:
    """Body of one function on one constructor, recursive calls cut out."""

    function: int
    tag: int
    arg_names: Tuple[str, ...]
    con_arg_names: Tuple[str, ...]
    residual: Term
    calls: Tuple[RecursiveCall, ...]


class RecursionRules(RuleSet):
    """Rules of a fix block.

    A conclusion ``⟨a, ⟨k, z⟩, b⟩`` says that the function applied to the
    arguments ``a`` and the constructor value ``⟨k, z⟩`` yields ``b``. The
    premises are the results of its structurally smaller recursive calls.
    When two functions of the block recurse over the same inductive type,
    conclusions and premises carry the function position in front.
    """

    def __init__(self, interp: "Interpreter", fix: Fix, env: Env):
        self.interp = interp
        self.sem = interp.sem
        self.fix = fix
        closure = [fresh_name("env") for _ in env.bound]
        self.free: Dict[str, SemValue] = dict(env.free)
        self.free.update(zip(closure, env.bound))
        closure_vars = [Var(x) for x in closure]
        self.fn_names = [fresh_name(d.name) for d in fix.defs]
        self.types = [instantiate(d.type, closure_vars) for d in fix.defs]
        self.bodies = [
            instantiate(d.body, closure_vars + [Var(f) for f in self.fn_names]) for d in fix.defs
        ]
        self._schemas: Dict[Tuple[int, int], Optional[FixSchema]] = {}
        self._memo: Dict[Tuple, Tuple[SemValue, Tuple]] = {}
        self._functions: Dict[int, SemValue] = {}
        self._binders = [self._recursive_binder(i) for i in range(len(fix.defs))]
        targets = [(b[2], b[3]) for b in self._binders]
        self.tagged = len(set(targets)) < len(targets)

    def _reducer(self) -> Reducer:
        return Reducer(self.interp.ctx, self.interp.reduction)

    def _recursive_binder(self, i: int):
        reducer = self._reducer()
        ty = self.types[i]
        names = []
        domains = []
        for _ in range(self.fix.defs[i].rec_arg):
            ty = reducer.whnf(ty)
            x = fresh_name(ty.name)
            names.append(x)
            domains.append(ty.domain)
            ty = open_binder(ty.codomain, x)
        ty = reducer.whnf(ty)
        head, args = unfold_app(reducer.whnf(ty.domain))
        return names, domains, head.block, head.name, args[: head.block.param_count]

    def arity(self, i: int) -> int:
        return self.fix.defs[i].rec_arg + 1

    def function(self, i: int) -> SemValue:
        """``⟦fix_i⟧`` as a curried trace over the leading binders."""
        if i not in self._functions:
            self._functions[i] = self._curried(i, self.types[i], Env(self.free), ())
        return self._functions[i]

    def _curried(self, i: int, ty: Term, env: Env, args: Tuple[SemValue, ...]) -> SemValue:
        if len(args) == self.arity(i):
            return self.apply(i, args)
        ty = self._reducer().whnf(ty) if not isinstance(ty, Pi) else ty
        x = fresh_name(ty.name)
        domain = self.interp.eval(ty.domain, env)

        def body(v: SemValue) -> SemValue:
            return self._curried(i, open_binder(ty.codomain, x), env.bind(x, v), args + (v,))

        return Trace(domain, body)

    def schema(self, i: int, tag: int) -> Optional[FixSchema]:
        key = (i, tag)
        if key in self._schemas:
            return self._schemas[key]
        names, _, block, ind, params = self._binders[i]
        result = None
        if 1 <= tag <= len(block.con_names):
            con = block.con_names[tag - 1]
            if block.con_target(con) == ind:
                result = self._build_schema(i, tag, names, block, con, params)
        self._schemas[key] = result
        return result

    def _build_schema(
        self,
        i: int,
        tag: int,
        names: Sequence[str],
        block: InductiveBlock,
        con: str,
        params: Sequence[Term],
    ) -> FixSchema:
        ty = block.con_type(con)
        for p in params:
            ty = instantiate(ty.codomain, [p])
        con_args = []
        while isinstance(ty, Pi):
            u = fresh_name(ty.name)
            con_args.append(u)
            ty = open_binder(ty.codomain, u)
        value = mk_app(IndRef(block, con), list(params) + [Var(u) for u in con_args])
        term = mk_app(self.bodies[i], [Var(x) for x in names] + [value])
        normal = self._reducer().normalize(term)
        calls: List[RecursiveCall] = []
        residual = self._cut_calls(normal, calls)
        logger.debug("recursion schema %s/%d: %d calls", self.fix.defs[i].name, tag, len(calls))
        return FixSchema(i, tag, tuple(names), tuple(con_args), residual, tuple(calls))

    def _cut_calls(self, t: Term, calls: List[RecursiveCall]) -> Term:
        head, args = unfold_app(t)
        args = [self._cut_calls(a, calls) for a in args]
        if isinstance(head, Var) and head.name in self.fn_names:
            n = self.fn_names.index(head.name)
            width = self.arity(n)
            if len(args) >= width and not any(has_loose_bvars(a) for a in args[:width]):
                placeholder = fresh_name("X")
                calls.append(RecursiveCall(n, tuple(args[:width]), placeholder))
                return mk_app(Var(placeholder), args[width:])
            return mk_app(head, args)
        return mk_app(map_subterms(head, lambda s: self._cut_calls(s, calls)), args)

    def _run(self, i: int, args: Tuple[SemValue, ...]):
        """Value of ``f_i args`` and the recursive calls it used."""
        key = (i, args[:-1], self.sem.lower(args[-1]))
        if key in self._memo:
            return self._memo[key]
        rec = key[2]
        items = decode_tuple(rec) if rec is not None else None
        tag = as_natural(items[0]) if items else None
        schema = self.schema(i, tag) if tag is not None else None
        if schema is None or len(items) - 1 != len(schema.con_arg_names):
            result = (EMPTY_VALUE, ())
            self._memo[key] = result
            return result
        free = dict(self.free)
        free.update(zip(self.fn_names, (self.function(j) for j in range(len(self.fn_names)))))
        free.update(zip(schema.arg_names, args[:-1]))
        free.update(zip(schema.con_arg_names, (Fin(z) for z in items[1:])))
        used = []
        for call in schema.calls:
            env = Env(free)
            values = tuple(self.interp.eval(a, env) for a in call.args)
            value = self.apply(call.function, values)
            free[call.placeholder] = value
            used.append((call.function, values, value))
        result = (self.interp.eval(schema.residual, Env(free)), tuple(used))
        self._memo[key] = result
        return result

    def apply(self, i: int, args: Tuple[SemValue, ...]) -> SemValue:
        return self._run(i, tuple(args))[0]

    def _head(self, i: int) -> List[HF]:
        return [natural(i)] if self.tagged else []

    def rule(self, i: int, alphas: Sequence[HF], rec: HF) -> Rule:
        args = tuple(Fin(a) for a in alphas) + (Fin(rec),)
        value, used = self._run(i, args)
        lower = self.sem.lower_strict
        premises = frozenset(
            encode_tuple(
                [*self._head(j), *(lower(v, "a call argument") for v in values), lower(out, "a result")]
            )
            for j, values, out in used
        )
        conclusion = encode_tuple([*self._head(i), *alphas, rec, lower(value, "a result")])
        return Rule(premises, conclusion)

    def premises(self, conclusion: HF) -> Optional[frozenset]:
        items = decode_tuple(conclusion)
        if not items:
            return None
        candidates = range(len(self.fix.defs))
        if self.tagged:
            i = as_natural(items[0])
            if i is None or i >= len(self.fix.defs):
                return None
            candidates = [i]
            items = items[1:]
        for i in candidates:
            if len(items) != self.arity(i) + 1:
                continue
            try:
                rule = self.rule(i, items[:-2], items[-2])
            except (BoundExceeded, InterpretationUndefined):
                continue
            if rule.conclusion == conclusion:
                return rule.premises
        return None

    def conclusions(self, known: frozenset) -> frozenset:
        raise BoundExceeded(
            "recursion rules are evaluated on demand; forward enumeration is not available"
        )


# ---------------------------------------------------------------------------
# interpretation of terms


class Interpreter:
    def __init__(
        self,
        ctx: Context,
        cfg: Optional[ModelConfig] = None,
        reduction: Optional[ReductionConfig] = None,
    ):
        self.ctx = ctx
        self.cfg = cfg or ModelConfig()
        self.reduction = reduction or ReductionConfig()
        self.sem = Semantics(self.cfg)
        self._inductives: Dict[Tuple, InductiveRules] = {}
        self._fixes: Dict[Tuple, RecursionRules] = {}

    def env_for(self, valuation: Sequence[SemValue], ctx: Optional[Context] = None) -> Env:
        ctx = self.ctx if ctx is None else ctx
        names = [e.name for e in ctx if isinstance(e, (Assum, Def))]
        if len(names) != len(valuation):
            raise InterpretationUndefined(
                f"valuation has {len(valuation)} values for {len(names)} context entries"
            )
        return Env(dict(zip(names, valuation)))

    def eval(self, t: Term, env: Env) -> SemValue:
        if isinstance(t, Sort):
            return PROP_VALUE if t.is_prop else Universe(t.level)
        if isinstance(t, Var):
            if t.name not in env.free:
                raise InterpretationUndefined(f"no value for {t.name}")
            return env.free[t.name]
        if isinstance(t, BVar):
            return env.bound[-1 - t.index]
        if isinstance(t, Pi):
            domain = self.eval(t.domain, env)
            space = FunSpace(domain, lambda v: self.eval(t.codomain, env.push(v)))
            return self._eager(space, domain)
        if isinstance(t, Lam):
            domain = self.eval(t.domain, env)
            trace = Trace(domain, lambda v: self.eval(t.body, env.push(v)))
            return self._eager(trace, domain)
        if isinstance(t, App):
            return self.sem.apply(self.eval(t.fn, env), self.eval(t.arg, env))
        if isinstance(t, LetIn):
            return self.eval(t.body, env.push(self.eval(t.value, env)))
        if isinstance(t, IndRef):
            if t.is_constructor:
                return self._constructor(t.block, t.name, env)
            return self._inductive(t.block, t.name, env)
        if isinstance(t, Case):
            return self._case(t, env)
        if isinstance(t, Fix):
            return self.fix_rules(t, env).function(t.index)
        raise InterpretationUndefined(f"not a term: {t!r}")

    def _eager(self, value: SemValue, domain: SemValue) -> SemValue:
        if isinstance(domain, Fin):
            lowered = self.sem.lower(value)
            if lowered is not None:
                return Fin(lowered)
        return value

    def describe(self, value: SemValue) -> str:
        if isinstance(value, Universe):
            return f"V(Type{value.level})"
        lowered = self.sem.lower(value)
        if lowered is not None:
            return render(lowered)
        if isinstance(value, IndFamily):
            return f"<inductive {value.rules.block.ind_names[value.index]}>"
        if isinstance(value, FunSpace):
            return "<function space>"
        return "<function>"

    def _curried(
        self,
        domains: Sequence[Term],
        env: Env,
        final: Callable[[Tuple[SemValue, ...]], SemValue],
        args: Tuple[SemValue, ...] = (),
    ) -> SemValue:
        if not domains:
            return final(args)
        domain = self.eval(domains[0], env)
        return Trace(
            domain, lambda v: self._curried(domains[1:], env.push(v), final, args + (v,))
        )

    # -- inductive types --------------------------------------------------------

    def ind_rules(self, block: InductiveBlock, env: Env) -> InductiveRules:
        key = (block, tuple(sorted((k, v) for k, v in env.free.items() if _hashable(v))))
        if key not in self._inductives:
            self._inductives[key] = InductiveRules(self, block, env)
        return self._inductives[key]

    def _inductive(self, block: InductiveBlock, name: str, env: Env) -> SemValue:
        rules = self.ind_rules(block, env)
        index = block.ind_index(name)
        n = block.param_count
        domains = []
        ty = block.arity(name)
        while isinstance(ty, Pi):
            domains.append(ty.domain)
            ty = ty.codomain
        return self._curried(
            domains,
            env.closed(),
            lambda args: IndFamily(rules, index, tuple(args[:n]), tuple(args[n:])),
        )

    def _constructor(self, block: InductiveBlock, name: str, env: Env) -> SemValue:
        tag = block.con_tag(name)
        n = block.param_count
        domains = []
        ty = block.con_type(name)
        while isinstance(ty, Pi):
            domains.append(ty.domain)
            ty = ty.codomain

        def build(args: Tuple[SemValue, ...]) -> SemValue:
            parts = [self.sem.lower_strict(z, f"an argument of {name}") for z in args[n:]]
            return Fin(encode_tuple([natural(tag), *parts]))

        return self._curried(domains, env.closed(), build)

    def _eliminated(self, motive: Term) -> Tuple[InductiveBlock, str]:
        reducer = Reducer(self.ctx, self.reduction)
        walked = reducer.whnf(motive)
        while isinstance(walked, Lam):
            body = reducer.whnf(walked.body)
            if not isinstance(body, Lam):
                found = _inductive_head(reducer.whnf(walked.domain))
                if found is not None:
                    return found
            walked = body
        # not a λ-chain even after unfolding: the last domain of its type
        if not has_loose_bvars(motive):
            try:
                ty = reducer.whnf(TypeChecker(self.reduction).infer(self.ctx, motive))
            except KernelError as exc:
                raise InterpretationUndefined(f"motive has no type here: {exc}") from exc
            while isinstance(ty, Pi):
                x = fresh_name(ty.name)
                codomain = reducer.whnf(open_binder(ty.codomain, x))
                if not isinstance(codomain, Pi):
                    found = _inductive_head(reducer.whnf(ty.domain))
                    if found is not None:
                        return found
                ty = codomain
        raise InterpretationUndefined("cannot tell which inductive type a case eliminates")

    def _case(self, t: Case, env: Env) -> SemValue:
        scrutinee = self.sem.lower(self.eval(t.scrutinee, env))
        items = decode_tuple(scrutinee) if scrutinee is not None else None
        tag = as_natural(items[0]) if items else None
        if tag is None:
            raise InterpretationUndefined("case on a value without a constructor tag")
        block, ind = self._eliminated(t.motive)
        if not 1 <= tag <= len(block.con_names):
            raise InterpretationUndefined(f"no constructor with tag {tag}")
        con = block.con_names[tag - 1]
        siblings = block.constructors_of(ind)
        if con not in siblings or siblings.index(con) >= len(t.branches):
            raise InterpretationUndefined(f"constructor {con} does not build {ind}")
        branch = self.eval(t.branches[siblings.index(con)], env)
        return self.sem.apply_all(branch, [Fin(z) for z in items[1:]])

    # -- recursion ----------------------------------------------------------------

    def fix_rules(self, t: Fix, env: Env) -> RecursionRules:
        key = (t, env.bound, tuple(sorted((k, v) for k, v in env.free.items() if _hashable(v))))
        if key not in self._fixes:
            self._fixes[key] = RecursionRules(self, t, env)
        return self._fixes[key]


def _inductive_head(t: Term) -> Optional[Tuple[InductiveBlock, str]]:
    head, _ = unfold_app(t)
    if isinstance(head, IndRef) and head.block.is_inductive(head.name):
        return head.block, head.name
    return None


def _hashable(v: SemValue) -> bool:
    try:
        hash(v)
    except TypeError:
        return False
    return True


# ---------------------------------------------------------------------------
# public entry points

Valuation = Tuple[SemValue, ...]


def build_ind_rules(
    ctx: Context, valuation: Sequence[SemValue], block: InductiveBlock, cfg: ModelConfig
) -> InductiveRules:
    interp = Interpreter(ctx, cfg)
    return interp.ind_rules(block, interp.env_for(valuation))


def build_fix_rules(
    ctx: Context, valuation: Sequence[SemValue], fix: Fix, cfg: ModelConfig
) -> RecursionRules:
    interp = Interpreter(ctx, cfg)
    return interp.fix_rules(fix, interp.env_for(valuation))


def interp(
    ctx: Context, t: Term, valuation: Sequence[SemValue], cfg: Optional[ModelConfig] = None
) -> SemValue:
    interpreter = Interpreter(ctx, cfg)
    return interpreter.eval(t, interpreter.env_for(valuation))


def interp_ctx(ctx: Context, cfg: Optional[ModelConfig] = None) -> Enumeration:
    """Valuations of ``ctx``, at most ``sample_budget`` of them."""
    interpreter = Interpreter(ctx, cfg)
    return _valuations(interpreter, ctx)


def _valuations(interpreter: Interpreter, ctx: Context) -> Enumeration:
    budget = interpreter.cfg.sample_budget
    sem = interpreter.sem
    partial: List[Tuple[Tuple[str, ...], Valuation]] = [((), ())]
    complete = True
    for entry in ctx:
        if isinstance(entry, Assum):
            extended = []
            for names, values in partial:
                env = Env(dict(zip(names, values)))
                try:
                    carrier = sem.enumerate(interpreter.eval(entry.type, env))
                except InterpretationUndefined:
                    continue
                complete = complete and carrier.complete
                for item in carrier.items:
                    extended.append((names + (entry.name,), values + (Fin(item),)))
            partial = extended
        elif isinstance(entry, Def):
            extended = []
            for names, values in partial:
                env = Env(dict(zip(names, values)))
                try:
                    value = interpreter.eval(entry.body, env)
                    verdict = sem.mem(value, interpreter.eval(entry.type, env))
                except InterpretationUndefined:
                    continue
                if verdict is not NO:
                    extended.append((names + (entry.name,), values + (value,)))
            partial = extended
        if len(partial) > budget:
            partial = partial[:budget]
            complete = False
    return Enumeration(tuple(values for _, values in partial), complete)


def mem_at_depth(v: SemValue, t: SemValue, cfg: Optional[ModelConfig] = None) -> Verdict:
    return Semantics(cfg or ModelConfig()).mem(v, t)


@dataclass(frozen=True)
class Judgment:
    name: str
    context: Context
    term: Term
    type: Term


def check_judgment(judgment: Judgment, cfg: ModelConfig) -> JudgmentResult:
    interpreter = Interpreter(judgment.context, cfg)
    notes: List[str] = []
    verdict = YES
    samples = 0
    try:
        valuations = _valuations(interpreter, judgment.context)
    except KernelError as exc:
        return JudgmentResult(
            name=judgment.name,
            verdict=UNKNOWN,
            depth=cfg.fixpoint_depth,
            samples=0,
            notes=[f"{exc.code}: {exc.message}"],
        )
    for valuation in valuations.items:
        env = interpreter.env_for(valuation)
        samples += 1
        try:
            value = interpreter.eval(judgment.term, env)
            carrier = interpreter.eval(judgment.type, env)
            verdict = verdict & interpreter.sem.mem(value, carrier)
        except (BoundExceeded, InterpretationUndefined) as exc:
            notes.append(f"{exc.code}: {exc.message}")
            verdict = verdict & UNKNOWN
        if verdict is NO:
            break
    if not valuations.complete:
        verdict = verdict & UNKNOWN
    if samples == 0:
        verdict = verdict & UNKNOWN
    return JudgmentResult(
        name=judgment.name,
        verdict=verdict,
        depth=cfg.fixpoint_depth,
        samples=samples,
        complete=valuations.complete,
        notes=notes,
    )


def check_soundness(judgments: Sequence[Judgment], cfg: Optional[ModelConfig] = None) -> SoundnessReport:
    cfg = cfg or ModelConfig()
    results = [check_judgment(j, cfg) for j in judgments]
    for result in results:
        if result.verdict is NO:
            logger.warning("model refutes judgment %s", result.name)
    return SoundnessReport(results=results)
