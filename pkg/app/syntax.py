"""Terms, contexts, substitution and sizes.

Binders are locally nameless: bound occurrences are de Bruijn indices
(``BVar``), free occurrences are names (``Var``). Binder names are kept as
printing hints only and never take part in equality, so ``==`` on terms is
alpha-equivalence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

_fresh_counter = itertools.count(1)


def fresh_name(hint: str = "x") -> str:
    """Return a name that no parsed identifier can collide with."""
    base = hint.split("#", 1)[0] or "x"
    return f"{base}#{next(_fresh_counter)}"


def base_name(name: str) -> str:
    return name.split("#", 1)[0] or "x"


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class BVar(Term):
    index: int


@dataclass(frozen=True)
class Sort(Term):
    """``level=None`` is Prop, an integer ``i`` is ``Type i``."""

    level: Optional[int] = None

    @property
    def is_prop(self) -> bool:
        return self.level is None

    def __str__(self) -> str:
        return "Prop" if self.level is None else f"Type{self.level}"


PROP = Sort(None)


def type_sort(level: int) -> Sort:
    if level < 0:
        raise ValueError("universe levels are non-negative")
    return Sort(level)


@dataclass(frozen=True)
class Pi(Term):
    name: str = field(compare=False)
    domain: Term
    codomain: Term


@dataclass(frozen=True)
class Lam(Term):
    name: str = field(compare=False)
    domain: Term
    body: Term


@dataclass(frozen=True)
class LetIn(Term):
    name: str = field(compare=False)
    value: Term
    value_type: Optional[Term]
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Case(Term):
    scrutinee: Term
    motive: Term
    branches: Tuple[Term, ...]


@dataclass(frozen=True)
class InductiveBlock:
    """A block ``Ind_n{Δ_I := Δ_C}``.

    Arities are closed with respect to the block. Constructor types live
    under ``len(ind_decls)`` binders, one per inductive name, the last
    inductive being the innermost binder.
    """

    param_count: int
    ind_decls: Tuple[Tuple[str, Term], ...]
    con_decls: Tuple[Tuple[str, Term], ...]

    @classmethod
    def build(
        cls,
        param_count: int,
        inds: Sequence[Tuple[str, Term]],
        cons: Sequence[Tuple[str, Term]],
    ) -> "InductiveBlock":
        """Build a block from constructor types that mention inductive names as ``Var``."""
        names = [name for name, _ in inds]
        return cls(
            param_count,
            tuple((name, arity) for name, arity in inds),
            tuple((name, abstract(ty, names)) for name, ty in cons),
        )

    @cached_property
    def ind_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.ind_decls)

    @cached_property
    def con_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.con_decls)

    @property
    def names(self) -> Tuple[str, ...]:
        return self.ind_names + self.con_names

    def is_inductive(self, name: str) -> bool:
        return name in self.ind_names

    def is_constructor(self, name: str) -> bool:
        return name in self.con_names

    def ind_index(self, name: str) -> int:
        return self.ind_names.index(name)

    def arity(self, name: str) -> Term:
        return self.ind_decls[self.ind_index(name)][1]

    def con_tag(self, name: str) -> int:
        """1-based position of a constructor in Δ_C."""
        return self.con_names.index(name) + 1

    def con_type(self, name: str) -> Term:
        """Constructor type with inductive names replaced by references into the block."""
        raw = self.con_decls[self.con_names.index(name)][1]
        return instantiate(raw, [IndRef(self, d) for d in self.ind_names])

    def con_target(self, name: str) -> str:
        ty = self.con_decls[self.con_names.index(name)][1]
        while isinstance(ty, Pi):
            ty = ty.codomain
        head, _ = unfold_app(ty)
        depth = _pi_depth(self.con_decls[self.con_names.index(name)][1])
        if isinstance(head, BVar) and depth <= head.index < depth + len(self.ind_names):
            return self.ind_names[len(self.ind_names) - 1 - (head.index - depth)]
        raise ValueError(f"constructor {name} does not build an inductive of its block")

    def constructors_of(self, ind: str) -> List[str]:
        result = []
        for con in self.con_names:
            try:
                if self.con_target(con) == ind:
                    result.append(con)
            except ValueError:
                continue
        return result

    def index_count(self, ind: str) -> int:
        return _pi_depth(self.arity(ind)) - self.param_count

    @cached_property
    def _hash(self) -> int:
        return hash((self.param_count, self.ind_decls, self.con_decls))

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"InductiveBlock({', '.join(self.names)})"


def _pi_depth(ty: Term) -> int:
    depth = 0
    while isinstance(ty, Pi):
        depth += 1
        ty = ty.codomain
    return depth


@dataclass(frozen=True)
class IndRef(Term):
    block: InductiveBlock
    name: str

    @property
    def is_constructor(self) -> bool:
        return self.block.is_constructor(self.name)


@dataclass(frozen=True)
class FixDef:
    """One function of a fix block; ``body`` sits under one binder per function."""

    name: str = field(compare=False)
    rec_arg: int
    type: Term
    body: Term


@dataclass(frozen=True)
class Fix(Term):
    index: int
    defs: Tuple[FixDef, ...]


# ---------------------------------------------------------------------------
# generic traversal


def _map(t: Term, on_leaf: Callable[[Term, int], Term], depth: int, into_blocks: bool) -> Term:
    """Rebuild ``t`` applying ``on_leaf`` to every Var/BVar under ``depth`` binders."""

    def go(t: Term, d: int) -> Term:
        if isinstance(t, (Var, BVar)):
            return on_leaf(t, d)
        if isinstance(t, Sort):
            return t
        if isinstance(t, App):
            return App(go(t.fn, d), go(t.arg, d))
        if isinstance(t, Pi):
            return Pi(t.name, go(t.domain, d), go(t.codomain, d + 1))
        if isinstance(t, Lam):
            return Lam(t.name, go(t.domain, d), go(t.body, d + 1))
        if isinstance(t, LetIn):
            ann = None if t.value_type is None else go(t.value_type, d)
            return LetIn(t.name, go(t.value, d), ann, go(t.body, d + 1))
        if isinstance(t, Case):
            return Case(go(t.scrutinee, d), go(t.motive, d), tuple(go(b, d) for b in t.branches))
        if isinstance(t, Fix):
            n = len(t.defs)
            return Fix(
                t.index,
                tuple(FixDef(f.name, f.rec_arg, go(f.type, d), go(f.body, d + n)) for f in t.defs),
            )
        if isinstance(t, IndRef):
            if not into_blocks:
                return t
            block = t.block
            n = len(block.ind_decls)
            new_block = InductiveBlock(
                block.param_count,
                tuple((name, go(ty, d)) for name, ty in block.ind_decls),
                tuple((name, go(ty, d + n)) for name, ty in block.con_decls),
            )
            return t if new_block == block else IndRef(new_block, t.name)
        raise TypeError(f"not a term: {t!r}")

    return go(t, depth)


def instantiate(t: Term, values: Sequence[Term]) -> Term:
    """Replace the outermost ``len(values)`` loose indices; ``values[-1]`` is index 0."""
    if not values:
        return t
    n = len(values)

    def leaf(v: Term, d: int) -> Term:
        if isinstance(v, BVar) and v.index >= d:
            k = v.index - d
            if k < n:
                return values[n - 1 - k]
            return BVar(v.index - n)
        return v

    return _map(t, leaf, 0, into_blocks=False)


def abstract(t: Term, names: Sequence[str]) -> Term:
    """Turn free ``Var(names[j])`` into loose indices; ``names[-1]`` becomes index 0."""
    if not names:
        return t
    n = len(names)
    position = {name: j for j, name in enumerate(names)}

    def leaf(v: Term, d: int) -> Term:
        if isinstance(v, Var) and v.name in position:
            return BVar(d + n - 1 - position[v.name])
        if isinstance(v, BVar) and v.index >= d:
            return BVar(v.index + n)
        return v

    return _map(t, leaf, 0, into_blocks=False)


def open_binder(body: Term, name: str) -> Term:
    return instantiate(body, [Var(name)])


def close_binder(t: Term, name: str) -> Term:
    return abstract(t, [name])


def has_loose_bvars(t: Term) -> bool:
    found = False

    def leaf(v: Term, d: int) -> Term:
        nonlocal found
        if isinstance(v, BVar) and v.index >= d:
            found = True
        return v

    _map(t, leaf, 0, into_blocks=False)
    return found


def free_vars(t: Term) -> frozenset:
    names = set()

    def leaf(v: Term, d: int) -> Term:
        if isinstance(v, Var):
            names.add(v.name)
        return v

    _map(t, leaf, 0, into_blocks=True)
    return frozenset(names)


Bindings = Union[Mapping[str, Term], Sequence[Tuple[str, Term]]]


def simultaneous_subst(t: Term, bindings: Bindings) -> Term:
    table: Dict[str, Term] = dict(bindings.items() if isinstance(bindings, Mapping) else bindings)
    if not table:
        return t

    def leaf(v: Term, d: int) -> Term:
        if isinstance(v, Var) and v.name in table:
            return table[v.name]
        return v

    return _map(t, leaf, 0, into_blocks=True)


def substitute(t: Term, x: str, u: Term) -> Term:
    """``t[x\\u]``. Capture cannot happen: bound variables are indices."""
    return simultaneous_subst(t, {x: u})


def sequential_subst(t: Term, bindings: Sequence[Tuple[str, Term]]) -> Term:
    for x, u in bindings:
        t = substitute(t, x, u)
    return t


def alpha_eq(t: Term, u: Term) -> bool:
    return t == u


def replace_ind_names(t: Term, block: InductiveBlock) -> Term:
    """``t[.\\D]``: block names, bound or free, become references into ``block``."""
    refs = [IndRef(block, d) for d in block.ind_names]
    if has_loose_bvars(t):
        t = instantiate(t, refs)
    return simultaneous_subst(t, {name: IndRef(block, name) for name in block.names})


def mentions_block(t: Term, block: InductiveBlock) -> bool:
    found = False

    def walk(t: Term) -> None:
        nonlocal found
        if found:
            return
        if isinstance(t, IndRef):
            if t.block == block:
                found = True
            return
        for sub in subterms(t):
            walk(sub)

    walk(t)
    return found


def subterms(t: Term) -> Tuple[Term, ...]:
    """Immediate subterms, without descending into inductive blocks."""
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, (Pi,)):
        return (t.domain, t.codomain)
    if isinstance(t, Lam):
        return (t.domain, t.body)
    if isinstance(t, LetIn):
        ann = () if t.value_type is None else (t.value_type,)
        return (t.value,) + ann + (t.body,)
    if isinstance(t, Case):
        return (t.scrutinee, t.motive) + tuple(t.branches)
    if isinstance(t, Fix):
        return tuple(x for f in t.defs for x in (f.type, f.body))
    return ()


def map_subterms(t: Term, fn: Callable[[Term], Term]) -> Term:
    """Rebuild ``t`` with ``fn`` applied to its immediate subterms."""
    if isinstance(t, App):
        return App(fn(t.fn), fn(t.arg))
    if isinstance(t, Pi):
        return Pi(t.name, fn(t.domain), fn(t.codomain))
    if isinstance(t, Lam):
        return Lam(t.name, fn(t.domain), fn(t.body))
    if isinstance(t, LetIn):
        ann = None if t.value_type is None else fn(t.value_type)
        return LetIn(t.name, fn(t.value), ann, fn(t.body))
    if isinstance(t, Case):
        return Case(fn(t.scrutinee), fn(t.motive), tuple(fn(b) for b in t.branches))
    if isinstance(t, Fix):
        return Fix(t.index, tuple(FixDef(f.name, f.rec_arg, fn(f.type), fn(f.body)) for f in t.defs))
    return t


def mk_app(fn: Term, args: Iterable[Term]) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def unfold_app(t: Term) -> Tuple[Term, List[Term]]:
    args: List[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def mk_pi(binders: Sequence[Tuple[str, Term]], body: Term) -> Term:
    """Close ``body`` over named binders whose types may mention earlier names."""
    names = [name for name, _ in binders]
    result = abstract(body, names)
    for i in range(len(binders) - 1, -1, -1):
        name, ty = binders[i]
        result = Pi(name, abstract(ty, names[:i]), result)
    return result


def mk_lam(binders: Sequence[Tuple[str, Term]], body: Term) -> Term:
    names = [name for name, _ in binders]
    result = abstract(body, names)
    for i in range(len(binders) - 1, -1, -1):
        name, ty = binders[i]
        result = Lam(name, abstract(ty, names[:i]), result)
    return result


# ---------------------------------------------------------------------------
# contexts


@dataclass(frozen=True)
class Assum:
    name: str
    type: Term


@dataclass(frozen=True)
class Def:
    name: str
    body: Term
    type: Term


@dataclass(frozen=True)
class IndBlock:
    block: InductiveBlock


ContextEntry = Union[Assum, Def, IndBlock]


@dataclass(frozen=True)
class Context:
    entries: Tuple[ContextEntry, ...] = ()

    def extend(self, *entries: ContextEntry) -> "Context":
        return Context(self.entries + tuple(entries))

    def assume(self, name: str, ty: Term) -> "Context":
        return self.extend(Assum(name, ty))

    def define(self, name: str, body: Term, ty: Term) -> "Context":
        return self.extend(Def(name, body, ty))

    @cached_property
    def _index(self) -> Dict[str, List[Union[Assum, Def]]]:
        index: Dict[str, List[Union[Assum, Def]]] = {}
        for entry in self.entries:
            if isinstance(entry, (Assum, Def)):
                index.setdefault(entry.name, []).append(entry)
        return index

    def lookup(self, name: str) -> Optional[Union[Assum, Def]]:
        hits = self._index.get(name)
        return hits[-1] if hits else None

    def occurrences(self, name: str) -> int:
        return len(self._index.get(name, ()))

    def domain(self) -> List[str]:
        names: List[str] = []
        for entry in self.entries:
            if isinstance(entry, IndBlock):
                names.extend(entry.block.names)
            else:
                names.append(entry.name)
        return names

    def blocks(self) -> List[InductiveBlock]:
        return [e.block for e in self.entries if isinstance(e, IndBlock)]

    def has_block(self, block: InductiveBlock) -> bool:
        return any(isinstance(e, IndBlock) and e.block == block for e in self.entries)

    def prefix(self, length: int) -> "Context":
        return Context(self.entries[:length])

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


EMPTY_CONTEXT = Context()


# ---------------------------------------------------------------------------
# sizes

HALF = Fraction(1, 2)


def term_size(t: Term) -> Fraction:
    if isinstance(t, (Var, BVar, Sort)):
        return Fraction(1)
    if isinstance(t, IndRef):
        block = t.block
        return 1 + sum((term_size(a) for _, a in block.ind_decls), Fraction(0)) + sum(
            (term_size(c) for _, c in block.con_decls), Fraction(0)
        )
    return 1 + sum((term_size(s) for s in subterms(t)), Fraction(0))


def context_size(ctx: Context) -> Fraction:
    size = HALF
    for entry in ctx:
        if isinstance(entry, Assum):
            size += term_size(entry.type)
        elif isinstance(entry, Def):
            size += term_size(entry.body) + term_size(entry.type)
        else:
            size += 1
    return size


def judgment_size(ctx: Context, t: Term) -> Fraction:
    return context_size(ctx) + term_size(t) - HALF
