"""Directed beta/delta/zeta/iota reduction, conversion and cumulativity."""

import logging
from typing import List, Optional

from .errors import FuelExhausted
from .schemas import ReductionConfig
from .syntax import (
    Case,
    Context,
    Def,
    Fix,
    FixDef,
    IndRef,
    Lam,
    LetIn,
    Pi,
    Sort,
    Term,
    Var,
    abstract,
    close_binder,
    fresh_name,
    instantiate,
    mk_app,
    open_binder,
    unfold_app,
)

logger = logging.getLogger(__name__)


def constructor_head(t: Term) -> Optional[IndRef]:
    head, _ = unfold_app(t)
    if isinstance(head, IndRef) and head.is_constructor:
        return head
    return None


class Reducer:
    """Reduction in a fixed context with a shared step budget."""

    def __init__(self, ctx: Context, config: Optional[ReductionConfig] = None):
        self.ctx = ctx
        self.config = config or ReductionConfig()
        self.steps = 0
        # heads of recursive arguments at every fix unfolding, for inspection in tests
        self.fix_unfoldings: List[Term] = []

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.config.max_steps:
            logger.debug("fuel exhausted after %d steps", self.steps)
            raise FuelExhausted(self.config.max_steps)

    def whnf(self, t: Term) -> Term:
        while True:
            head, args = unfold_app(t)
            reduced = self._step(head, args)
            if reduced is None:
                return t
            self._tick()
            t = reduced

    def _step(self, head: Term, args: List[Term]) -> Optional[Term]:
        if isinstance(head, Lam) and args:
            return mk_app(instantiate(head.body, [args[0]]), args[1:])
        if isinstance(head, LetIn):
            return mk_app(instantiate(head.body, [head.value]), args)
        if isinstance(head, Var):
            entry = self.ctx.lookup(head.name)
            if isinstance(entry, Def):
                return mk_app(entry.body, args)
            return None
        if isinstance(head, Case):
            return self._case_iota(head, args)
        if isinstance(head, Fix):
            return self._fix_iota(head, args)
        return None

    def _case_iota(self, case: Case, args: List[Term]) -> Optional[Term]:
        scrutinee = self.whnf(case.scrutinee)
        con = constructor_head(scrutinee)
        if con is None:
            return None
        block = con.block
        siblings = block.constructors_of(block.con_target(con.name))
        position = siblings.index(con.name)
        if position >= len(case.branches):
            return None
        _, con_args = unfold_app(scrutinee)
        return mk_app(case.branches[position], con_args[block.param_count:] + args)

    def _fix_iota(self, fix: Fix, args: List[Term]) -> Optional[Term]:
        fdef = fix.defs[fix.index]
        if len(args) <= fdef.rec_arg:
            return None
        rec = self.whnf(args[fdef.rec_arg])
        if constructor_head(rec) is None:
            return None
        self.fix_unfoldings.append(unfold_app(rec)[0])
        unfolded = instantiate(fdef.body, [Fix(i, fix.defs) for i in range(len(fix.defs))])
        new_args = list(args)
        new_args[fdef.rec_arg] = rec
        return mk_app(unfolded, new_args)

    def normalize(self, t: Term) -> Term:
        t = self.whnf(t)
        head, args = unfold_app(t)
        args = [self.normalize(a) for a in args]
        if isinstance(head, Pi):
            head = Pi(head.name, self.normalize(head.domain), self._under(head.codomain, head.name))
        elif isinstance(head, Lam):
            head = Lam(head.name, self.normalize(head.domain), self._under(head.body, head.name))
        elif isinstance(head, Case):
            head = Case(
                self.normalize(head.scrutinee),
                self.normalize(head.motive),
                tuple(self.normalize(b) for b in head.branches),
            )
        elif isinstance(head, Fix):
            head = Fix(head.index, tuple(self._normalize_fixdef(head.defs, f) for f in head.defs))
        return mk_app(head, args)

    def _under(self, body: Term, hint: str) -> Term:
        x = fresh_name(hint)
        return close_binder(self.normalize(open_binder(body, x)), x)

    def _normalize_fixdef(self, defs, fdef: FixDef) -> FixDef:
        names = [fresh_name(f.name) for f in defs]
        opened = instantiate(fdef.body, [Var(n) for n in names])
        body = abstract(self.normalize(opened), names)
        return FixDef(fdef.name, fdef.rec_arg, self.normalize(fdef.type), body)

    def conv(self, a: Term, b: Term) -> bool:
        if a == b:
            return True
        return self.normalize(a) == self.normalize(b)

    def subtype(self, a: Term, b: Term) -> bool:
        if a == b:
            return True
        return self._subtype_nf(self.normalize(a), self.normalize(b))

    def _subtype_nf(self, a: Term, b: Term) -> bool:
        if a == b:
            return True
        if isinstance(a, Sort) and isinstance(b, Sort):
            if a.is_prop:
                return not b.is_prop
            return not b.is_prop and a.level <= b.level
        if isinstance(a, Pi) and isinstance(b, Pi):
            if a.domain != b.domain:
                return False
            x = fresh_name(a.name)
            return self._subtype_nf(open_binder(a.codomain, x), open_binder(b.codomain, x))
        return False


def whnf(ctx: Context, t: Term, config: Optional[ReductionConfig] = None) -> Term:
    return Reducer(ctx, config).whnf(t)


def normalize(ctx: Context, t: Term, config: Optional[ReductionConfig] = None) -> Term:
    return Reducer(ctx, config).normalize(t)


def conv(ctx: Context, a: Term, b: Term, config: Optional[ReductionConfig] = None) -> bool:
    return Reducer(ctx, config).conv(a, b)


def subtype(ctx: Context, a: Term, b: Term, config: Optional[ReductionConfig] = None) -> bool:
    return Reducer(ctx, config).subtype(a, b)
