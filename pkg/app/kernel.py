"""Typing judgment: contexts, inference, inductive admission and eliminations."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from . import guard
from .errors import (
    RULE_APP,
    RULE_ARITY,
    RULE_AX,
    RULE_CASE,
    RULE_CONSTRUCTOR,
    RULE_CONV,
    RULE_CUM,
    RULE_ELIM,
    RULE_FIX,
    RULE_FRESH,
    RULE_IND_CONST,
    RULE_IND_TYPE,
    RULE_LAM,
    RULE_LET,
    RULE_PARAMS,
    RULE_PI,
    RULE_POSITIVITY,
    RULE_SORT,
    RULE_UNIVERSE,
    RULE_VAR,
    RULE_WF,
    TypingError,
)
from .parser import pretty_print
from .reduction import Reducer
from .schemas import ReductionConfig
from .syntax import (
    EMPTY_CONTEXT,
    PROP,
    App,
    Assum,
    BVar,
    Case,
    Context,
    Def,
    Fix,
    IndBlock,
    IndRef,
    InductiveBlock,
    Lam,
    LetIn,
    Pi,
    Sort,
    Term,
    Var,
    close_binder,
    free_vars,
    fresh_name,
    instantiate,
    mk_app,
    mk_pi,
    open_binder,
    substitute,
    unfold_app,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProductRule:
    """The relation P(s1, s2, s3) governing the sort of a product."""

    s1: Sort
    s2: Sort
    s3: Sort

    def holds(self) -> bool:
        if self.s2.is_prop:
            return self.s3.is_prop
        if self.s3.is_prop:
            return False
        # Prop domains are lifted to Type0 through cumulativity
        lower = 0 if self.s1.is_prop else self.s1.level
        return self.s3.level >= max(lower, self.s2.level)

    @classmethod
    def minimal(cls, s1: Sort, s2: Sort) -> "ProductRule":
        if s2.is_prop:
            return cls(s1, s2, PROP)
        lower = 0 if s1.is_prop else s1.level
        return cls(s1, s2, Sort(max(lower, s2.level)))


def product_sort(s1: Sort, s2: Sort) -> Sort:
    return ProductRule.minimal(s1, s2).s3


@dataclass(frozen=True)
class ElimQuery:
    """C(d q : A; B): may a case on ``d q`` (of arity A) use a motive of type B."""

    ind: IndRef
    args: Tuple[Term, ...]
    arity: Term
    motive_type: Term
    context: Context = field(default=EMPTY_CONTEXT)


def _show(t: Term) -> str:
    return pretty_print(t)


class TypeChecker:
    def __init__(self, config: Optional[ReductionConfig] = None):
        self.config = config or ReductionConfig()

    def reducer(self, ctx: Context) -> Reducer:
        return Reducer(ctx, self.config)

    def whnf(self, ctx: Context, t: Term) -> Term:
        return self.reducer(ctx).whnf(t)

    def normalize(self, ctx: Context, t: Term) -> Term:
        return self.reducer(ctx).normalize(t)

    def conv(self, ctx: Context, a: Term, b: Term) -> bool:
        return self.reducer(ctx).conv(a, b)

    def subtype(self, ctx: Context, a: Term, b: Term) -> bool:
        return self.reducer(ctx).subtype(a, b)

    # -- helpers ---------------------------------------------------------------

    def ensure_sort(self, ctx: Context, ty: Term, rule: str, what: Term) -> Sort:
        reduced = self.whnf(ctx, ty)
        if not isinstance(reduced, Sort):
            raise TypingError(rule, f"{_show(what)} is not a type (its type is {_show(ty)})")
        return reduced

    def ensure_pi(self, ctx: Context, ty: Term, rule: str, what: Term) -> Pi:
        reduced = self.whnf(ctx, ty)
        if not isinstance(reduced, Pi):
            raise TypingError(rule, f"{_show(what)} of type {_show(ty)} cannot be applied")
        return reduced

    def infer_sort(self, ctx: Context, t: Term, rule: str) -> Sort:
        return self.ensure_sort(ctx, self.infer(ctx, t), rule, t)

    # -- inference -------------------------------------------------------------

    def infer(self, ctx: Context, t: Term) -> Term:
        if isinstance(t, Sort):
            return Sort(0) if t.is_prop else Sort(t.level + 1)
        if isinstance(t, Var):
            return self._infer_var(ctx, t)
        if isinstance(t, BVar):
            raise TypingError(RULE_VAR, f"loose bound variable #{t.index}")
        if isinstance(t, Pi):
            s1 = self.infer_sort(ctx, t.domain, RULE_PI)
            x = fresh_name(t.name)
            s2 = self.infer_sort(ctx.assume(x, t.domain), open_binder(t.codomain, x), RULE_PI)
            return product_sort(s1, s2)
        if isinstance(t, Lam):
            self.infer_sort(ctx, t.domain, RULE_LAM)
            x = fresh_name(t.name)
            inner = ctx.assume(x, t.domain)
            body_type = self.infer(inner, open_binder(t.body, x))
            self.infer_sort(inner, body_type, RULE_LAM)
            return Pi(t.name, t.domain, close_binder(body_type, x))
        if isinstance(t, App):
            fn_type = self.ensure_pi(ctx, self.infer(ctx, t.fn), RULE_APP, t.fn)
            arg_type = self.infer(ctx, t.arg)
            if not self.subtype(ctx, arg_type, fn_type.domain):
                raise TypingError(
                    RULE_APP,
                    f"argument {_show(t.arg)} has type {_show(self.normalize(ctx, arg_type))} "
                    f"but {_show(t.fn)} expects {_show(self.normalize(ctx, fn_type.domain))}",
                )
            return instantiate(fn_type.codomain, [t.arg])
        if isinstance(t, LetIn):
            return self._infer_let(ctx, t)
        if isinstance(t, IndRef):
            return self._infer_indref(ctx, t)
        if isinstance(t, Case):
            return self._infer_case(ctx, t)
        if isinstance(t, Fix):
            return self._infer_fix(ctx, t)
        raise TypingError(RULE_WF, f"not a term: {t!r}")

    def _infer_var(self, ctx: Context, t: Var) -> Term:
        hits = ctx.occurrences(t.name)
        if hits == 0:
            raise TypingError(RULE_VAR, f"unbound variable {t.name}")
        if hits > 1:
            raise TypingError(RULE_VAR, f"variable {t.name} is declared more than once")
        return ctx.lookup(t.name).type

    def _infer_let(self, ctx: Context, t: LetIn) -> Term:
        if t.value_type is not None:
            self.infer_sort(ctx, t.value_type, RULE_LET)
            self.check(ctx, t.value, t.value_type)
            value_type = t.value_type
        else:
            value_type = self.infer(ctx, t.value)
        x = fresh_name(t.name)
        body_type = self.infer(ctx.define(x, t.value, value_type), open_binder(t.body, x))
        return substitute(body_type, x, t.value)

    def _infer_indref(self, ctx: Context, t: IndRef) -> Term:
        block = t.block
        constructor = block.is_constructor(t.name)
        rule = RULE_IND_CONST if constructor else RULE_IND_TYPE
        if not (constructor or block.is_inductive(t.name)):
            raise TypingError(rule, f"{t.name} is not declared by its inductive block")
        if not ctx.has_block(block):
            raise TypingError(rule, f"inductive block of {t.name} is not in the context")
        return block.con_type(t.name) if constructor else block.arity(t.name)

    def _instantiate_params(
        self, ctx: Context, ty: Term, values: Sequence[Term], rule: str
    ) -> Term:
        for value in values:
            pi = self.whnf(ctx, ty)
            if not isinstance(pi, Pi):
                raise TypingError(rule, f"{_show(ty)} has too few parameters")
            ty = instantiate(pi.codomain, [value])
        return ty

    def _infer_case(self, ctx: Context, t: Case) -> Term:
        scrutinee_type = self.whnf(ctx, self.infer(ctx, t.scrutinee))
        head, args = unfold_app(scrutinee_type)
        if not (isinstance(head, IndRef) and head.block.is_inductive(head.name)):
            raise TypingError(
                RULE_CASE,
                f"{_show(t.scrutinee)} has type {_show(scrutinee_type)}, not an inductive type",
            )
        block, ind = head.block, head.name
        n = block.param_count
        if len(args) != n + block.index_count(ind):
            raise TypingError(RULE_CASE, f"{ind} is not fully applied in the scrutinee type")
        params, indices = args[:n], args[n:]
        arity = self._instantiate_params(ctx, block.arity(ind), params, RULE_CASE)
        motive_type = self.infer(ctx, t.motive)
        query = ElimQuery(head, tuple(params), arity, motive_type, ctx)
        if not self.check_elim_constraint(query):
            raise TypingError(
                RULE_ELIM,
                f"motive of type {_show(self.normalize(ctx, motive_type))} "
                f"cannot eliminate {ind}",
            )
        constructors = block.constructors_of(ind)
        if len(t.branches) != len(constructors):
            raise TypingError(
                RULE_CASE,
                f"case on {ind} needs {len(constructors)} branches, got {len(t.branches)}",
            )
        for con, branch in zip(constructors, t.branches):
            expected = self.branch_type(ctx, block, con, params, t.motive)
            self.check(ctx, branch, expected, rule=RULE_CASE)
        return mk_app(t.motive, indices + [t.scrutinee])

    def branch_type(
        self, ctx: Context, block: InductiveBlock, con: str, params: Sequence[Term], motive: Term
    ) -> Term:
        """Π v:V. Q w (c p v) for the constructor ``con`` at parameters ``params``."""
        ty = self._instantiate_params(ctx, block.con_type(con), params, RULE_CASE)
        binders: List[Tuple[str, Term]] = []
        while isinstance(ty, Pi):
            v = fresh_name(ty.name)
            binders.append((v, ty.domain))
            ty = open_binder(ty.codomain, v)
        _, conclusion_args = unfold_app(ty)
        indices = conclusion_args[block.param_count:]
        value = mk_app(IndRef(block, con), list(params) + [Var(v) for v, _ in binders])
        return mk_pi(binders, mk_app(motive, indices + [value]))

    def _infer_fix(self, ctx: Context, t: Fix) -> Term:
        if not t.defs or not 0 <= t.index < len(t.defs):
            raise TypingError(RULE_FIX, f"fix index {t.index} out of range")
        for fdef in t.defs:
            if fdef.rec_arg < 0:
                raise TypingError(RULE_FIX, f"negative recursive argument for {fdef.name}")
            self.infer_sort(ctx, fdef.type, RULE_FIX)
        names = [fresh_name(fdef.name) for fdef in t.defs]
        inner = ctx.extend(*(Assum(x, fdef.type) for x, fdef in zip(names, t.defs)))
        opened = []
        for x, fdef in zip(names, t.defs):
            body = instantiate(fdef.body, [Var(y) for y in names])
            self.check(inner, body, fdef.type)
            opened.append((x, fdef.rec_arg, fdef.type, body))
        guard.check_fix_block(ctx, opened, checker=self)
        return t.defs[t.index].type

    # -- checking --------------------------------------------------------------

    def check(self, ctx: Context, t: Term, expected: Term, rule: Optional[str] = None) -> None:
        actual = self.infer(ctx, t)
        if self.subtype(ctx, actual, expected):
            return
        actual_nf = self.normalize(ctx, actual)
        expected_nf = self.normalize(ctx, expected)
        if rule is None:
            if isinstance(t, Sort) and isinstance(expected_nf, Sort):
                rule = RULE_AX
            elif isinstance(actual_nf, Sort) and isinstance(expected_nf, Sort):
                rule = RULE_CUM
            else:
                rule = RULE_CONV
        raise TypingError(
            rule,
            f"{_show(t)} has type {_show(actual_nf)} but {_show(expected_nf)} was expected",
        )

    def judgmental_eq(self, ctx: Context, m: Term, n: Term, ty: Term) -> None:
        self.check(ctx, m, ty)
        self.check(ctx, n, ty)
        if not self.conv(ctx, m, n):
            raise TypingError(
                RULE_CONV,
                f"{_show(self.normalize(ctx, m))} and {_show(self.normalize(ctx, n))} "
                f"are not equal at type {_show(ty)}",
            )

    # -- contexts and inductive blocks ----------------------------------------

    def wf_context(self, ctx: Context) -> None:
        for i, entry in enumerate(ctx.entries):
            prefix = ctx.prefix(i)
            if isinstance(entry, IndBlock):
                self.admit_inductive(prefix, entry.block)
                continue
            if entry.name in prefix.domain():
                raise TypingError(RULE_WF, f"{entry.name} is already declared")
            self.infer_sort(prefix, entry.type, RULE_WF)
            if isinstance(entry, Def):
                self.check(prefix, entry.body, entry.type)

    def is_arity(self, ctx: Context, ty: Term) -> Optional[Sort]:
        while True:
            ty = self.whnf(ctx, ty)
            if isinstance(ty, Sort):
                return ty
            if not isinstance(ty, Pi):
                return None
            x = fresh_name(ty.name)
            ctx = ctx.assume(x, ty.domain)
            ty = open_binder(ty.codomain, x)

    def _open_params(
        self, ctx: Context, ty: Term, names: Sequence[str], owner: str
    ) -> Tuple[List[Term], Term]:
        domains = []
        for x in names:
            ty = self.whnf(ctx, ty)
            if not isinstance(ty, Pi):
                raise TypingError(RULE_PARAMS, f"{owner} has fewer than {len(names)} parameters")
            domains.append(ty.domain)
            ctx = ctx.assume(x, ty.domain)
            ty = open_binder(ty.codomain, x)
        return domains, ty

    def admit_inductive(self, ctx: Context, block: InductiveBlock) -> None:
        names = block.names
        if len(set(names)) != len(names):
            raise TypingError(RULE_FRESH, "names of an inductive block must be distinct")
        taken = set(ctx.domain())
        clash = [x for x in names if x in taken]
        if clash:
            raise TypingError(RULE_FRESH, f"{clash[0]} is already declared")
        if not block.ind_decls:
            raise TypingError(RULE_ARITY, "an inductive block declares at least one type")

        n = block.param_count
        param_names = [fresh_name("p") for _ in range(n)]
        param_types: Optional[List[Term]] = None
        param_ctx = ctx
        arity_sorts = {}
        for ind, arity in block.ind_decls:
            arity_sorts[ind] = self.infer_sort(ctx, arity, RULE_ARITY)
            tail = self.is_arity(ctx, arity)
            if tail is None:
                raise TypingError(RULE_ARITY, f"type of {ind} is not an arity")
            if tail.is_prop:
                raise TypingError(RULE_SORT, f"{ind} cannot be an inductive of sort Prop")
            domains, _ = self._open_params(ctx, arity, param_names, ind)
            if param_types is None:
                param_types = domains
                param_ctx = ctx.extend(*(Assum(x, d) for x, d in zip(param_names, domains)))
            else:
                self._same_params(param_ctx, param_types, domains, ind)

        ind_ctx = ctx.extend(*(Assum(ind, arity) for ind, arity in block.ind_decls))
        ind_vars = [Var(ind) for ind in block.ind_names]
        for con, raw in block.con_decls:
            con_type = instantiate(raw, ind_vars)
            con_sort = self.infer_sort(ind_ctx, con_type, RULE_CONSTRUCTOR)
            domains, rest = self._open_params(ind_ctx, con_type, param_names, con)
            self._same_params(param_ctx, param_types, domains, con)
            target = self._check_constructor_body(
                ind_ctx.extend(*(Assum(x, d) for x, d in zip(param_names, domains))),
                block,
                con,
                rest,
                param_names,
            )
            if not self.subtype(ctx, con_sort, arity_sorts[target]):
                raise TypingError(
                    RULE_UNIVERSE,
                    f"constructor {con} lives in {con_sort} but {target} in {arity_sorts[target]}",
                )
        logger.debug("admitted inductive block %s", ", ".join(block.ind_names))

    def _same_params(
        self, ctx: Context, expected: Sequence[Term], actual: Sequence[Term], owner: str
    ) -> None:
        for want, got in zip(expected, actual):
            if not self.conv(ctx, want, got):
                raise TypingError(
                    RULE_PARAMS,
                    f"parameters of {owner} differ from the block telescope: "
                    f"{_show(got)} instead of {_show(want)}",
                )

    def _check_constructor_body(
        self,
        ctx: Context,
        block: InductiveBlock,
        con: str,
        ty: Term,
        param_names: Sequence[str],
    ) -> str:
        inds = set(block.ind_names)
        while True:
            ty = self.whnf(ctx, ty)
            if not isinstance(ty, Pi):
                break
            self._check_positive(ctx, block, con, ty.domain)
            x = fresh_name(ty.name)
            ctx = ctx.assume(x, ty.domain)
            ty = open_binder(ty.codomain, x)
        head, args = unfold_app(ty)
        if not (isinstance(head, Var) and head.name in inds):
            raise TypingError(
                RULE_CONSTRUCTOR, f"{con} must build a type of its block, not {_show(ty)}"
            )
        n = block.param_count
        if len(args) != n + block.index_count(head.name):
            raise TypingError(RULE_CONSTRUCTOR, f"{head.name} is not fully applied in {con}")
        if args[:n] != [Var(x) for x in param_names]:
            raise TypingError(
                RULE_PARAMS, f"conclusion of {con} must repeat the parameters of the block"
            )
        for index in args[n:]:
            if free_vars(index) & inds:
                raise TypingError(
                    RULE_POSITIVITY, f"{head.name} occurs in an index of the conclusion of {con}"
                )
        return head.name

    def _check_positive(self, ctx: Context, block: InductiveBlock, con: str, ty: Term) -> None:
        """Strict positivity of the block names in one constructor argument type."""
        inds = set(block.ind_names)
        while True:
            if not free_vars(ty) & inds:
                return
            ty = self.whnf(ctx, ty)
            if isinstance(ty, Pi):
                if free_vars(ty.domain) & inds:
                    raise TypingError(
                        RULE_POSITIVITY,
                        f"{', '.join(sorted(free_vars(ty.domain) & inds))} occurs "
                        f"to the left of an arrow in {con}",
                    )
                x = fresh_name(ty.name)
                ctx = ctx.assume(x, ty.domain)
                ty = open_binder(ty.codomain, x)
                continue
            head, args = unfold_app(ty)
            if not (isinstance(head, Var) and head.name in inds):
                raise TypingError(
                    RULE_POSITIVITY, f"{_show(ty)} in {con} is not strictly positive"
                )
            for arg in args:
                if free_vars(arg) & inds:
                    raise TypingError(
                        RULE_POSITIVITY, f"nested occurrence of {head.name} in {con}"
                    )
            if len(args) != block.param_count + block.index_count(head.name):
                raise TypingError(RULE_CONSTRUCTOR, f"{head.name} is not fully applied in {con}")
            return

    # -- elimination constraint ------------------------------------------------

    def check_elim_constraint(self, query: ElimQuery) -> bool:
        ctx = query.context
        reducer = self.reducer(ctx)
        arity = reducer.normalize(query.arity)
        motive_type = reducer.normalize(query.motive_type)
        args = list(query.args)
        while True:
            if isinstance(arity, Pi) and isinstance(motive_type, Pi):
                if not self.conv(ctx, arity.domain, motive_type.domain):
                    return False
                x = fresh_name(arity.name)
                ctx = ctx.assume(x, arity.domain)
                args.append(Var(x))
                arity = open_binder(arity.codomain, x)
                motive_type = open_binder(motive_type.codomain, x)
                continue
            if not (isinstance(arity, Sort) and isinstance(motive_type, Pi)):
                return False
            if not self.conv(ctx, motive_type.domain, mk_app(query.ind, args)):
                return False
            y = fresh_name(motive_type.name)
            inner = ctx.assume(y, motive_type.domain)
            target = self.whnf(inner, open_binder(motive_type.codomain, y))
            if not isinstance(target, Sort):
                return False
            if not arity.is_prop or target.is_prop:
                return True
            return self._is_small_singleton(ctx, query.ind, args)

    def _is_small_singleton(self, ctx: Context, ind: IndRef, args: Sequence[Term]) -> bool:
        block = ind.block
        constructors = block.constructors_of(ind.name)
        if not constructors:
            return True
        if len(constructors) > 1:
            return False
        ty = self._instantiate_params(
            ctx, block.con_type(constructors[0]), args[: block.param_count], RULE_ELIM
        )
        while True:
            ty = self.whnf(ctx, ty)
            if not isinstance(ty, Pi):
                return True
            if not self.infer_sort(ctx, ty.domain, RULE_ELIM).is_prop:
                return False
            x = fresh_name(ty.name)
            ctx = ctx.assume(x, ty.domain)
            ty = open_binder(ty.codomain, x)


_default = TypeChecker()


def wf_context(ctx: Context) -> None:
    _default.wf_context(ctx)


def infer(ctx: Context, t: Term) -> Term:
    return _default.infer(ctx, t)


def check(ctx: Context, t: Term, ty: Term) -> None:
    _default.check(ctx, t, ty)


def is_arity(ctx: Context, ty: Term) -> Optional[Sort]:
    return _default.is_arity(ctx, ty)


def admit_inductive(ctx: Context, block: InductiveBlock) -> None:
    _default.admit_inductive(ctx, block)


def check_elim_constraint(query: ElimQuery) -> bool:
    return _default.check_elim_constraint(query)


def judgmental_eq(ctx: Context, m: Term, n: Term, ty: Term) -> None:
    _default.judgmental_eq(ctx, m, n, ty)
