"""Structural recursion check for fix blocks.

Every variable of a fix body carries a constraint: ``ε`` (nothing known),
``=z`` (it is the recursive argument ``z``) or ``<z`` (it was obtained from
``z`` by going through at least one constructor). A recursive call is
accepted only when its recursive argument carries ``<z``.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import RULE_GUARD, GuardError, TypingError
from .syntax import (
    App,
    Assum,
    BVar,
    Case,
    Context,
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
    instantiate,
    mentions_block,
    open_binder,
    unfold_app,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Constraint:
    kind: str  # "empty", "smaller" or "equal"
    var: Optional[str] = None

    def __str__(self) -> str:
        if self.kind == "empty":
            return "ε"
        return f"{'<' if self.kind == 'smaller' else '='}{self.var}"


EMPTY = Constraint("empty")


def smaller(z: str) -> Constraint:
    return Constraint("smaller", z)


def equal(z: str) -> Constraint:
    return Constraint("equal", z)


def less(c: Constraint) -> Constraint:
    if c.kind == "empty":
        return EMPTY
    return smaller(c.var)


@dataclass(frozen=True)
class ConstrainedEntry:
    name: str
    constraint: Constraint
    type: Term


@dataclass(frozen=True)
class ConstrainedContext:
    """Γ^ε extended with the constrained binders of one fix body."""

    base: Context
    entries: Tuple[ConstrainedEntry, ...] = ()
    recursive: Tuple[Tuple[str, int], ...] = ()
    block: Optional[InductiveBlock] = None
    target: Optional[str] = None

    def extend(self, name: str, constraint: Constraint, ty: Term) -> "ConstrainedContext":
        return ConstrainedContext(
            self.base,
            self.entries + (ConstrainedEntry(name, constraint, ty),),
            self.recursive,
            self.block,
            self.target,
        )

    def constraint_of(self, name: str) -> Constraint:
        for entry in reversed(self.entries):
            if entry.name == name:
                return entry.constraint
        return EMPTY

    def recursive_slot(self, name: str) -> Optional[int]:
        for f, k in self.recursive:
            if f == name:
                return k
        return None

    def plain(self) -> Context:
        return self.base.extend(*(Assum(e.name, e.type) for e in self.entries))


def _checker(checker=None):
    if checker is None:
        from .kernel import TypeChecker

        checker = TypeChecker()
    return checker


def check_fix_block(
    ctx: Context, defs: Sequence[Tuple[str, int, Term, Term]], checker=None
) -> None:
    """Check that every body of the block only recurses on smaller arguments.

    ``defs`` holds ``(f, k, A, t)`` with ``t`` already opened over the names ``f``.
    """
    checker = _checker(checker)
    if not defs:
        raise GuardError("empty fix block")
    base = ctx.extend(*(Assum(f, ty) for f, _, ty, _ in defs))
    recursive = tuple((f, k) for f, k, _, _ in defs)
    for f, k, ty, body in defs:
        _check_type_shape(base, checker, f, k, ty)
        cctx = ConstrainedContext(base, recursive=recursive)
        for _ in range(k):
            if not isinstance(body, Lam):
                raise GuardError(f"recursive binder count mismatch in {f}")
            y = fresh_name(body.name)
            cctx = cctx.extend(y, EMPTY, body.domain)
            body = open_binder(body.body, y)
        if not isinstance(body, Lam):
            raise GuardError(f"recursive binder count mismatch in {f}")
        z = fresh_name(body.name)
        z_type = checker.whnf(cctx.plain(), body.domain)
        head, _ = unfold_app(z_type)
        if not (isinstance(head, IndRef) and head.block.is_inductive(head.name)):
            raise GuardError(f"recursive argument of {f} is not an inductive type")
        cctx = ConstrainedContext(
            base, cctx.entries, recursive, head.block, z
        ).extend(z, equal(z), body.domain)
        constrained_walk(cctx, open_binder(body.body, z), checker)
        logger.debug("fix body %s is guarded", f)


def _check_type_shape(ctx: Context, checker, f: str, k: int, ty: Term) -> None:
    for _ in range(k + 1):
        ty = checker.whnf(ctx, ty)
        if not isinstance(ty, Pi):
            raise GuardError(f"recursive binder count mismatch in the type of {f}")
        x = fresh_name(ty.name)
        ctx = ctx.assume(x, ty.domain)
        ty = open_binder(ty.codomain, x)


def constrained_infer(
    cctx: ConstrainedContext, t: Term, checker=None
) -> Tuple[Term, Constraint]:
    checker = _checker(checker)
    constraint = constrained_walk(cctx, t, checker)
    return checker.infer(cctx.plain(), t), constraint


def constrained_walk(cctx: ConstrainedContext, t: Term, checker) -> Constraint:
    if isinstance(t, Var):
        if cctx.recursive_slot(t.name) is not None:
            raise GuardError(
                f"recursive function {t.name} must be applied to its recursive argument"
            )
        return cctx.constraint_of(t.name)
    if isinstance(t, (Sort, IndRef)):
        return EMPTY
    if isinstance(t, BVar):
        raise TypingError(RULE_GUARD, f"loose bound variable #{t.index}")
    if isinstance(t, App):
        return _walk_app(cctx, t, checker)
    if isinstance(t, Lam):
        constrained_walk(cctx, t.domain, checker)
        x = fresh_name(t.name)
        return constrained_walk(cctx.extend(x, EMPTY, t.domain), open_binder(t.body, x), checker)
    if isinstance(t, Pi):
        constrained_walk(cctx, t.domain, checker)
        x = fresh_name(t.name)
        constrained_walk(cctx.extend(x, EMPTY, t.domain), open_binder(t.codomain, x), checker)
        return EMPTY
    if isinstance(t, LetIn):
        constrained_walk(cctx, t.value, checker)
        value_type = t.value_type
        if value_type is not None:
            constrained_walk(cctx, value_type, checker)
        else:
            value_type = checker.infer(cctx.plain(), t.value)
        x = fresh_name(t.name)
        constrained_walk(cctx.extend(x, EMPTY, value_type), open_binder(t.body, x), checker)
        return EMPTY
    if isinstance(t, Case):
        return _walk_case(cctx, t, checker)
    if isinstance(t, Fix):
        names = [fresh_name(fdef.name) for fdef in t.defs]
        inner = cctx
        for x, fdef in zip(names, t.defs):
            constrained_walk(cctx, fdef.type, checker)
            inner = inner.extend(x, EMPTY, fdef.type)
        for fdef in t.defs:
            constrained_walk(inner, instantiate(fdef.body, [Var(x) for x in names]), checker)
        return EMPTY
    raise TypingError(RULE_GUARD, f"not a term: {t!r}")


def _walk_app(cctx: ConstrainedContext, t: App, checker) -> Constraint:
    head, args = unfold_app(t)
    if isinstance(head, Var):
        slot = cctx.recursive_slot(head.name)
        if slot is not None:
            if len(args) <= slot:
                raise GuardError(
                    f"recursive call to {head.name} is not applied to its recursive argument"
                )
            for i, arg in enumerate(args):
                c = constrained_walk(cctx, arg, checker)
                if i == slot and c != smaller(cctx.target):
                    raise GuardError(
                        f"recursive call to {head.name} on non-smaller argument ({c})"
                    )
            return EMPTY
    if isinstance(head, Lam):
        # a redex passes the constraints of its arguments to its binders
        body: Term = head
        for i, arg in enumerate(args):
            if not isinstance(body, Lam):
                for rest in args[i:]:
                    constrained_walk(cctx, rest, checker)
                constrained_walk(cctx, body, checker)
                return EMPTY
            c = constrained_walk(cctx, arg, checker)
            constrained_walk(cctx, body.domain, checker)
            x = fresh_name(body.name)
            cctx = cctx.extend(x, c, body.domain)
            body = open_binder(body.body, x)
        return constrained_walk(cctx, body, checker)
    constrained_walk(cctx, head, checker)
    for arg in args:
        constrained_walk(cctx, arg, checker)
    return EMPTY


def _walk_case(cctx: ConstrainedContext, t: Case, checker) -> Constraint:
    c = constrained_walk(cctx, t.scrutinee, checker)
    constrained_walk(cctx, t.motive, checker)
    plain = cctx.plain()
    scrutinee_type = checker.whnf(plain, checker.infer(plain, t.scrutinee))
    head, args = unfold_app(scrutinee_type)
    if not (isinstance(head, IndRef) and head.block.is_inductive(head.name)):
        for branch in t.branches:
            constrained_walk(cctx, branch, checker)
        return EMPTY
    block = head.block
    params = args[: block.param_count]
    results = []
    for con, branch in zip(block.constructors_of(head.name), t.branches):
        con_type = block.con_type(con)
        for p in params:
            con_type = instantiate(con_type.codomain, [p]) if isinstance(con_type, Pi) else con_type
        inner = cctx
        body = branch
        while isinstance(con_type, Pi) and isinstance(body, Lam):
            recursive = cctx.block is not None and mentions_block(con_type.domain, cctx.block)
            constrained_walk(inner, body.domain, checker)
            x = fresh_name(body.name)
            inner = inner.extend(x, less(c) if recursive else EMPTY, body.domain)
            body = open_binder(body.body, x)
            con_type = open_binder(con_type.codomain, x)
        results.append(constrained_walk(inner, body, checker))
    if results and all(r == results[0] for r in results):
        return results[0]
    return EMPTY

