"""Elaboration of vernacular files into a checked context."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from fastapi import status

from .errors import (
    RULE_CASE,
    RULE_MODEL,
    RULE_NAMES,
    RULE_PARAMS,
    RULE_WF,
    KernelError,
    TypingError,
    VernacularError,
)
from .kernel import TypeChecker
from .model import Interpreter, Judgment, check_judgment, check_soundness, interp_ctx
from .parser import (
    AssertItem,
    CheckItem,
    DefinitionItem,
    EvalItem,
    FixpointItem,
    InductiveItem,
    ModelItem,
    ParameterItem,
    Scope,
    ScopeEntry,
    SMatch,
    Surface,
    SVar,
    TermBuilder,
    VernacularItem,
    close_binders,
    parse_file,
    parse_surface,
    pretty_print,
)
from .schemas import (
    Diagnostic,
    ItemResult,
    JudgmentResult,
    ModelConfig,
    ReductionConfig,
    SoundnessReport,
    Verdict,
)
from .syntax import (
    EMPTY_CONTEXT,
    Assum,
    Case,
    Context,
    Def,
    Fix,
    IndBlock,
    IndRef,
    InductiveBlock,
    Lam,
    Pi,
    Term,
    Var,
    fresh_name,
    free_vars,
    instantiate,
    mk_app,
    open_binder,
    unfold_app,
)

logger = logging.getLogger(__name__)


class Elaborator(TermBuilder):
    """TermBuilder that knows the session context: global names and ``match``."""

    def __init__(self, session: "Session"):
        self.session = session

    @property
    def checker(self) -> TypeChecker:
        return self.session.checker

    def global_ref(self, name: str, node: SVar) -> Term:
        return self.session.resolve(name)

    def local_context(self, scope: Scope) -> Context:
        entries = []
        for e in scope:
            if e.value is not None and e.type is not None:
                entries.append(Def(e.internal, e.value, e.type))
            else:
                entries.append(Assum(e.internal, e.type))
        return self.session.ctx.extend(*entries)

    def let_type(self, value: Term, scope: Scope) -> Optional[Term]:
        return self.checker.infer(self.local_context(scope), value)

    def match(self, node: SMatch, scope: Scope) -> Term:
        try:
            return self._match(node, scope)
        except KernelError as exc:
            raise exc.at(node.line, node.column)

    def _match(self, node: SMatch, scope: Scope) -> Term:
        ctx = self.local_context(scope)
        scrutinee = self.build(node.scrutinee, scope)
        head, args = unfold_app(self.checker.whnf(ctx, self.checker.infer(ctx, scrutinee)))
        if not (isinstance(head, IndRef) and head.block.is_inductive(head.name)):
            raise TypingError(RULE_CASE, "the matched term does not belong to an inductive type")
        block, ind = head.block, head.name
        if node.in_type is not None and node.in_type != ind:
            raise TypingError(RULE_CASE, f"the matched term has type {ind}, not {node.in_type}")
        n = block.param_count
        params, indices = args[:n], args[n:]

        index_names = list(node.in_names)
        if len(index_names) == n + len(indices):
            index_names = index_names[n:]
        elif index_names and len(index_names) != len(indices):
            raise VernacularError(
                f"the in clause of {ind} binds {len(indices)} indices", rule=RULE_NAMES
            )
        arity = block.arity(ind)
        for p in params:
            arity = instantiate(arity.codomain, [p])
        index_entries: List[ScopeEntry] = []
        for j in range(len(indices)):
            hint = index_names[j] if index_names else arity.name
            entry = ScopeEntry(hint, fresh_name(hint), arity.domain)
            index_entries.append(entry)
            arity = open_binder(arity.codomain, entry.internal)
        as_hint = node.as_name or "y"
        subject = ScopeEntry(
            as_hint,
            fresh_name(as_hint),
            mk_app(IndRef(block, ind), list(params) + [Var(e.internal) for e in index_entries]),
        )

        by_constructor: Dict[str, object] = {}
        for branch in node.branches:
            if branch.constructor not in block.constructors_of(ind):
                raise TypingError(RULE_CASE, f"{branch.constructor} is not a constructor of {ind}")
            if branch.constructor in by_constructor:
                raise TypingError(RULE_CASE, f"two branches for {branch.constructor}")
            by_constructor[branch.constructor] = branch
        missing = [c for c in block.constructors_of(ind) if c not in by_constructor]
        if missing:
            raise TypingError(RULE_CASE, f"no branch for {', '.join(missing)}")

        branches = []
        first_type: Optional[Term] = None
        for con in block.constructors_of(ind):
            branch = by_constructor[con]
            con_type = block.con_type(con)
            for p in params:
                con_type = instantiate(con_type.codomain, [p])
            argc = _pi_count(con_type)
            names = list(branch.names)
            if len(names) == n + argc:
                names = names[n:]
            if len(names) != argc:
                raise TypingError(RULE_CASE, f"{con} takes {argc} arguments, {len(names)} given")
            entries: List[ScopeEntry] = []
            for name in names:
                entry = ScopeEntry(name, fresh_name(name), con_type.domain)
                entries.append(entry)
                con_type = open_binder(con_type.codomain, entry.internal)
            inner = scope + tuple(entries)
            body = self.build(branch.body, inner)
            if node.returns is None and first_type is None:
                first_type = self._constant_type(body, inner, entries)
            branches.append(close_binders(Lam, entries, body))

        if node.returns is not None:
            q = self.build(node.returns, scope + tuple(index_entries) + (subject,))
        elif first_type is not None:
            q = first_type
        else:
            raise VernacularError("cannot infer the return type of an empty match", rule=RULE_CASE)
        motive = close_binders(Lam, index_entries + [subject], q)
        return Case(scrutinee, motive, tuple(branches))

    def _constant_type(self, body: Term, scope: Scope, entries: Sequence[ScopeEntry]) -> Term:
        ty = self.checker.infer(self.local_context(scope), body)
        if free_vars(ty) & {e.internal for e in entries}:
            raise VernacularError(
                "the type of this match depends on local names; add a return clause",
                rule=RULE_CASE,
            )
        return ty


def _pi_count(ty: Term) -> int:
    count = 0
    while isinstance(ty, Pi):
        count += 1
        ty = ty.codomain
    return count


class Session:
    """A vernacular file being checked item by item.

    Rejected items leave the context unchanged and are reported as
    diagnostics; checking goes on with the next item.
    """

    def __init__(
        self,
        reduction: Optional[ReductionConfig] = None,
        model: Optional[ModelConfig] = None,
    ):
        self.reduction = reduction or ReductionConfig()
        self.model = model or ModelConfig()
        self.checker = TypeChecker(self.reduction)
        self.ctx: Context = EMPTY_CONTEXT
        self.results: List[ItemResult] = []
        self.diagnostics: List[Diagnostic] = []
        self.judgments: List[Judgment] = []
        self._pending: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    # -- names -----------------------------------------------------------------

    def resolve(self, name: str) -> Term:
        if name in self._pending:
            return Var(name)
        for block in reversed(self.ctx.blocks()):
            if name in block.names:
                return IndRef(block, name)
        return Var(name)

    def term(self, surface: Surface) -> Term:
        return Elaborator(self).build(surface)

    def parse_term(self, text: str) -> Term:
        return self.term(parse_surface(text))

    def _fresh(self, name: str) -> None:
        if name in self.ctx.domain():
            raise TypingError(RULE_WF, f"{name} is already declared")

    # -- running ---------------------------------------------------------------

    def load(self, text: str) -> "Session":
        """Parse ``text`` and run every item; syntax errors propagate."""
        for item in parse_file(text):
            self.run(item)
        return self

    def run(self, item: VernacularItem) -> Optional[ItemResult]:
        handler = getattr(self, f"_run_{item.kind}")
        try:
            result = handler(item)
        except KernelError as exc:
            exc.at(item.line, item.column)
            logger.info("rejected %s %s: %s", item.kind, item.label, exc)
            self.diagnostics.append(exc.to_diagnostic())
            return None
        logger.debug("accepted %s %s", item.kind, item.label)
        self.results.append(result)
        return result

    def _run_inductive(self, item: InductiveItem) -> ItemResult:
        n = len(item.bodies[0].params)
        for body in item.bodies[1:]:
            if len(body.params) != n:
                raise TypingError(
                    RULE_PARAMS, f"{body.name} does not declare the same {n} parameters"
                )
        elab = Elaborator(self)
        inds: List[Tuple[str, Term]] = []
        cons: List[Tuple[str, Term]] = []
        self._pending = tuple(b.name for b in item.bodies)
        try:
            for body in item.bodies:
                scope, entries = elab.bind(body.params, ())
                inds.append((body.name, close_binders(Pi, entries, elab.build(body.arity, scope))))
                for con, ty in body.constructors:
                    cons.append((con, close_binders(Pi, entries, elab.build(ty, scope))))
        finally:
            self._pending = ()
        block = InductiveBlock.build(n, inds, cons)
        self.checker.admit_inductive(self.ctx, block)
        self.ctx = self.ctx.extend(IndBlock(block))
        return ItemResult(kind=item.kind, name=item.label, detail=f"{len(cons)} constructors")

    def _run_definition(self, item: DefinitionItem) -> ItemResult:
        self._fresh(item.name)
        elab = Elaborator(self)
        scope, entries = elab.bind(item.binders, ())
        body = close_binders(Lam, entries, elab.build(item.body, scope))
        if item.type is not None:
            ty = close_binders(Pi, entries, elab.build(item.type, scope))
            self.checker.infer_sort(self.ctx, ty, RULE_WF)
            self.checker.check(self.ctx, body, ty)
        else:
            ty = self.checker.infer(self.ctx, body)
        self._define(item.name, body, ty)
        return ItemResult(kind=item.kind, name=item.name, detail=pretty_print(ty))

    def _run_fixpoint(self, item: FixpointItem) -> ItemResult:
        for d in item.defs:
            self._fresh(d.name)
        fix = Elaborator(self).build_fix(item.defs, item.defs[0].name, ())
        self.checker.infer(self.ctx, fix)
        for i, d in enumerate(fix.defs):
            self._define(item.defs[i].name, Fix(i, fix.defs), d.type)
        return ItemResult(kind=item.kind, name=item.label, detail=pretty_print(fix.defs[0].type))

    def _define(self, name: str, body: Term, ty: Term) -> None:
        self.judgments.append(Judgment(name, self.ctx, body, ty))
        self.ctx = self.ctx.define(name, body, ty)

    def _run_parameter(self, item: ParameterItem) -> ItemResult:
        self._fresh(item.name)
        ty = self.term(item.type)
        self.checker.infer_sort(self.ctx, ty, RULE_WF)
        self.ctx = self.ctx.assume(item.name, ty)
        return ItemResult(kind=item.kind, name=item.name, detail=pretty_print(ty))

    def _run_check(self, item: CheckItem) -> ItemResult:
        t = self.term(item.term)
        if item.type is not None:
            ty = self.term(item.type)
            self.checker.infer_sort(self.ctx, ty, RULE_WF)
            self.checker.check(self.ctx, t, ty)
        else:
            ty = self.checker.infer(self.ctx, t)
        name = f"check@{item.line}"
        self.judgments.append(Judgment(name, self.ctx, t, ty))
        return ItemResult(kind=item.kind, name=pretty_print(t), detail=pretty_print(ty))

    def _run_assert(self, item: AssertItem) -> ItemResult:
        lhs, rhs, ty = self.term(item.lhs), self.term(item.rhs), self.term(item.type)
        self.checker.infer_sort(self.ctx, ty, RULE_WF)
        self.checker.judgmental_eq(self.ctx, lhs, rhs, ty)
        return ItemResult(
            kind=item.kind, name=pretty_print(lhs), detail=f"= {pretty_print(rhs)}"
        )

    def _run_eval(self, item: EvalItem) -> ItemResult:
        t = self.term(item.term)
        self.checker.infer(self.ctx, t)
        return ItemResult(
            kind=item.kind,
            name=pretty_print(t),
            detail=pretty_print(self.checker.normalize(self.ctx, t)),
        )

    def _run_model(self, item: ModelItem) -> ItemResult:
        t, ty = self.term(item.term), self.term(item.type)
        cfg = self.model
        if item.depth is not None:
            cfg = cfg.model_copy(update={"fixpoint_depth": item.depth})
        result = self.probe(t, ty, cfg, name=pretty_print(t))[1]
        if result.verdict == Verdict.NO:
            raise KernelError(
                "model_refuted",
                f"the model refutes {pretty_print(t)} : {pretty_print(ty)}",
                rule=RULE_MODEL,
                status=status.HTTP_422_UNPROCESSABLE_ENTITY,
            )
        return ItemResult(kind=item.kind, name=pretty_print(t), detail=result.render())

    # -- queries ---------------------------------------------------------------

    def normalize(self, t: Term) -> Term:
        self.checker.infer(self.ctx, t)
        return self.checker.normalize(self.ctx, t)

    def probe(
        self, t: Term, ty: Term, cfg: Optional[ModelConfig] = None, name: str = ""
    ) -> Tuple[str, JudgmentResult]:
        """Value of ``t`` under the first valuation and the membership verdict for ``t : ty``."""
        cfg = cfg or self.model
        self.checker.infer_sort(self.ctx, ty, RULE_WF)
        self.checker.check(self.ctx, t, ty)
        judgment = Judgment(name or pretty_print(t), self.ctx, t, ty)
        result = check_judgment(judgment, cfg)
        shown = "<no valuation>"
        valuations = interp_ctx(self.ctx, cfg)
        if valuations.items:
            interpreter = Interpreter(self.ctx, cfg, self.reduction)
            try:
                value = interpreter.eval(t, interpreter.env_for(valuations.items[0]))
                shown = interpreter.describe(value)
            except KernelError as exc:
                shown = f"<{exc.code}>"
        return shown, result

    def soundness(self, cfg: Optional[ModelConfig] = None) -> SoundnessReport:
        return check_soundness(self.judgments, cfg or self.model)


def check_source(
    text: str,
    reduction: Optional[ReductionConfig] = None,
    model: Optional[ModelConfig] = None,
) -> Session:
    return Session(reduction, model).load(text)
