"""Surface syntax: grammar, surface trees, vernacular items and printing."""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from .errors import KernelError, VernacularError
from .syntax import (
    App,
    BVar,
    Case,
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
    base_name,
    fresh_name,
    free_vars,
    instantiate,
    subterms,
    unfold_app,
)

logger = logging.getLogger(__name__)

GRAMMAR = r"""
    start: item*
    expr: term

    ?item: inductive | definition | fixpoint | parameter | check | assert_eq | eval | model

    inductive: "Inductive" ind_body ("with" ind_body)* "."
    ind_body: IDENT binder_group* ":" term ":=" ["|"] [constructor ("|" constructor)*]
    constructor: IDENT ":" term

    definition: "Definition" IDENT binder_group* [":" term] ":=" term "."
    fixpoint: "Fixpoint" fix_def ("with" fix_def)* "."
    parameter: "Parameter" IDENT ":" term "."
    check: "Check" term [":" term] "."
    assert_eq: "Assert" term "=" term ":" term "."
    eval: "Eval" term "."
    model: "Model" term ":" term ["depth" INT] "."

    ?term: "forall" binder_group+ "," term         -> forall
         | "fun" binder_group+ "=>" term           -> fun
         | "let" IDENT ":=" term [":" term] "in" term -> let
         | arrow

    ?arrow: application "->" arrow                 -> arrow
          | application

    ?application: atom
                | atom atom+                        -> apply

    ?atom: IDENT                                    -> var
         | "Prop"                                   -> prop
         | TYPE                                     -> type_sort
         | "(" term ")"
         | match
         | case
         | fix

    binder_group: "(" IDENT+ ":" term ")"

    match: "match" term ["as" IDENT] [match_in] ["return" term] "with" ["|"] [branch ("|" branch)*] "end"
    match_in: "in" IDENT IDENT*
    branch: IDENT IDENT* "=>" term

    case: "case" term "return" term "of" [term ("|" term)*] "end"

    fix: "fix" fix_def ("with" fix_def)* "for" IDENT
    fix_def: IDENT "/" INT ":" term ":=" term

    TYPE.2: /Type[0-9]+(?![A-Za-z0-9_'])/
    IDENT: /[A-Za-z_][A-Za-z0-9_']*/
    COMMENT.3: /\(\*(.|\n)*?\*\)/

    %import common.INT
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""


# ---------------------------------------------------------------------------
# surface trees


class Surface:
    __slots__ = ()


@dataclass(frozen=True)
class SVar(Surface):
    name: str
    line: Optional[int] = None
    column: Optional[int] = None


@dataclass(frozen=True)
class SSort(Surface):
    level: Optional[int]


Binder = Tuple[str, Surface]


@dataclass(frozen=True)
class SPi(Surface):
    binders: Tuple[Binder, ...]
    body: Surface


@dataclass(frozen=True)
class SLam(Surface):
    binders: Tuple[Binder, ...]
    body: Surface


@dataclass(frozen=True)
class SArrow(Surface):
    domain: Surface
    codomain: Surface


@dataclass(frozen=True)
class SLet(Surface):
    name: str
    value: Surface
    type: Optional[Surface]
    body: Surface


@dataclass(frozen=True)
class SApp(Surface):
    fn: Surface
    args: Tuple[Surface, ...]


@dataclass(frozen=True)
class SCase(Surface):
    scrutinee: Surface
    motive: Surface
    branches: Tuple[Surface, ...]


@dataclass(frozen=True)
class SBranch:
    constructor: str
    names: Tuple[str, ...]
    body: Surface


@dataclass(frozen=True)
class SMatch(Surface):
    scrutinee: Surface
    as_name: Optional[str]
    in_type: Optional[str]
    in_names: Tuple[str, ...]
    returns: Optional[Surface]
    branches: Tuple[SBranch, ...]
    line: Optional[int] = None
    column: Optional[int] = None


@dataclass(frozen=True)
class SFixDef:
    name: str
    position: int  # 1-based, as written after the slash
    type: Surface
    body: Surface


@dataclass(frozen=True)
class SFix(Surface):
    defs: Tuple[SFixDef, ...]
    chosen: str


# ---------------------------------------------------------------------------
# vernacular items


@dataclass(frozen=True)
class VernacularItem:
    line: Optional[int]
    column: Optional[int]

    kind = "item"

    @property
    def label(self) -> str:
        return getattr(self, "name", "")


@dataclass(frozen=True)
class IndBody:
    name: str
    params: Tuple[Binder, ...]
    arity: Surface
    constructors: Tuple[Tuple[str, Surface], ...]


@dataclass(frozen=True)
class InductiveItem(VernacularItem):
    bodies: Tuple[IndBody, ...]

    kind = "inductive"

    @property
    def label(self) -> str:
        return ", ".join(b.name for b in self.bodies)


@dataclass(frozen=True)
class DefinitionItem(VernacularItem):
    name: str
    binders: Tuple[Binder, ...]
    type: Optional[Surface]
    body: Surface

    kind = "definition"


@dataclass(frozen=True)
class FixpointItem(VernacularItem):
    defs: Tuple[SFixDef, ...]

    kind = "fixpoint"

    @property
    def label(self) -> str:
        return ", ".join(d.name for d in self.defs)


@dataclass(frozen=True)
class ParameterItem(VernacularItem):
    name: str
    type: Surface

    kind = "parameter"


@dataclass(frozen=True)
class CheckItem(VernacularItem):
    term: Surface
    type: Optional[Surface]

    kind = "check"


@dataclass(frozen=True)
class AssertItem(VernacularItem):
    lhs: Surface
    rhs: Surface
    type: Surface

    kind = "assert"


@dataclass(frozen=True)
class EvalItem(VernacularItem):
    term: Surface

    kind = "eval"


@dataclass(frozen=True)
class ModelItem(VernacularItem):
    term: Surface
    type: Surface
    depth: Optional[int]

    kind = "model"


# ---------------------------------------------------------------------------
# parse tree to surface tree


def _binders(groups: Sequence[Tuple[Binder, ...]]) -> Tuple[Binder, ...]:
    return tuple(b for group in groups for b in group)


@v_args(inline=True)
class SurfaceTransformer(Transformer):
    def start(self, *items):
        return list(items)

    def expr(self, term):
        return term

    # -- terms --

    def var(self, name: Token) -> SVar:
        return SVar(str(name), name.line, name.column)

    def prop(self) -> SSort:
        return SSort(None)

    def type_sort(self, token: Token) -> SSort:
        return SSort(int(str(token)[4:]))

    def binder_group(self, *children) -> Tuple[Binder, ...]:
        *names, ty = children
        return tuple((str(n), ty) for n in names)

    def forall(self, *children) -> SPi:
        *groups, body = children
        return SPi(_binders(groups), body)

    def fun(self, *children) -> SLam:
        *groups, body = children
        return SLam(_binders(groups), body)

    def let(self, name: Token, value, ty, body) -> SLet:
        return SLet(str(name), value, ty, body)

    def arrow(self, domain, codomain) -> SArrow:
        return SArrow(domain, codomain)

    def apply(self, fn, *args) -> SApp:
        return SApp(fn, tuple(args))

    def branch(self, con: Token, *rest) -> SBranch:
        *names, body = rest
        return SBranch(str(con), tuple(str(n) for n in names), body)

    def match_in(self, ind: Token, *names: Token) -> Tuple[str, Tuple[str, ...]]:
        return str(ind), tuple(str(n) for n in names)

    @v_args(meta=True)
    def match(self, meta, children) -> SMatch:
        scrutinee, as_name, in_clause, returns, *branches = children
        in_type, in_names = in_clause if in_clause is not None else (None, ())
        return SMatch(
            scrutinee,
            None if as_name is None else str(as_name),
            in_type,
            in_names,
            returns,
            tuple(b for b in branches if b is not None),
            getattr(meta, "line", None),
            getattr(meta, "column", None),
        )

    def case(self, scrutinee, motive, *branches) -> SCase:
        return SCase(scrutinee, motive, tuple(b for b in branches if b is not None))

    def fix_def(self, name: Token, position: Token, ty, body) -> SFixDef:
        return SFixDef(str(name), int(position), ty, body)

    def fix(self, *children) -> SFix:
        *defs, chosen = children
        return SFix(tuple(defs), str(chosen))

    # -- items --

    def constructor(self, name: Token, ty) -> Tuple[str, Surface]:
        return str(name), ty

    def ind_body(self, name: Token, *rest) -> IndBody:
        groups = []
        rest = list(rest)
        while rest and isinstance(rest[0], tuple) and rest[0] and isinstance(rest[0][0], tuple):
            groups.append(rest.pop(0))
        arity, *cons = rest
        cons = [c for c in cons if c is not None]
        return IndBody(str(name), _binders(groups), arity, tuple(cons))

    @v_args(meta=True)
    def inductive(self, meta, children) -> InductiveItem:
        return InductiveItem(meta.line, meta.column, tuple(children))

    @v_args(meta=True)
    def definition(self, meta, children) -> DefinitionItem:
        name, *rest = children
        groups = []
        while rest and isinstance(rest[0], tuple):
            groups.append(rest.pop(0))
        ty, body = rest
        return DefinitionItem(meta.line, meta.column, str(name), _binders(groups), ty, body)

    @v_args(meta=True)
    def fixpoint(self, meta, children) -> FixpointItem:
        return FixpointItem(meta.line, meta.column, tuple(children))

    @v_args(meta=True)
    def parameter(self, meta, children) -> ParameterItem:
        name, ty = children
        return ParameterItem(meta.line, meta.column, str(name), ty)

    @v_args(meta=True)
    def check(self, meta, children) -> CheckItem:
        term, ty = children
        return CheckItem(meta.line, meta.column, term, ty)

    @v_args(meta=True)
    def assert_eq(self, meta, children) -> AssertItem:
        lhs, rhs, ty = children
        return AssertItem(meta.line, meta.column, lhs, rhs, ty)

    @v_args(meta=True)
    def eval(self, meta, children) -> EvalItem:
        (term,) = children
        return EvalItem(meta.line, meta.column, term)

    @v_args(meta=True)
    def model(self, meta, children) -> ModelItem:
        term, ty, depth = children
        return ModelItem(meta.line, meta.column, term, ty, None if depth is None else int(depth))


@lru_cache(maxsize=None)
def _parser() -> Lark:
    return Lark(
        GRAMMAR,
        start=["start", "expr"],
        parser="lalr",
        propagate_positions=True,
        maybe_placeholders=True,
    )


def _parse(text: str, start: str):
    try:
        tree = _parser().parse(text, start=start)
        return SurfaceTransformer().transform(tree)
    except UnexpectedEOF as exc:
        raise VernacularError(f"unexpected end of input, expected one of {sorted(exc.expected)}")
    except UnexpectedCharacters as exc:
        raise VernacularError(
            f"unexpected character {text[exc.pos_in_stream]!r}", line=exc.line, column=exc.column
        )
    except UnexpectedInput as exc:
        token = getattr(exc, "token", None)
        shown = "end of input" if token is None or token.type == "$END" else repr(str(token))
        raise VernacularError(
            f"unexpected {shown}", line=getattr(exc, "line", None), column=getattr(exc, "column", None)
        )
    except VisitError as exc:
        if isinstance(exc.orig_exc, KernelError):
            raise exc.orig_exc
        raise


def parse_file(text: str) -> List[VernacularItem]:
    """Parse a vernacular file into its items, in file order."""
    items = _parse(text, "start")
    logger.debug("parsed %d items", len(items))
    return items


def parse_surface(text: str) -> Surface:
    return _parse(text, "expr")


def parse_term(text: str) -> Term:
    """Parse a closed term; names that are not bound in it become ``Var``."""
    return TermBuilder().build(parse_surface(text))


# ---------------------------------------------------------------------------
# surface tree to term


@dataclass(frozen=True)
class ScopeEntry:
    name: str
    internal: str
    type: Optional[Term]
    value: Optional[Term] = None


Scope = Tuple[ScopeEntry, ...]


def close_binders(kind, entries: Sequence[ScopeEntry], body: Term) -> Term:
    """Close ``body`` over ``entries`` with ``Pi`` or ``Lam``; hints keep the surface names."""
    internals = [e.internal for e in entries]
    result = abstract(body, internals)
    for i in range(len(entries) - 1, -1, -1):
        result = kind(entries[i].name, abstract(entries[i].type, internals[:i]), result)
    return result


class TermBuilder:
    """Turns surface trees into terms.

    Bound names become de Bruijn indices, all other names are handed to
    ``global_ref``. ``match`` needs typing information and is left to
    subclasses.
    """

    def global_ref(self, name: str, node: SVar) -> Term:
        return Var(name)

    def match(self, node: SMatch, scope: Scope) -> Term:
        raise VernacularError(
            "match needs a typing context; use case ... return ... of ... end",
            line=node.line,
            column=node.column,
        )

    def let_type(self, value: Term, scope: Scope) -> Optional[Term]:
        """Type recorded for an unannotated let binder; unknown without a context."""
        return None

    def bind(self, binders: Sequence[Binder], scope: Scope) -> Tuple[Scope, List[ScopeEntry]]:
        entries = []
        for name, ty in binders:
            entry = ScopeEntry(name, fresh_name(name), self.build(ty, scope))
            entries.append(entry)
            scope = scope + (entry,)
        return scope, entries

    def build(self, s: Surface, scope: Scope = ()) -> Term:
        if isinstance(s, SVar):
            for entry in reversed(scope):
                if entry.name == s.name:
                    return Var(entry.internal)
            return self.global_ref(s.name, s)
        if isinstance(s, SSort):
            return Sort(s.level)
        if isinstance(s, (SPi, SLam)):
            inner, entries = self.bind(s.binders, scope)
            kind = Pi if isinstance(s, SPi) else Lam
            return close_binders(kind, entries, self.build(s.body, inner))
        if isinstance(s, SArrow):
            return Pi("_", self.build(s.domain, scope), self.build(s.codomain, scope))
        if isinstance(s, SLet):
            value = self.build(s.value, scope)
            ty = None if s.type is None else self.build(s.type, scope)
            known = ty if ty is not None else self.let_type(value, scope)
            entry = ScopeEntry(s.name, fresh_name(s.name), known, value)
            body = self.build(s.body, scope + (entry,))
            return LetIn(s.name, value, ty, abstract(body, [entry.internal]))
        if isinstance(s, SApp):
            result = self.build(s.fn, scope)
            for arg in s.args:
                result = App(result, self.build(arg, scope))
            return result
        if isinstance(s, SCase):
            return Case(
                self.build(s.scrutinee, scope),
                self.build(s.motive, scope),
                tuple(self.build(b, scope) for b in s.branches),
            )
        if isinstance(s, SMatch):
            return self.match(s, scope)
        if isinstance(s, SFix):
            return self.build_fix(s.defs, s.chosen, scope)
        raise VernacularError(f"unsupported syntax {s!r}")

    def build_fix(self, defs: Sequence[SFixDef], chosen: str, scope: Scope) -> Fix:
        names = [d.name for d in defs]
        if len(set(names)) != len(names):
            raise VernacularError("duplicate function names in a fix block", rule="names")
        if chosen not in names:
            raise VernacularError(f"{chosen} is not defined by this fix block", rule="names")
        for d in defs:
            if d.position < 1:
                raise VernacularError(f"recursive position of {d.name} must be at least 1")
        types = [self.build(d.type, scope) for d in defs]
        entries = [ScopeEntry(d.name, fresh_name(d.name), ty) for d, ty in zip(defs, types)]
        inner = scope + tuple(entries)
        internals = [e.internal for e in entries]
        fix_defs = tuple(
            FixDef(d.name, d.position - 1, ty, abstract(self.build(d.body, inner), internals))
            for d, ty in zip(defs, types)
        )
        return Fix(names.index(chosen), fix_defs)


# ---------------------------------------------------------------------------
# printing

_ATOM, _APP, _TERM = 2, 1, 0


def _occurs_first(t: Term) -> bool:
    probe = fresh_name("probe")
    return probe in free_vars(instantiate(t, [Var(probe)]))


def _global_names(t: Term) -> set:
    names = set()

    def walk(t: Term) -> None:
        if isinstance(t, Var):
            names.add(_printable(t.name))
        elif isinstance(t, IndRef):
            names.add(t.name)
        for sub in subterms(t):
            walk(sub)

    walk(t)
    return names


def _printable(name: str) -> str:
    return name.replace("#", "_")


class _Printer:
    def __init__(self, avoid: set):
        self.avoid = avoid

    def pick(self, hint: str, names: Tuple[str, ...]) -> str:
        base = _printable(base_name(hint))
        if base == "_" or not base:
            base = "x"
        candidate = base
        n = 0
        while candidate in names or candidate in self.avoid:
            n += 1
            candidate = f"{base}{n}"
        return candidate

    def show(self, t: Term, names: Tuple[str, ...], level: int) -> str:
        if isinstance(t, Sort):
            return str(t)
        if isinstance(t, Var):
            return _printable(t.name)
        if isinstance(t, BVar):
            if t.index < len(names):
                return names[-1 - t.index]
            return f"#{t.index}"
        if isinstance(t, IndRef):
            return t.name
        if isinstance(t, App):
            head, args = unfold_app(t)
            text = " ".join(
                [self.show(head, names, _ATOM)] + [self.show(a, names, _ATOM) for a in args]
            )
            return text if level <= _APP else f"({text})"
        if isinstance(t, Pi):
            if base_name(t.name) == "_" and not _occurs_first(t.codomain):
                text = (
                    f"{self.show(t.domain, names, _APP)} -> "
                    f"{self.show(t.codomain, names + ('_',), _TERM)}"
                )
            else:
                x = self.pick(t.name, names)
                text = (
                    f"forall ({x}:{self.show(t.domain, names, _TERM)}), "
                    f"{self.show(t.codomain, names + (x,), _TERM)}"
                )
            return text if level == _TERM else f"({text})"
        if isinstance(t, Lam):
            x = self.pick(t.name, names)
            text = (
                f"fun ({x}:{self.show(t.domain, names, _TERM)}) => "
                f"{self.show(t.body, names + (x,), _TERM)}"
            )
            return text if level == _TERM else f"({text})"
        if isinstance(t, LetIn):
            x = self.pick(t.name, names)
            annotation = ""
            if t.value_type is not None:
                annotation = f" : {self.show(t.value_type, names, _TERM)}"
            text = (
                f"let {x} := {self.show(t.value, names, _TERM)}{annotation} in "
                f"{self.show(t.body, names + (x,), _TERM)}"
            )
            return text if level == _TERM else f"({text})"
        if isinstance(t, Case):
            branches = " | ".join(self.show(b, names, _TERM) for b in t.branches)
            return (
                f"case {self.show(t.scrutinee, names, _TERM)} "
                f"return {self.show(t.motive, names, _TERM)} of {branches} end"
            ).replace(" of  end", " of end")
        if isinstance(t, Fix):
            fn_names: List[str] = []
            for d in t.defs:
                fn_names.append(self.pick(d.name, names + tuple(fn_names)))
            inner = names + tuple(fn_names)
            parts = [
                f"{f} / {d.rec_arg + 1} : {self.show(d.type, names, _TERM)} := "
                f"{self.show(d.body, inner, _TERM)}"
                for f, d in zip(fn_names, t.defs)
            ]
            text = f"fix {' with '.join(parts)} for {fn_names[t.index]}"
            return text if level == _TERM else f"({text})"
        return repr(t)


def pretty_print(t: Term) -> str:
    """Concrete syntax for ``t``; parsing the result gives back ``t`` up to renaming.

    Inductive types and constructors print as their bare names. Names are
    unique within a context, so the text parses back to the same references
    only through the session (``Session.parse_term``) whose context declares
    the block. :func:`parse_term` alone yields plain variables in their place.
    """
    return _Printer(_global_names(t)).show(t, (), _TERM)
