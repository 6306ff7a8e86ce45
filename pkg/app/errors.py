from typing import Optional

from fastapi import status

from .schemas import Diagnostic

# Rule labels used in diagnostics. Typing rules keep their usual names,
# inductive admission reports the violated bullet of (ind-wf).
RULE_WF = "(wf)"
RULE_AX = "(ax)"
RULE_VAR = "(var)"
RULE_PI = "(Π)"
RULE_LAM = "(λ)"
RULE_APP = "(app)"
RULE_LET = "(let)"
RULE_CONV = "(conv)"
RULE_CUM = "(cum)"
RULE_IND_TYPE = "(ind-type)"
RULE_IND_CONST = "(ind-const)"
RULE_CASE = "(case)"
RULE_ELIM = "(case) elimination"
RULE_FIX = "(fix)"
RULE_GUARD = "F guard"
RULE_FRESH = "(ind-wf) fresh names"
RULE_ARITY = "(ind-wf) arity"
RULE_SORT = "(ind-wf) sort"
RULE_PARAMS = "(ind-wf) parameters"
RULE_CONSTRUCTOR = "(ind-wf) constructor"
RULE_UNIVERSE = "(ind-wf) universe"
RULE_POSITIVITY = "(ind-wf) positivity"
RULE_SYNTAX = "syntax"
RULE_NAMES = "names"
RULE_ASSERT = "assert"
RULE_MODEL = "model"
RULE_FUEL = "fuel"


class KernelError(Exception):
    def __init__(
        self,
        code: str,
        message: str,
        rule: str = "",
        status: int = status.HTTP_400_BAD_REQUEST,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        super().__init__(message)
        self.code = code
        self.message = message
        self.rule = rule
        self.status = status
        self.line = line
        self.column = column

    def at(self, line: Optional[int], column: Optional[int]) -> "KernelError":
        if self.line is None:
            self.line = line
            self.column = column
        return self

    def to_diagnostic(self) -> Diagnostic:
        return Diagnostic(
            severity="error",
            line=self.line,
            column=self.column,
            rule=self.rule,
            message=self.message,
        )

    def __str__(self) -> str:
        return f"{self.rule}: {self.message}" if self.rule else self.message


class TypingError(KernelError):
    def __init__(self, rule: str, message: str):
        super().__init__(
            code="type_error",
            message=message,
            rule=rule,
            status=status.HTTP_422_UNPROCESSABLE_ENTITY,
        )


class GuardError(TypingError):
    def __init__(self, message: str):
        super().__init__(RULE_GUARD, message)
        self.code = "guard_error"


class FuelExhausted(KernelError):
    def __init__(self, max_steps: int):
        super().__init__(
            code="fuel_exhausted",
            message=f"reduction did not finish within {max_steps} steps",
            rule=RULE_FUEL,
            status=status.HTTP_422_UNPROCESSABLE_ENTITY,
        )
        self.max_steps = max_steps


class BoundExceeded(KernelError):
    def __init__(self, message: str):
        super().__init__(code="bound_exceeded", message=message, rule=RULE_MODEL)


class InterpretationUndefined(KernelError):
    def __init__(self, message: str):
        super().__init__(code="undefined", message=message, rule=RULE_MODEL)


class VernacularError(KernelError):
    def __init__(
        self,
        message: str,
        rule: str = RULE_SYNTAX,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        super().__init__(
            code="parse_error" if rule == RULE_SYNTAX else "vernacular_error",
            message=message,
            rule=rule,
            line=line,
            column=column,
        )
