"""
errors.py

Exception hierarchy shared by every stage. Library code raises, only
cli.main turns exceptions into exit codes:

  SpectraError            → 2  (usage / input)
  BudgetExceeded          → 3  (desk-scale limit hit)
  InternalInconsistency   → 4  (a decision said yes, construction disagreed)
"""

from typing import Optional


class SpectraError(Exception):
    exit_code = 2


class FormulaSyntaxError(SpectraError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnknownSymbolError(SpectraError, ValueError):
    pass


class SignatureError(SpectraError, ValueError):
    pass


class NotNormalFormError(SpectraError, ValueError):
    def __init__(self, message: str, offending=None):
        self.offending = offending
        super().__init__(message)


class PreconditionError(SpectraError, ValueError):
    pass


class UnassignedVariableError(SpectraError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unassigned variable"


class BudgetExceeded(SpectraError):
    exit_code = 3

    def __init__(self, budget: str, limit, observed=None, detail: str = ""):
        self.budget = budget
        self.limit = limit
        self.observed = observed
        msg = f"budget '{budget}' exceeded (limit={limit}"
        if observed is not None:
            msg += f", observed={observed}"
        msg += ")"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class OracleCapExceeded(BudgetExceeded):
    pass


class InternalInconsistency(SpectraError, RuntimeError):
    exit_code = 4
