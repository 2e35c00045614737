"""Exception hierarchy and CLI exit codes."""


class GuessleakError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(GuessleakError):
    """Input file could not be parsed."""


class ValidationError(GuessleakError):
    """Inputs parse but violate a contract (dimensions, sums, consistency)."""


class MixtureConsistencyError(ValidationError):
    """Mechanism weights and columns do not reproduce the curator marginal."""


class AbsoluteContinuityError(ValidationError):
    """Divergence of a pair (p, q) with mass of p outside the support of q."""


class CapExceededError(GuessleakError):
    """A configured size cap (alphabet dimension) would be exceeded."""


class BudgetExceededError(GuessleakError):
    """A configured enumeration budget would be exceeded."""


class SolverError(GuessleakError):
    """Numerical failure inside the LP solver or curve assembly."""


class InfeasibleError(SolverError):
    """The LP has no feasible point; signals an internal bug, not user error."""


class VerificationError(GuessleakError):
    """An end-to-end verification run found an invariant breach."""


# Exit codes for the command line surface. 0 is success, 1 is reserved for
# unexpected internal errors.
EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_CAP = 4
EXIT_BREACH = 5
