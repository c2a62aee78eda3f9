"""Exception hierarchy shared by all modules."""


class EFPError(Exception):
    """Base class for errors raised by efpdet."""


class DomainError(EFPError, ValueError):
    """An argument lies outside the admissible domain of an operation."""


class SingularPointError(DomainError):
    """Evaluation requested at a pole, branch point or essential singularity."""


class KernelRangeError(EFPError, OverflowError):
    """A kernel evaluation would overflow outside its natural domain."""


class DivergentIntegralError(DomainError):
    """The integrand of a half-line integral does not decay."""


class SingularMatrixError(EFPError, ArithmeticError):
    """Elimination met an exactly zero pivot."""


class UntrustedResultError(EFPError):
    """A numerical result failed its trust guard (e.g. pivot too small)."""
