"""Exception hierarchy shared by all taylorlaw modules."""


class TaylorLawError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TaylorLawError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(TaylorLawError, ValueError):
    """Input data violates a structural invariant (shape, sign, finiteness)."""


class DegenerateDesignError(TaylorLawError):
    """The log-mean design matrix is numerically singular.

    Carries the offending determinant so callers can report it.
    """

    def __init__(self, det: float):
        self.det = float(det)
        super().__init__(f"degenerate design: det(D) = {det:.3e} below floor")


class SingularityError(TaylorLawError):
    """A matrix that must be positive definite is not.

    Carries the smallest eigenvalue that triggered the failure.
    """

    def __init__(self, min_eigen: float, what: str = "matrix"):
        self.min_eigen = float(min_eigen)
        super().__init__(
            f"{what} is not positive definite: smallest eigenvalue {min_eigen:.3e}"
        )
