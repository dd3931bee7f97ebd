"""Exception and warning types shared across the package."""


class HjjError(Exception):
    """Base class for all package errors."""


class ExprError(HjjError):
    """Base class for expression language errors."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (position {position})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    """Malformed expression source."""


class ExprNameError(ExprError):
    """Reference to an undeclared variable or unknown function."""


class ExprDomainError(ExprError):
    """Evaluation hit an invalid operand (log of nonpositive, zero divide, ...)."""


class BlowUpError(HjjError):
    """Integration produced a non-finite value."""

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"non-finite state encountered at t={time:.6g}")


class RangeViolationError(HjjError):
    """The scalar characteristic component left its admissible band [a, b]."""

    def __init__(self, time: float, value: float, lo: float, hi: float):
        self.time = time
        self.value = value
        super().__init__(
            f"u left [{lo:.6g}, {hi:.6g}] at t={time:.6g} (value {value:.6g}); "
            "this signals a hypothesis violation"
        )


class StencilError(HjjError):
    """A finite-difference stencil crossed a jump time or left the domain ball."""


class MaxIterError(HjjError):
    """Fixed-point iteration hit the iteration cap before converging."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations (last residual {residual:.3e})"
        )


class NonContractionError(HjjError):
    """Observed iteration modulus reached 1; the fixed-point map is not a contraction."""

    def __init__(self, modulus: float):
        self.modulus = modulus
        super().__init__(
            f"iteration modulus {modulus:.6g} >= 1; hypotheses do not hold at this point"
        )


class UnsupportedRegimeError(HjjError):
    """Requested operation is not defined for the problem's regime."""


class ContainmentWarning(UserWarning):
    """A computed point left the containment ball its regime guarantees."""
