"""Exception types raised across the package."""


class DriftSpecError(Exception):
    """Base class for all package errors."""


# numerics
class NonHermitianInput(DriftSpecError, ValueError):
    pass


class NoConvergence(DriftSpecError, RuntimeError):
    pass


class SingularSystem(DriftSpecError, ValueError):
    pass


class DomainError(DriftSpecError, ValueError):
    pass


# hamiltonian
class LengthMismatch(DriftSpecError, ValueError):
    pass


class InvalidSize(DriftSpecError, ValueError):
    pass


class TooLarge(DriftSpecError, ValueError):
    pass


class NonHermitian(DriftSpecError, ValueError):
    pass


class ParseError(DriftSpecError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# simulator
class UnsupportedFamily(DriftSpecError, ValueError):
    pass


class ShapeMismatch(DriftSpecError, ValueError):
    pass


class InvalidProbability(DriftSpecError, ValueError):
    pass


# ite
class ZeroNorm(DriftSpecError, ArithmeticError):
    pass


class EmptySpectrum(DriftSpecError, ValueError):
    pass


# clustering
class MixedAnsatz(DriftSpecError, ValueError):
    pass


class TooFewPoints(DriftSpecError, ValueError):
    pass


class KTooLarge(DriftSpecError, ValueError):
    pass


class SingleCluster(DriftSpecError, ValueError):
    pass


class TooFewValues(DriftSpecError, ValueError):
    pass


class EmptyCluster(DriftSpecError, ValueError):
    pass


class DimensionMismatch(DriftSpecError, ValueError):
    pass


# refine
class SingularShift(DriftSpecError, ValueError):
    pass


class InvalidWindow(DriftSpecError, ValueError):
    pass


class WindowViolation(DriftSpecError, ValueError):
    pass


# stats
class TooShort(DriftSpecError, ValueError):
    pass


class DegenerateLabels(DriftSpecError, ValueError):
    pass
