"""Exception hierarchy shared by the simulator, algorithms and CLI."""


class QuantumSimError(Exception):
    """Base class for every error raised by this package."""


class SizeError(QuantumSimError, ValueError):
    """Qubit count outside the supported range, or mismatched sizes."""


class DomainError(QuantumSimError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InfeasibleError(DomainError):
    """The instance cannot be amplified (e.g. a node has zero local success probability)."""


class NumericError(QuantumSimError, ArithmeticError):
    """A numerical invariant (normalization, exactness) was violated."""
