"""Exception types shared across the package."""


class DumbbellError(Exception):
    """Base class for all package errors."""


class InvalidSpec(DumbbellError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class MeshFailure(DumbbellError):
    pass


class ParseError(DumbbellError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonFinite(DumbbellError, ValueError):
    pass


class SingularPivot(DumbbellError, ArithmeticError):
    def __init__(self, index, pivot=0.0):
        self.index = int(index)
        self.pivot = float(pivot)
        super().__init__(f"pivot {self.index} broke down (d = {self.pivot:.3e})")


class NoConvergence(DumbbellError):
    def __init__(self, iterations, converged=0, wanted=0):
        self.iterations = int(iterations)
        self.converged = converged
        self.wanted = wanted
        super().__init__(
            f"Lanczos stopped after {iterations} steps with {converged}/{wanted} converged pairs"
        )


class AmbiguousCluster(UserWarning):
    """A near-degenerate eigenvalue cluster of size > 2 was diagonalised anyway."""


class NearResonance(DumbbellError, ValueError):
    pass


class InternalMismatch(DumbbellError, AssertionError):
    pass


class ResolutionExceeded(DumbbellError, ValueError):
    pass


class RefineNeeded(DumbbellError):
    pass


class ZeroEndpoint(DumbbellError, ValueError):
    pass


class Resonant(DumbbellError, ValueError):
    pass


class AssumptionViolated(DumbbellError, ValueError):
    pass


class AllBelowThreshold(DumbbellError, ValueError):
    pass


class InsufficientData(DumbbellError, ValueError):
    pass


class BranchNotFound(DumbbellError):
    pass


class TheoremViolation(DumbbellError):
    def __init__(self, message, evidence=None):
        self.evidence = evidence or {}
        super().__init__(message)


class ConfigError(DumbbellError, ValueError):
    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
