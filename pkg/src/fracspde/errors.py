"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its admissible range or inconsistent."""


class NumericError(RuntimeError):
    """A numerical procedure failed (factorization, degenerate data, ...)."""


class AssemblyError(RuntimeError):
    """Assembled operator entries disagree with their quadrature oracle."""
