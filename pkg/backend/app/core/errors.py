from typing import Optional


class FermiMagnusError(Exception):
    """Base class for every error raised by the services."""


class ConfigError(FermiMagnusError, ValueError):
    """
    Invalid experiment configuration.
    Carries the offending key and, when parsed from text, its line number.
    """

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(f"{prefix}{message}")


class DomainError(FermiMagnusError, ValueError):
    """Evaluation outside an operation's domain."""


class ShapeError(FermiMagnusError, ValueError):
    """Operators or states that do not live on the same space."""


class NumericError(FermiMagnusError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class DimensionCeilingError(FermiMagnusError, RuntimeError):
    """Full-matrix path refused because the basis is too large."""

    def __init__(self, dimension: int, ceiling: int):
        self.dimension = dimension
        self.ceiling = ceiling
        super().__init__(
            f"basis dimension {dimension} exceeds the full-matrix ceiling {ceiling}; "
            "reduce modes/photon_cutoff or raise dimension_ceiling"
        )
