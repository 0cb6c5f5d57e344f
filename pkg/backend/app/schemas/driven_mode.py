import math
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


class DrivenModeConfig(BaseModel):
    """Single bosonic mode driven by a classical current: V(t) = g (a e^{-i w t} + a^dagger e^{i w t})."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    g: float = 0.3
    omega: float = Field(1.0, gt=0)
    n_max: int = Field(12, ge=2)
    hbar: float = Field(1.0, gt=0)

    @property
    def strength(self) -> float:
        """g / (hbar omega)"""
        return self.g / (self.hbar * self.omega)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega


class DivergenceFit(BaseModel):
    """
    Log-log slope of the vacuum norm defect against t.
    degenerate is set (and slope left empty) when the defect never rises above
    the floor, e.g. for unitary propagators.
    """
    model_config = ConfigDict(frozen=True)

    kind: str
    slope: Optional[float] = None
    degenerate: bool = False
    period_average: bool = False
    samples: Tuple[float, ...] = ()
