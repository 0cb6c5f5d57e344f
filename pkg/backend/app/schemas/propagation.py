from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.schemas.space import Operator


class PropagatorKind(str, Enum):
    MAGNUS2_SERIES = "magnus2-series"
    MAGNUS2_EXPONENTIAL = "magnus2-exponential"
    DYSON2 = "dyson2"
    STEP_ORACLE = "step-oracle"


class TimeGrid(BaseModel):
    """Uniform nodes t_k = k * t_end / steps, k = 0..steps."""
    model_config = ConfigDict(frozen=True)

    t_end: float = Field(gt=0)
    steps: int = Field(ge=2)

    @property
    def dt(self) -> float:
        return self.t_end / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.steps) + 0.5) * self.dt


@dataclass(frozen=True, eq=False)
class MagnusPieces:
    M1: Operator
    M2: Operator

    @property
    def exponent(self) -> Operator:
        return self.M1 + self.M2


def thin_indices(count: int, points: int) -> np.ndarray:
    """At most `points` indices into range(count), uniformly strided, first and last kept."""
    if points >= count:
        return np.arange(count)
    return np.unique(np.round(np.linspace(0, count - 1, max(points, 2))).astype(int))
