from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import DEFAULT_OUTPUT_POINTS
from app.schemas.driven_mode import DrivenModeConfig
from app.schemas.fermi import FermiConfig
from app.schemas.propagation import PropagatorKind


class ExperimentName(str, Enum):
    FERMI_ANALYTIC = "fermi-analytic"
    FERMI_NUMERIC = "fermi-numeric"
    RWA_COMPARE = "rwa-compare"
    DRIVEN_MODE = "driven-mode"
    CONVERGENCE = "convergence"
    KERNEL_SMEAR = "kernel-smear"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


# Sweepable parameters per model, as config keys
FERMI_SWEEPS = ("modes", "box_length", "separation", "omega_l", "omega_r", "photon_cutoff", "steps")
DRIVEN_SWEEPS = ("g", "omega", "n_max", "steps")


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: str
    values: Tuple[float, ...] = Field(min_length=1)


class ExperimentConfig(BaseModel):
    """
    One run: the experiment, exactly one model payload and the grid/propagator
    settings. t_max and steps are always filled in by the parser; `defaults`
    names the settings it filled in rather than read, so sweeps can re-derive them.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: ExperimentName
    fermi: Optional[FermiConfig] = None
    driven: Optional[DrivenModeConfig] = None
    t_max: float = Field(gt=0)
    steps: int = Field(ge=2)
    propagator: PropagatorKind = PropagatorKind.MAGNUS2_SERIES
    rwa: bool = False
    method: str = Field("kernel", pattern="^(kernel|matrix)$")
    points: int = Field(DEFAULT_OUTPUT_POINTS, ge=2)
    sweep: Optional[SweepSpec] = None
    format: OutputFormat = OutputFormat.CSV
    output: Optional[str] = None
    defaults: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_payload(self):
        if (self.fermi is None) == (self.driven is None):
            raise ValueError("exactly one model payload (fermi or driven) is required")
        if self.sweep is not None:
            allowed = FERMI_SWEEPS if self.fermi is not None else DRIVEN_SWEEPS
            if self.sweep.parameter not in allowed:
                raise ValueError(f"sweep parameter '{self.sweep.parameter}' is not one of {', '.join(allowed)}")
        return self

    @property
    def model(self) -> str:
        return "fermi" if self.fermi is not None else "driven"

    @property
    def sweep_values(self) -> Tuple[float, ...]:
        return self.sweep.values if self.sweep is not None else ()


Cell = Union[float, int, str, None]


class RunResult(BaseModel):
    """Rectangular table, rows in emission order (outer sweep, then time)."""
    columns: Tuple[str, ...]
    rows: List[Tuple[Cell, ...]] = []
    metadata: Dict[str, Any] = {}

    @model_validator(mode="after")
    def _check_rectangular(self):
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} cells, expected {width}")
        return self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(self.columns))
