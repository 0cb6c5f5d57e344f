from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import M2_CONVENTION, MODE_TAPER_WIDTHS
from app.core.errors import DomainError, ShapeError
from app.schemas.propagation import thin_indices

BOX_FACTOR = 8.0      # default box_length = 8 R
MIN_BOX_FACTOR = 4.0  # box_length >= 4 R


class ModeTaper(str, Enum):
    GAUSSIAN = "gaussian"  # coupling^2 of mode n weighted by exp(-(w n / N)^2 / 2)
    SHARP = "sharp"        # every mode up to N at full weight


class FermiConfig(BaseModel):
    """
    Two stationary two-level atoms, L at z_l (initially ground) and R at z_r
    (initially excited), coupled through a box-quantised 1D field with
    N modes nu_n = n * 2 pi c / L on each of the two branches.

    With a sharp top mode the equal-time mode sum sum_n cos(nu_n R/c) never
    settles, which leaves an O(R/L) non-causal term in every time-integrated
    amplitude. The default Gaussian taper rolls the couplings off towards nu_N
    so the ladder converges to the continuum as N grows at fixed L.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    omega_l: float = Field(8.0, gt=0)
    omega_r: float = Field(10.0, gt=0)
    z_l: float = 0.0
    z_r: float = 1.0
    dipole_l: float = 1.0
    dipole_r: float = 1.0
    epsilon0: float = Field(1.0, gt=0)
    hbar: float = Field(1.0, gt=0)
    c: float = Field(1.0, gt=0)
    box_length: Optional[float] = Field(None, gt=0)
    modes_per_branch: int = Field(256, ge=1)
    photon_cutoff: int = Field(2, ge=1)
    taper: ModeTaper = ModeTaper.GAUSSIAN

    @model_validator(mode="before")
    @classmethod
    def _default_box(cls, data):
        if isinstance(data, dict) and data.get("box_length") is None:
            z_l = data.get("z_l", cls.model_fields["z_l"].default)
            z_r = data.get("z_r", cls.model_fields["z_r"].default)
            try:
                data = {**data, "box_length": BOX_FACTOR * (float(z_r) - float(z_l))}
            except (TypeError, ValueError):
                pass  # field validation reports the bad position
        return data

    @model_validator(mode="after")
    def _check_geometry(self):
        if self.separation <= 0:
            raise ValueError(f"separation z_r - z_l must be positive, got {self.separation}")
        if self.box_length < MIN_BOX_FACTOR * self.separation:
            raise ValueError(
                f"box_length {self.box_length} must be at least {MIN_BOX_FACTOR:g} x separation ({self.separation})"
            )
        return self

    @property
    def separation(self) -> float:
        return self.z_r - self.z_l

    @property
    def light_time(self) -> float:
        """R/c"""
        return self.separation / self.c

    @property
    def coupling_l(self) -> float:
        return self.dipole_l * np.sqrt(self.hbar / (self.epsilon0 * self.box_length))

    @property
    def coupling_r(self) -> float:
        return self.dipole_r * np.sqrt(self.hbar / (self.epsilon0 * self.box_length))

    @property
    def mode_spacing(self) -> float:
        return 2 * np.pi * self.c / self.box_length

    @property
    def mode_ladder(self) -> np.ndarray:
        """nu_n, n = 1..N (one branch)."""
        return self.mode_spacing * np.arange(1, self.modes_per_branch + 1)

    @property
    def mode_weights(self) -> np.ndarray:
        """Taper factor on g_L g_R for each rung of mode_ladder."""
        if self.taper is ModeTaper.SHARP:
            return np.ones(self.modes_per_branch)
        x = MODE_TAPER_WIDTHS * np.arange(1, self.modes_per_branch + 1) / self.modes_per_branch
        return np.exp(-0.5 * x * x)

    @property
    def fastest_frequency(self) -> float:
        return max(self.omega_l, self.omega_r) + self.mode_ladder[-1]


class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: str
    rwa: bool = False
    method: str = "closed-form"
    modes_per_branch: Optional[int] = None
    convention: str = M2_CONVENTION


@dataclass(frozen=True, eq=False)
class AmplitudeSeries:
    times: np.ndarray
    amplitudes: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if times.shape != amplitudes.shape or times.ndim != 1:
            raise ShapeError(f"times {times.shape} and amplitudes {amplitudes.shape} must be equal-length 1D")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise DomainError("times must be strictly increasing")
        times.flags.writeable = False
        amplitudes.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amplitudes", amplitudes)

    def __len__(self) -> int:
        return self.times.size

    def thinned(self, points: int) -> "AmplitudeSeries":
        """At most `points` samples, uniformly strided, last sample kept."""
        if points >= len(self):
            return self
        idx = thin_indices(len(self), points)
        return AmplitudeSeries(self.times[idx], self.amplitudes[idx], self.provenance)


@dataclass(frozen=True)
class KernelSample:
    t_prime: float
    t_double_prime: float
    value: complex
