from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import ShapeError


class Branch(str, Enum):
    LEFT = "left"    # left-moving: e^{-i nu (ct + z)/c}
    RIGHT = "right"  # right-moving: e^{-i nu (ct - z)/c}

    @property
    def sign(self) -> int:
        """Sign multiplying nu*z/c in the spatial phase."""
        return 1 if self is Branch.LEFT else -1


class Mode(BaseModel):
    model_config = ConfigDict(frozen=True)

    frequency: float = Field(gt=0)
    branch: Branch = Branch.RIGHT


class SpaceDescriptor(BaseModel):
    """
    Truncated tensor-product basis of two-level atoms and bosonic modes.
    Basis index = photon_tuple_index * 2**atom_count + atomic_index, so the
    atomic index varies fastest. Photon tuples with total <= max_total_photons
    are enumerated lexicographically; atomic_index = sum_j level_j * 2**j with
    level 0 = ground |b>, 1 = excited |a>.
    """
    model_config = ConfigDict(frozen=True)

    atom_count: int = Field(ge=0)
    modes: Tuple[Mode, ...] = ()
    max_total_photons: int = Field(ge=0)

    @property
    def mode_count(self) -> int:
        return len(self.modes)

    @property
    def atomic_dimension(self) -> int:
        return 2 ** self.atom_count

    @property
    def photon_dimension(self) -> int:
        return comb(self.mode_count + self.max_total_photons, self.max_total_photons)

    @property
    def dimension(self) -> int:
        return self.atomic_dimension * self.photon_dimension

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes], dtype=float)

    @property
    def branch_signs(self) -> np.ndarray:
        return np.array([m.branch.sign for m in self.modes], dtype=float)


def _frozen(entries: np.ndarray) -> np.ndarray:
    arr = np.array(entries, dtype=complex, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Operator:
    space: SpaceDescriptor
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        d = self.space.dimension
        if entries.shape != (d, d):
            raise ShapeError(f"operator shape {entries.shape} does not match space dimension {d}")
        object.__setattr__(self, "entries", entries)

    def _check(self, other: "Operator") -> None:
        if other.space is not self.space and other.space != self.space:
            raise ShapeError("operators live on different spaces")

    def dagger(self) -> "Operator":
        return Operator(self.space, self.entries.conj().T)

    def norm(self) -> float:
        """Operator (spectral) norm."""
        return float(np.linalg.norm(self.entries, 2))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def is_anti_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries + self.entries.conj().T), initial=0.0) <= tol)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.entries - other.entries)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.entries @ other.entries)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.space, self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.entries)


@dataclass(frozen=True, eq=False)
class StateVector:
    space: SpaceDescriptor
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = _frozen(self.amplitudes)
        d = self.space.dimension
        if amplitudes.shape != (d,):
            raise ShapeError(f"state length {amplitudes.shape} does not match space dimension {d}")
        object.__setattr__(self, "amplitudes", amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))
