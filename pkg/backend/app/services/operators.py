import logging
from functools import lru_cache
from math import sqrt
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy.linalg import expm

from app.core.errors import ConfigError, NumericError, ShapeError
from app.schemas.space import Branch, Mode, Operator, SpaceDescriptor, StateVector

logger = logging.getLogger(__name__)

# sigma = |b><a| in the per-site (b, a) basis
SIGMA_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)

LEVELS = {"b": 0, "a": 1}

ModeSpec = Union[float, Tuple[float, Union[Branch, str]], Mode]


# -------------------------
# Basis enumeration
# -------------------------

@lru_cache(maxsize=32)
def photon_tuples(mode_count: int, cutoff: int) -> Tuple[Tuple[int, ...], ...]:
    """
    Occupation tuples with total <= cutoff in lexicographic order
    (first mode most significant). Odometer walk, no recursion.
    """
    tuples = []
    occ = [0] * mode_count
    total = 0
    while True:
        tuples.append(tuple(occ))
        i = mode_count - 1
        while i >= 0:
            if total < cutoff:
                occ[i] += 1
                total += 1
                break
            total -= occ[i]
            occ[i] = 0
            i -= 1
        else:
            break
    return tuple(tuples)


@lru_cache(maxsize=32)
def _lowering_table(mode_count: int, cutoff: int):
    """
    Nonzero entries of every single-mode annihilator on the photon factor:
    (row, col, mode, sqrt(n)) with row = index of the lowered tuple.
    """
    tuples = photon_tuples(mode_count, cutoff)
    index = {occ: i for i, occ in enumerate(tuples)}
    rows, cols, modes, values = [], [], [], []
    for col, occ in enumerate(tuples):
        for m, n in enumerate(occ):
            if n:
                lowered = occ[:m] + (n - 1,) + occ[m + 1:]
                rows.append(index[lowered])
                cols.append(col)
                modes.append(m)
                values.append(sqrt(n))
    return (
        np.array(rows, dtype=int),
        np.array(cols, dtype=int),
        np.array(modes, dtype=int),
        np.array(values, dtype=float),
    )


def _as_mode(spec: ModeSpec) -> Mode:
    if isinstance(spec, Mode):
        return spec
    if isinstance(spec, (tuple, list)):
        frequency, branch = spec
        return Mode(frequency=frequency, branch=Branch(branch))
    return Mode(frequency=spec)


def build_space(atom_count: int, mode_frequencies: Sequence[ModeSpec], max_total_photons: int) -> SpaceDescriptor:
    """
    Truncated atom-field space. Modes are given as frequencies, (frequency, branch)
    pairs or Mode records; bare frequencies default to right-moving.
    """
    if atom_count < 1:
        raise ConfigError("at least one atom is required", key="atom_count")
    if max_total_photons < 0:
        raise ConfigError("photon cutoff must be >= 0", key="max_total_photons")
    try:
        modes = tuple(_as_mode(spec) for spec in mode_frequencies)
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid mode specification: {e}", key="mode_frequencies") from None
    space = SpaceDescriptor(atom_count=atom_count, modes=modes, max_total_photons=max_total_photons)
    logger.debug("Built space: %d atoms, %d modes, cutoff %d, dimension %d",
                 atom_count, len(modes), max_total_photons, space.dimension)
    return space


def fock_space(frequency: float, n_max: int) -> SpaceDescriptor:
    """Single bosonic mode, no atoms, Fock states |0>..|n_max>."""
    if n_max < 0:
        raise ConfigError("Fock cutoff must be >= 0", key="n_max")
    return SpaceDescriptor(atom_count=0, modes=(Mode(frequency=frequency),), max_total_photons=n_max)


def basis_index(space: SpaceDescriptor, levels: str = "", photons: Optional[Sequence[int]] = None) -> int:
    """Index of |levels, photons>; levels is one of 'a'/'b' per site, site 0 first."""
    if len(levels) != space.atom_count:
        raise ShapeError(f"expected {space.atom_count} atomic levels, got '{levels}'")
    try:
        atomic = sum(LEVELS[level] << j for j, level in enumerate(levels))
    except KeyError as e:
        raise ShapeError(f"unknown atomic level {e.args[0]!r}; use 'a' (excited) or 'b' (ground)") from None
    occ = tuple(photons) if photons is not None else (0,) * space.mode_count
    if len(occ) != space.mode_count:
        raise ShapeError(f"expected {space.mode_count} occupations, got {len(occ)}")
    if min(occ, default=0) < 0 or sum(occ) > space.max_total_photons:
        raise ShapeError(f"occupation {occ} lies outside the photon cutoff")
    if space.mode_count:
        tuples = photon_tuples(space.mode_count, space.max_total_photons)
        photon = tuples.index(occ)
    else:
        photon = 0
    return photon * space.atomic_dimension + atomic


def basis_state(space: SpaceDescriptor, levels: str = "", photons: Optional[Sequence[int]] = None) -> StateVector:
    """Unit basis vector, e.g. basis_state(space, 'ba') for |b,a,0>."""
    amplitudes = np.zeros(space.dimension, dtype=complex)
    amplitudes[basis_index(space, levels, photons)] = 1.0
    return StateVector(space, amplitudes)


def fock_state(space: SpaceDescriptor, n: int) -> StateVector:
    """|n> on an atom-free single-mode space."""
    return basis_state(space, "", (n,))


# -------------------------
# Elementary operators
# -------------------------

def identity(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.eye(space.dimension, dtype=complex))


def embed_photon(space: SpaceDescriptor, photon_matrix: np.ndarray) -> np.ndarray:
    """Photon-factor matrix tensored with the atomic identity."""
    return np.kron(photon_matrix, np.eye(space.atomic_dimension))


def embed_atomic(space: SpaceDescriptor, atomic_matrix: np.ndarray) -> np.ndarray:
    """Atomic-factor matrix tensored with the photon identity."""
    return np.kron(np.eye(space.photon_dimension), atomic_matrix)


def site_matrix(space: SpaceDescriptor, site: int, matrix: np.ndarray) -> np.ndarray:
    """2x2 single-site matrix on the full atomic factor (site 0 least significant)."""
    if not 0 <= site < space.atom_count:
        raise IndexError(f"site {site} out of range for {space.atom_count} atoms")
    above = np.eye(2 ** (space.atom_count - 1 - site))
    below = np.eye(2 ** site)
    return np.kron(np.kron(above, matrix), below)


def atom_lowering(space: SpaceDescriptor, site: int) -> Operator:
    return Operator(space, embed_atomic(space, site_matrix(space, site, SIGMA_LOWER)))


def atom_raising(space: SpaceDescriptor, site: int) -> Operator:
    return Operator(space, embed_atomic(space, site_matrix(space, site, SIGMA_LOWER.T)))


def photon_field(space: SpaceDescriptor, coefficients: np.ndarray) -> np.ndarray:
    """
    sum_m c_m a_m on the photon factor, as a dense matrix.
    """
    coefficients = np.asarray(coefficients, dtype=complex)
    if coefficients.shape != (space.mode_count,):
        raise ShapeError(f"expected {space.mode_count} mode coefficients, got {coefficients.shape}")
    rows, cols, modes, values = _lowering_table(space.mode_count, space.max_total_photons)
    field = np.zeros((space.photon_dimension, space.photon_dimension), dtype=complex)
    np.add.at(field, (rows, cols), coefficients[modes] * values)
    return field


def mode_annihilation(space: SpaceDescriptor, mode_index: int) -> Operator:
    if not 0 <= mode_index < space.mode_count:
        raise IndexError(f"mode {mode_index} out of range for {space.mode_count} modes")
    coefficients = np.zeros(space.mode_count, dtype=complex)
    coefficients[mode_index] = 1.0
    return Operator(space, embed_photon(space, photon_field(space, coefficients)))


def mode_creation(space: SpaceDescriptor, mode_index: int) -> Operator:
    return mode_annihilation(space, mode_index).dagger()


def number_operator(space: SpaceDescriptor, mode_index: int) -> Operator:
    a = mode_annihilation(space, mode_index)
    return a.dagger() @ a


# -------------------------
# Algebra
# -------------------------

def _same_space(*items: Union[Operator, StateVector]) -> None:
    first = items[0].space
    for item in items[1:]:
        if item.space is not first and item.space != first:
            raise ShapeError("arguments live on different spaces")


def commutator(A: Operator, B: Operator) -> Operator:
    _same_space(A, B)
    return Operator(A.space, A.entries @ B.entries - B.entries @ A.entries)


def matrix_exponential(A: Operator) -> Operator:
    if not np.all(np.isfinite(A.entries)):
        raise NumericError("matrix exponential of an operator with non-finite entries")
    return Operator(A.space, expm(A.entries))


def transition_amplitude(bra: StateVector, U: Operator, ket: StateVector) -> complex:
    """<bra|U|ket>"""
    _same_space(bra, U, ket)
    return complex(np.vdot(bra.amplitudes, U.entries @ ket.amplitudes))


def expectation(state: StateVector, U: Operator) -> complex:
    return transition_amplitude(state, U, state)


def restrict(U: Operator, indices: Iterable[int]) -> np.ndarray:
    """Sub-block of U on the given basis indices."""
    idx = np.asarray(list(indices), dtype=int)
    return U.entries[np.ix_(idx, idx)]
