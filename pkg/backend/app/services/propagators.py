import logging
import math
from typing import Callable, Iterator, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.linalg import expm

from app.core.config import HERMITICITY_TOL, MIN_STEPS, STEPS_PER_PERIOD
from app.core.errors import ConfigError, DomainError
from app.schemas.propagation import MagnusPieces, TimeGrid
from app.schemas.space import Operator, StateVector
from app.services.operators import identity, matrix_exponential

logger = logging.getLogger(__name__)

# Interaction-picture potential V(t), Hermitian at every t, on one fixed space
Potential = Callable[[float], Operator]


# -------------------------
# Grids
# -------------------------

def time_grid(t_end: float, steps: int) -> TimeGrid:
    try:
        return TimeGrid(t_end=t_end, steps=steps)
    except ValidationError as e:
        field = e.errors()[0]["loc"][0]
        raise ConfigError(f"invalid time grid: {e.errors()[0]['msg']}", key=str(field)) from None


def default_steps(t_end: float, fastest_frequency: float) -> int:
    """STEPS_PER_PERIOD nodes per period of the fastest angular frequency."""
    periods = fastest_frequency * t_end / (2 * math.pi)
    return max(MIN_STEPS, math.ceil(STEPS_PER_PERIOD * periods))


def observed_order(error_coarse: float, error_fine: float, refinement: float = 2.0) -> float:
    """Convergence order from errors at two resolutions."""
    return math.log(error_coarse / error_fine) / math.log(refinement)


# -------------------------
# Sampling
# -------------------------

def _sample(V: Potential, t: float) -> Tuple[Operator, np.ndarray]:
    op = V(t)
    entries = op.entries
    scale = max(1.0, float(np.max(np.abs(entries), initial=0.0)))
    if np.max(np.abs(entries - entries.conj().T), initial=0.0) > HERMITICITY_TOL * scale:
        raise DomainError(f"potential is not Hermitian at t={t:.6g}")
    return op, entries


def _accumulate(V: Potential, grid: TimeGrid, product) -> Iterator[Tuple[int, float, object, np.ndarray, np.ndarray]]:
    """
    Shared trapezoid recursion. W_k = int_0^{t_k} V (cumulative trapezoid) and
    S_k = int_0^{t_k} product(V, W) dt' (trapezoid over the nodes).
    Yields (k, t_k, space, W_k, S_k).
    """
    h = grid.dt
    nodes = grid.nodes
    op, V_prev = _sample(V, nodes[0])
    space = op.space
    d = space.dimension
    W = np.zeros((d, d), dtype=complex)
    S = np.zeros((d, d), dtype=complex)
    f_prev = np.zeros((d, d), dtype=complex)
    logger.debug("Quadrature over %d steps (dt=%.3e), dimension %d", grid.steps, h, d)
    yield 0, float(nodes[0]), space, W, S
    for k in range(1, grid.steps + 1):
        _, V_k = _sample(V, nodes[k])
        W = W + 0.5 * h * (V_prev + V_k)
        f_k = product(V_k, W)
        S = S + 0.5 * h * (f_prev + f_k)
        yield k, float(nodes[k]), space, W, S
        V_prev, f_prev = V_k, f_k


def _commutator_integrand(V_k: np.ndarray, W: np.ndarray) -> np.ndarray:
    return V_k @ W - W @ V_k


def _product_integrand(V_k: np.ndarray, W: np.ndarray) -> np.ndarray:
    return V_k @ W


# -------------------------
# Magnus, second order
# -------------------------

def iter_magnus2_pieces(V: Potential, grid: TimeGrid, hbar: float = 1.0,
                        m2_factor: float = 0.5) -> Iterator[Tuple[float, MagnusPieces]]:
    """
    (t_k, MagnusPieces) at every node:
    M1 = (1/i hbar) int V,  M2 = m2_factor (1/i hbar)^2 int dt' int^{t'} dt'' [V(t'), V(t'')].
    m2_factor other than 1/2 is only for reference checks of the convention.
    """
    c1 = 1.0 / (1j * hbar)
    for _, t, space, W, S in _accumulate(V, grid, _commutator_integrand):
        yield t, MagnusPieces(Operator(space, c1 * W), Operator(space, m2_factor * c1 * c1 * S))


def magnus2_pieces(V: Potential, grid: TimeGrid, hbar: float = 1.0, m2_factor: float = 0.5) -> MagnusPieces:
    pieces = None
    for _, pieces in iter_magnus2_pieces(V, grid, hbar, m2_factor):
        pass
    return pieces


def magnus2_series_propagator(pieces: MagnusPieces) -> Operator:
    """I + M1 + M2"""
    return identity(pieces.M1.space) + pieces.M1 + pieces.M2


def magnus2_exponential_propagator(pieces: MagnusPieces) -> Operator:
    """exp(M1 + M2)"""
    return matrix_exponential(pieces.exponent)


def magnus2_series_elements(V: Potential, grid: TimeGrid, bra: StateVector, ket: StateVector,
                            hbar: float = 1.0, m2_factor: float = 0.5) -> np.ndarray:
    """
    <bra| I + M1 + M2 |ket> at every node, with the same quadrature as
    magnus2_pieces but carried on vectors: cost O(steps * dim^2).
    """
    h = grid.dt
    nodes = grid.nodes
    b = bra.amplitudes.conj()
    k_vec = ket.amplitudes
    c1 = 1.0 / (1j * hbar)

    _, V_prev = _sample(V, nodes[0])
    V_ket_prev = V_prev @ k_vec
    bra_V_prev = b @ V_prev
    W_ket = np.zeros_like(k_vec)
    bra_W = np.zeros_like(b)
    f_prev = 0.0 + 0.0j
    s2 = 0.0 + 0.0j

    base = complex(b @ k_vec)
    out = np.empty(grid.steps + 1, dtype=complex)
    out[0] = base
    for k in range(1, grid.steps + 1):
        _, V_k = _sample(V, nodes[k])
        V_ket = V_k @ k_vec
        bra_V = b @ V_k
        W_ket = W_ket + 0.5 * h * (V_ket_prev + V_ket)
        bra_W = bra_W + 0.5 * h * (bra_V_prev + bra_V)
        f = bra_V @ W_ket - bra_W @ V_ket
        s2 += 0.5 * h * (f_prev + f)
        out[k] = base + c1 * (b @ W_ket) + m2_factor * c1 * c1 * s2
        V_ket_prev, bra_V_prev, f_prev = V_ket, bra_V, f
    return out


# -------------------------
# Dyson (TDPT), second order
# -------------------------

def iter_dyson2(V: Potential, grid: TimeGrid, hbar: float = 1.0) -> Iterator[Tuple[float, Operator]]:
    """I + (1/i hbar) int V + (1/i hbar)^2 int dt' int^{t'} dt'' V(t') V(t'') at every node."""
    c1 = 1.0 / (1j * hbar)
    for _, t, space, W, S in _accumulate(V, grid, _product_integrand):
        U = np.eye(space.dimension, dtype=complex) + c1 * W + c1 * c1 * S
        yield t, Operator(space, U)


def dyson2_propagator(V: Potential, grid: TimeGrid, hbar: float = 1.0) -> Operator:
    U = None
    for _, U in iter_dyson2(V, grid, hbar):
        pass
    return U


# -------------------------
# Stepping oracle
# -------------------------

def iter_stepping(V: Potential, grid: TimeGrid, hbar: float = 1.0) -> Iterator[Tuple[float, Operator]]:
    """
    Midpoint-exponential product; later factors act on the left.
    Unitary by construction, second-order accurate in dt.
    """
    h = grid.dt
    nodes = grid.nodes
    U = None
    for k, t_mid in enumerate(grid.midpoints):
        op, V_mid = _sample(V, t_mid)
        if U is None:
            U = np.eye(op.space.dimension, dtype=complex)
            space = op.space
            yield float(nodes[0]), Operator(space, U)
        U = expm(V_mid * (h / (1j * hbar))) @ U
        yield float(nodes[k + 1]), Operator(space, U)


def stepping_propagator(V: Potential, grid: TimeGrid, hbar: float = 1.0) -> Operator:
    U = None
    for _, U in iter_stepping(V, grid, hbar):
        pass
    return U


# -------------------------
# Diagnostics
# -------------------------

def unitarity_defect(U: Operator) -> Operator:
    """U^dagger U - I"""
    return U.dagger() @ U - identity(U.space)
