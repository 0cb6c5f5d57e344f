"""
Fermi two-atom model: interaction Hamiltonian (full and RWA), the commutator
kernel <a,b,0|[V(t'), V(t'')]|b,a,0> over the discrete mode ladder, the
light-cone closed form of the excitation amplitude, numeric amplitude series
and causality diagnostics.

Site 0 is the left atom (initially ground), site 1 the right atom (initially
excited); the initial state is |b,a,0> and the target |a,b,0>.
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from app.core.config import DEGENERATE_SWITCH, DIMENSION_CEILING, KERNEL_MODE_CHUNK, LEAKAGE_TRIM
from app.core.errors import DimensionCeilingError, DomainError, ShapeError
from app.schemas.fermi import AmplitudeSeries, FermiConfig, KernelSample, Provenance
from app.schemas.propagation import PropagatorKind, TimeGrid
from app.schemas.space import Branch, Operator, SpaceDescriptor
from app.services.operators import (
    SIGMA_LOWER,
    basis_state,
    build_space,
    photon_field,
    site_matrix,
    transition_amplitude,
)
from app.services.propagators import (
    iter_dyson2,
    iter_magnus2_pieces,
    iter_stepping,
    magnus2_exponential_propagator,
    magnus2_series_elements,
    time_grid,
)

logger = logging.getLogger(__name__)

INITIAL_LEVELS = "ba"
TARGET_LEVELS = "ab"

# elements per (time x mode) block in the kernel quadrature
_BLOCK_ELEMENTS = 2 ** 21


# -------------------------
# Space and interaction
# -------------------------

def fermi_dimension(config: FermiConfig) -> int:
    return 4 * math.comb(2 * config.modes_per_branch + config.photon_cutoff, config.photon_cutoff)


def fermi_space(config: FermiConfig, dimension_ceiling: Optional[int] = None) -> SpaceDescriptor:
    """
    Two atoms and 2N modes: the left-moving ladder first, then the right-moving one.
    """
    if dimension_ceiling is not None:
        dimension = fermi_dimension(config)
        if dimension > dimension_ceiling:
            raise DimensionCeilingError(dimension, dimension_ceiling)
    ladder = config.mode_ladder
    modes = [(nu, Branch.LEFT) for nu in ladder] + [(nu, Branch.RIGHT) for nu in ladder]
    return build_space(2, modes, config.photon_cutoff)


def _mode_arrays(config: FermiConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(nu, branch sign, taper weight) for all 2N modes, in fermi_space order."""
    ladder = config.mode_ladder
    nu = np.concatenate([ladder, ladder])
    signs = np.concatenate([np.full(ladder.size, Branch.LEFT.sign), np.full(ladder.size, Branch.RIGHT.sign)])
    return nu, signs.astype(float), np.tile(config.mode_weights, 2)


def fermi_interaction(config: FermiConfig, t: float, rwa: bool = False,
                      space: Optional[SpaceDescriptor] = None) -> Operator:
    """
    V(t) = V_L + V_R with
    V_j = g_j (sigma_j e^{-i w_j t} + h.c.) sum_nu sqrt(f_nu nu) (a_nu e^{-i nu (ct +/- z_j)/c} + h.c.),
    f_nu the mode taper. With rwa only sigma a^dagger and sigma^dagger a survive.
    """
    space = space or fermi_space(config)
    nu, signs = space.frequencies, space.branch_signs
    taper = np.tile(config.mode_weights, 2)
    if taper.size != nu.size:
        raise ShapeError(f"space has {nu.size} modes, config describes {taper.size}")
    sites = (
        (config.omega_l, config.z_l, config.coupling_l),
        (config.omega_r, config.z_r, config.coupling_r),
    )
    V = np.zeros((space.dimension, space.dimension), dtype=complex)
    for site, (omega, z, g) in enumerate(sites):
        theta = nu * t + signs * nu * z / config.c
        field = photon_field(space, np.sqrt(taper * nu) * np.exp(-1j * theta))
        sigma = site_matrix(space, site, SIGMA_LOWER) * np.exp(-1j * omega * t)
        if rwa:
            term = np.kron(field.conj().T, sigma)
            V += g * (term + term.conj().T)
        else:
            V += g * np.kron(field + field.conj().T, sigma + sigma.conj().T)
    return Operator(space, V)


# -------------------------
# Commutator kernel
# -------------------------
# <a,b,0|V(t1) V(t2)|b,a,0> = P_co(t1, t2) + P_counter(t1, t2)
#   P_co      = g_L g_R sum f nu e^{+i s nu R/c} e^{i(w_L - nu) t1} e^{-i(w_R - nu) t2}
#   P_counter = g_L g_R sum f nu e^{-i s nu R/c} e^{-i(w_R + nu) t1} e^{i(w_L + nu) t2}
# (co: R emits, L absorbs; counter: L excites and emits, R absorbs; f the mode taper)

def _kernel_factors(config: FermiConfig, nu: np.ndarray, signs: np.ndarray, taper: np.ndarray):
    """
    Per-mode weights and (first-time, second-time) angular frequencies of the
    co- and counter-rotating products.
    """
    gg = config.coupling_l * config.coupling_r * taper
    spatial = np.exp(1j * signs * nu * config.light_time)
    co = (gg * nu * spatial, config.omega_l - nu, -(config.omega_r - nu))
    counter = (gg * nu * spatial.conj(), -(config.omega_r + nu), config.omega_l + nu)
    return co, counter


def _ordered_product(factors, t1, t2) -> complex:
    weights, f1, f2 = factors
    return complex(np.sum(weights * np.exp(1j * f1 * t1) * np.exp(1j * f2 * t2)))


def kernel_parts(config: FermiConfig, t_prime: float, t_double_prime: float) -> Tuple[complex, complex]:
    """(co-rotating, counter-rotating) parts of <a,b,0|[V(t'), V(t'')]|b,a,0>."""
    co, counter = _kernel_factors(config, *_mode_arrays(config))
    co_part = _ordered_product(co, t_prime, t_double_prime) - _ordered_product(co, t_double_prime, t_prime)
    counter_part = (_ordered_product(counter, t_prime, t_double_prime)
                    - _ordered_product(counter, t_double_prime, t_prime))
    return co_part, counter_part


def kernel_discrete(config: FermiConfig, t_prime: float, t_double_prime: float, rwa: bool = False) -> complex:
    """
    Commutator matrix element by closed-form mode sum (no matrices).
    The RWA kernel is the co-rotating part alone.
    """
    co_part, counter_part = kernel_parts(config, t_prime, t_double_prime)
    return co_part if rwa else co_part + counter_part


def kernel_sample(config: FermiConfig, t_prime: float, t_double_prime: float, rwa: bool = False) -> KernelSample:
    return KernelSample(t_prime, t_double_prime, kernel_discrete(config, t_prime, t_double_prime, rwa))


def smeared_kernel(config: FermiConfig, center: Optional[float] = None, width: Optional[float] = None,
                   base_time: Optional[float] = None, points: Optional[int] = None) -> Dict[str, complex]:
    """
    int K(t'' + tau, t'') G(tau) dtau with a normalised Gaussian G centred at
    `center` (default 0.5 R/c, off the cone) of width `width` (default 0.05 R/c),
    at fixed t'' = base_time. Returns the co, counter and full (co + counter)
    integrals; the RWA kernel is the co part.
    """
    cone = config.light_time
    center = 0.5 * cone if center is None else center
    width = 0.05 * cone if width is None else width
    base_time = 0.25 * cone if base_time is None else base_time
    if points is None:
        d_tau = 1.0 / (4.0 * config.fastest_frequency)
        points = int(math.ceil(12 * width / d_tau)) + 1
    tau = np.linspace(center - 6 * width, center + 6 * width, points)
    window = np.exp(-0.5 * ((tau - center) / width) ** 2) / (width * math.sqrt(2 * math.pi))
    t1 = base_time + tau

    co, counter = _kernel_factors(config, *_mode_arrays(config))
    out = {}
    for name, (weights, f1, f2) in (("co", co), ("counter", counter)):
        forward = np.exp(1j * np.outer(t1, f1)) @ (weights * np.exp(1j * f2 * base_time))
        backward = np.exp(1j * np.outer(t1, f2)) @ (weights * np.exp(1j * f1 * base_time))
        out[name] = complex(trapezoid(window * (forward - backward), tau))
    out["full"] = out["co"] + out["counter"]
    return out


def _kernel_commutator_series(config: FermiConfig, grid: TimeGrid, rwa: bool) -> np.ndarray:
    """
    G_k = sum_j c_kj K(t_k, t_j) with c_kj the cumulative-trapezoid weights, i.e.
    <a,b,0|[V(t_k), int_0^{t_k} V]|b,a,0>, by separable mode sums in blocks.
    """
    t = grid.nodes
    h = grid.dt
    nu, signs, taper = _mode_arrays(config)
    chunk = max(1, min(KERNEL_MODE_CHUNK, _BLOCK_ELEMENTS // t.size))
    G = np.zeros(t.size, dtype=complex)
    for start in range(0, nu.size, chunk):
        block = slice(start, start + chunk)
        co, counter = _kernel_factors(config, nu[block], signs[block], taper[block])
        for weights, f1, f2 in ((co,) if rwa else (co, counter)):
            X = np.exp(1j * np.outer(t, f1))
            Y = np.exp(1j * np.outer(t, f2))
            cum_X = cumulative_trapezoid(X, dx=h, axis=0, initial=0)
            cum_Y = cumulative_trapezoid(Y, dx=h, axis=0, initial=0)
            G += (X * cum_Y - cum_X * Y) @ weights
    logger.debug("Kernel quadrature: %d nodes, %d modes in blocks of %d", t.size, nu.size, chunk)
    return G


# -------------------------
# Analytic amplitude
# -------------------------

def analytic_prefactor(config: FermiConfig) -> float:
    """
    Constant in front of d/dR {...} for the box-normalised mode ladder with
    the 1/2 convention on M2.
    """
    return config.dipole_l * config.dipole_r / (2 * config.hbar * config.epsilon0)


def printed_prefactor(config: FermiConfig) -> float:
    """
    Constant of the published combined left+right closed form, halved for the
    1/2 on M2. analytic_prefactor = printed_prefactor * (-pi / (c hbar^2)).
    """
    return -0.5 * config.c * config.hbar * config.dipole_l * config.dipole_r / (math.pi * config.epsilon0)


def difference_quotient(delta: float, t: float, cone: float, branch: str = "auto") -> complex:
    """
    (e^{i delta t} - e^{i delta cone}) / delta, with a first-order series
    e^{i delta cone} (i u - delta u^2 / 2), u = t - cone, near delta = 0.
    """
    if branch == "auto":
        branch = "series" if abs(delta) * t < DEGENERATE_SWITCH else "direct"
    if branch == "series":
        u = t - cone
        return complex(np.exp(1j * delta * cone) * (1j * u - 0.5 * delta * u * u))
    return complex((np.exp(1j * delta * t) - np.exp(1j * delta * cone)) / delta)


def amplitude_bracket(config: FermiConfig, t: float, separation: Optional[float] = None) -> complex:
    """
    The bracket differentiated in R, for t past the cone:
    (e^{i w_R R/c} + e^{-i w_L R/c}) (e^{i D t} - e^{i D R/c}) / D.
    """
    separation = config.separation if separation is None else separation
    cone = separation / config.c
    phases = np.exp(1j * config.omega_r * cone) + np.exp(-1j * config.omega_l * cone)
    return complex(phases * difference_quotient(config.omega_l - config.omega_r, t, cone))


def amplitude_analytic(config: FermiConfig, t: float) -> complex:
    """
    Light-cone closed form (left- plus right-propagating terms) with the
    R-derivative carried out by hand. Exactly 0 before R/c.
    """
    cone = config.light_time
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    if math.isclose(t, cone, rel_tol=1e-12, abs_tol=0.0):
        raise DomainError(f"t = R/c = {cone} is the on-cone singular point")
    if t < cone:
        return 0j
    c = config.c
    w_l, w_r = config.omega_l, config.omega_r
    delta = w_l - w_r
    phases = np.exp(1j * w_r * cone) + np.exp(-1j * w_l * cone)
    d_phases = (1j * w_r / c) * np.exp(1j * w_r * cone) - (1j * w_l / c) * np.exp(-1j * w_l * cone)
    quotient = difference_quotient(delta, t, cone)
    d_quotient = -(1j / c) * np.exp(1j * delta * cone)
    return complex(analytic_prefactor(config) * (d_phases * quotient + phases * d_quotient))


def amplitude_analytic_series(config: FermiConfig, grid: TimeGrid) -> AmplitudeSeries:
    amplitudes = [amplitude_analytic(config, t) for t in grid.nodes]
    return AmplitudeSeries(grid.nodes, amplitudes, Provenance(kind="analytic"))


# -------------------------
# Numeric amplitude
# -------------------------

def light_cone_safe_grid(config: FermiConfig, t_end: float, steps: int) -> TimeGrid:
    """Uniform grid; stretched by half a step if a node would land on t = R/c."""
    grid = time_grid(t_end, steps)
    k = config.light_time / grid.dt
    nearest = round(k)
    if 0 < nearest <= steps and abs(k - nearest) < 1e-9:
        grid = time_grid(t_end * (1 + 0.5 / nearest), steps)
        logger.debug("Node %d fell on the light cone; t_end stretched to %.12g", nearest, grid.t_end)
    return grid


def amplitude_numeric(config: FermiConfig, grid: TimeGrid, kind: PropagatorKind = PropagatorKind.MAGNUS2_SERIES,
                      rwa: bool = False, method: str = "kernel",
                      dimension_ceiling: int = DIMENSION_CEILING) -> AmplitudeSeries:
    """
    <a,b,0|U(t)|b,a,0> on every grid node.
    magnus2-series by `method`: 'kernel' (mode sums, no matrices) or 'matrix'
    (full interaction matrices). The other kinds always use full matrices.
    """
    kind = PropagatorKind(kind)
    hbar = config.hbar
    if kind is PropagatorKind.MAGNUS2_SERIES and method == "kernel":
        G = _kernel_commutator_series(config, grid, rwa)
        m2 = 0.5 * (1.0 / (1j * hbar)) ** 2 * cumulative_trapezoid(G, dx=grid.dt, initial=0)
        provenance = Provenance(kind=kind.value, rwa=rwa, method="kernel",
                                modes_per_branch=config.modes_per_branch)
        return AmplitudeSeries(grid.nodes, m2, provenance)

    if method not in ("kernel", "matrix"):
        raise DomainError(f"unknown amplitude method '{method}'")
    space = fermi_space(config, dimension_ceiling)
    logger.info("Full-matrix %s amplitude: dimension %d, %d steps", kind.value, space.dimension, grid.steps)
    bra = basis_state(space, TARGET_LEVELS)
    ket = basis_state(space, INITIAL_LEVELS)

    def V(t: float) -> Operator:
        return fermi_interaction(config, t, rwa, space)

    if kind is PropagatorKind.MAGNUS2_SERIES:
        amplitudes = magnus2_series_elements(V, grid, bra, ket, hbar)
    elif kind is PropagatorKind.MAGNUS2_EXPONENTIAL:
        amplitudes = [transition_amplitude(bra, magnus2_exponential_propagator(p), ket)
                      for _, p in iter_magnus2_pieces(V, grid, hbar)]
    elif kind is PropagatorKind.DYSON2:
        amplitudes = [transition_amplitude(bra, U, ket) for _, U in iter_dyson2(V, grid, hbar)]
    else:
        amplitudes = [transition_amplitude(bra, U, ket) for _, U in iter_stepping(V, grid, hbar)]
    provenance = Provenance(kind=kind.value, rwa=rwa, method="matrix", modes_per_branch=config.modes_per_branch)
    return AmplitudeSeries(grid.nodes, amplitudes, provenance)


def causality_leakage(series: AmplitudeSeries, config: FermiConfig, trim: float = LEAKAGE_TRIM) -> float:
    """max |A(t)| over t in (trim R/c, (1 - trim) R/c)."""
    cone = config.light_time
    mask = (series.times > trim * cone) & (series.times < (1 - trim) * cone)
    if not mask.any():
        raise DomainError("no samples inside the pre-cone leakage window")
    return float(np.max(np.abs(series.amplitudes[mask])))
