"""
Classical-current driven mode: closed-form exact, Magnus and TDPT propagators
in the interaction picture, plus vacuum diagnostics. With lambda = g/(hbar w):

    M1 = lambda [a (e^{-iwt} - 1) - a^dagger (e^{iwt} - 1)]
    M2 = i lambda^2 (wt - sin wt) I
"""
import logging
from typing import Callable, Dict, Sequence

import numpy as np

from app.core.config import DEGENERATE_FLOOR
from app.core.errors import DomainError
from app.schemas.driven_mode import DivergenceFit, DrivenModeConfig
from app.schemas.propagation import MagnusPieces
from app.schemas.space import Operator, SpaceDescriptor
from app.services.operators import (
    fock_space,
    fock_state,
    identity,
    matrix_exponential,
    mode_annihilation,
    transition_amplitude,
)

logger = logging.getLogger(__name__)

# samples per period for period-averaged diagnostics
PERIOD_SAMPLES = 32


def driven_space(config: DrivenModeConfig) -> SpaceDescriptor:
    return fock_space(config.omega, config.n_max)


def guarded_indices(config: DrivenModeConfig) -> range:
    """Fock states |0>..|n_max - 2>, where truncated ladder algebra is faithful to second order."""
    return range(config.n_max - 1)


def driven_potential(config: DrivenModeConfig) -> Callable[[float], Operator]:
    space = driven_space(config)
    a = mode_annihilation(space, 0).entries
    a_dag = a.conj().T

    def V(t: float) -> Operator:
        w_t = config.omega * t
        return Operator(space, config.g * (a * np.exp(-1j * w_t) + a_dag * np.exp(1j * w_t)))

    return V


def _ladder(config: DrivenModeConfig):
    space = driven_space(config)
    a = mode_annihilation(space, 0)
    return space, a, a.dagger()


# -------------------------
# Closed forms
# -------------------------

def magnus_closed_pieces(config: DrivenModeConfig, t: float) -> MagnusPieces:
    space, a, a_dag = _ladder(config)
    lam = config.strength
    w_t = config.omega * t
    M1 = (a * (np.exp(-1j * w_t) - 1) - a_dag * (np.exp(1j * w_t) - 1)) * lam
    M2 = identity(space) * (1j * lam ** 2 * (w_t - np.sin(w_t)))
    return MagnusPieces(M1, M2)


def m2_scalar(config: DrivenModeConfig, t: float) -> complex:
    w_t = config.omega * t
    return 1j * config.strength ** 2 * (w_t - np.sin(w_t))


def exact_propagator(config: DrivenModeConfig, t: float) -> Operator:
    """exp(M1): the displacement operator, without the scalar phase exp(M2)."""
    return matrix_exponential(magnus_closed_pieces(config, t).M1)


def magnus_exponential_closed(config: DrivenModeConfig, t: float) -> Operator:
    """exp(M2) exp(M1); M2 is a multiple of the identity."""
    return exact_propagator(config, t) * np.exp(m2_scalar(config, t))


def magnus_series_closed(config: DrivenModeConfig, t: float) -> Operator:
    """exp(M2) (I + M1)"""
    pieces = magnus_closed_pieces(config, t)
    return (identity(pieces.M1.space) + pieces.M1) * np.exp(m2_scalar(config, t))


def tdpt2_closed(config: DrivenModeConfig, t: float) -> Operator:
    """
    I + (1/i hbar) int V + (1/i hbar)^2 int int V V, written out in the ladder
    products a a^dagger, a^dagger a, a a and a^dagger a^dagger.
    """
    space, a, a_dag = _ladder(config)
    lam = config.strength
    w_t = config.omega * t
    e_minus, e_plus = np.exp(-1j * w_t), np.exp(1j * w_t)
    first = (a * (e_minus - 1) - a_dag * (e_plus - 1)) * lam
    second = (
        (a @ a_dag) * (1j * w_t + e_minus - 1)
        - (a_dag @ a) * (1j * w_t - e_plus + 1)
        + (a @ a) * ((np.exp(-2j * w_t) - 1) / 2 - e_minus + 1)
        + (a_dag @ a_dag) * ((np.exp(2j * w_t) - 1) / 2 - e_plus + 1)
    ) * lam ** 2
    return identity(space) + first + second


CLOSED_FORMS: Dict[str, Callable[[DrivenModeConfig, float], Operator]] = {
    "exact": exact_propagator,
    "magnus_exponential": magnus_exponential_closed,
    "magnus_series": magnus_series_closed,
    "tdpt": tdpt2_closed,
}


# -------------------------
# Vacuum diagnostics
# -------------------------

def vacuum_overlap(U: Operator) -> complex:
    """<0|U|0>"""
    vacuum = fock_state(U.space, 0)
    return transition_amplitude(vacuum, U, vacuum)


def vacuum_defect(U: Operator) -> float:
    """<0|U^dagger U - I|0> = ||U|0>||^2 - 1"""
    column = U.entries[:, 0]
    return float(np.vdot(column, column).real - 1.0)


def series_defect_closed(config: DrivenModeConfig, t: float) -> float:
    """Vacuum defect of exp(M2)(I + M1): ||M1|0>||^2 = 4 lambda^2 sin^2(wt/2)."""
    return float(4 * config.strength ** 2 * np.sin(0.5 * config.omega * t) ** 2)


def exact_vacuum_magnitude(config: DrivenModeConfig, t: float) -> float:
    """|<0|D(alpha)|0>| = exp(-|alpha|^2 / 2) with |alpha|^2 = 4 lambda^2 sin^2(wt/2)."""
    return float(np.exp(-0.5 * series_defect_closed(config, t)))


def _kind(kind: str) -> Callable[[DrivenModeConfig, float], Operator]:
    key = kind.replace("-", "_")
    if key not in CLOSED_FORMS:
        raise DomainError(f"unknown driven-mode propagator '{kind}'; choose from {', '.join(CLOSED_FORMS)}")
    return CLOSED_FORMS[key]


def divergence_exponent(config: DrivenModeConfig, t_samples: Sequence[float], kind: str = "tdpt",
                        period_average: bool = False) -> DivergenceFit:
    """
    Least-squares slope of log(||U|0>||^2 - 1) against log t.
    With period_average each sample is the mean defect over the period centred on it.
    """
    propagator = _kind(kind)
    t = np.asarray(t_samples, dtype=float)
    if t.size < 4:
        raise DomainError(f"divergence fit needs at least 4 samples, got {t.size}")
    if np.any(t <= 0):
        raise DomainError("divergence fit needs positive sample times")
    w_t = config.omega * t
    if w_t.min() < 10 or t.max() < 10 * t.min():
        logger.warning("Samples cover wt in [%.3g, %.3g]; the fit expects wt >= 10 over a full decade",
                       w_t.min(), w_t.max())

    if period_average:
        offsets = (np.arange(PERIOD_SAMPLES) / PERIOD_SAMPLES - 0.5) * config.period
        defects = np.array([
            np.mean([vacuum_defect(propagator(config, s + d)) for d in offsets]) for s in t
        ])
    else:
        defects = np.array([vacuum_defect(propagator(config, s)) for s in t])

    fit = dict(kind=kind, period_average=period_average, samples=tuple(float(d) for d in defects))
    usable = defects > DEGENERATE_FLOOR
    if not usable.any():
        logger.info("Defect of %s stays below %.1e; no slope", kind, DEGENERATE_FLOOR)
        return DivergenceFit(degenerate=True, **fit)
    if usable.sum() < 4:
        raise DomainError(f"only {usable.sum()} samples carry a defect above {DEGENERATE_FLOOR:g}")
    slope, _ = np.polyfit(np.log(t[usable]), np.log(defects[usable]), 1)
    return DivergenceFit(slope=float(slope), **fit)
