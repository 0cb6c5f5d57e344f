"""
Driven-mode closed forms. lambda = g / (hbar omega); comparisons of operators
use the Fock block 0..n_max-2 where truncated ladder algebra is faithful.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import ConfigError, DomainError
from app.schemas.driven_mode import DrivenModeConfig
from app.services.driven_mode import (
    divergence_exponent,
    driven_potential,
    exact_propagator,
    exact_vacuum_magnitude,
    guarded_indices,
    m2_scalar,
    magnus_closed_pieces,
    magnus_exponential_closed,
    magnus_series_closed,
    series_defect_closed,
    tdpt2_closed,
    vacuum_defect,
    vacuum_overlap,
)
from app.services.operators import identity, matrix_exponential, restrict
from app.services.propagators import magnus2_pieces, magnus2_series_propagator, time_grid, unitarity_defect

TWO_PI = 2 * np.pi


def test_config_validation():
    with pytest.raises(ValueError):
        DrivenModeConfig(n_max=1)
    with pytest.raises(ValueError):
        DrivenModeConfig(omega=0)
    assert DrivenModeConfig().strength == pytest.approx(0.3)


def test_exact_propagator_identity_points(driven):
    eye = np.eye(driven.n_max + 1)
    assert_allclose(exact_propagator(driven, 0.0).entries, eye, atol=1e-14)
    assert_allclose(exact_propagator(driven, TWO_PI / driven.omega).entries, eye, atol=1e-12)


@pytest.mark.parametrize("omega_t", [0.3, np.pi / 2, np.pi, 2.5, 5.0])
def test_exact_vacuum_overlap_is_coherent_state_overlap(driven, omega_t):
    t = omega_t / driven.omega
    expected = np.exp(-2 * driven.strength ** 2 * np.sin(omega_t / 2) ** 2)
    assert abs(vacuum_overlap(exact_propagator(driven, t))) == pytest.approx(expected, abs=1e-8)
    assert exact_vacuum_magnitude(driven, t) == pytest.approx(expected, abs=1e-15)


def test_closed_pieces_at_full_period(driven):
    pieces = magnus_closed_pieces(driven, TWO_PI / driven.omega)
    assert_allclose(pieces.M1.entries, 0, atol=1e-12)
    lam = driven.strength
    assert_allclose(pieces.M2.entries, 1j * lam ** 2 * TWO_PI * np.eye(driven.n_max + 1), atol=1e-14)


def test_closed_m1_anti_hermitian(driven):
    pieces = magnus_closed_pieces(driven, 1.234)
    assert pieces.M1.is_anti_hermitian()
    assert pieces.M2.is_anti_hermitian()


def test_global_phase_relation(rng):
    """exp(M2) exp(M1) e^{-M2} equals the exact propagator on the guarded block."""
    for _ in range(50):
        lam = rng.uniform(0, 0.5)
        omega = rng.uniform(0.5, 2.0)
        config = DrivenModeConfig(g=lam * omega, omega=omega)
        t = rng.uniform(0, 4 * np.pi) / omega
        guard = guarded_indices(config)
        rotated = magnus_exponential_closed(config, t) * np.exp(-m2_scalar(config, t))
        error = np.linalg.norm(restrict(rotated, guard) - restrict(exact_propagator(config, t), guard), 2)
        assert error <= 1e-10


def test_magnus_exponential_at_full_period(driven):
    U = magnus_exponential_closed(driven, TWO_PI / driven.omega)
    expected = np.exp(1j * driven.strength ** 2 * TWO_PI) * np.eye(driven.n_max + 1)
    assert_allclose(U.entries, expected, atol=1e-12)


def test_magnus_exponential_unitary(driven):
    assert unitarity_defect(magnus_exponential_closed(driven, 2.7)).norm() <= 1e-12


def test_magnus_series_at_zero(driven):
    assert_allclose(magnus_series_closed(driven, 0.0).entries, np.eye(driven.n_max + 1), atol=1e-15)


@pytest.mark.parametrize("omega_t", [np.pi / 2, np.pi, TWO_PI])
def test_magnus_series_vacuum_defect(driven, omega_t):
    """<0|U^dagger U - I|0> = ||M1|0>||^2 = 4 lambda^2 sin^2(wt/2); zero at wt = 2 pi."""
    t = omega_t / driven.omega
    U = magnus_series_closed(driven, t)
    expected = 4 * driven.strength ** 2 * np.sin(omega_t / 2) ** 2
    assert unitarity_defect(U).entries[0, 0].real == pytest.approx(expected, abs=1e-10)
    assert vacuum_defect(U) == pytest.approx(expected, abs=1e-10)
    assert series_defect_closed(driven, t) == pytest.approx(expected, abs=1e-15)


def test_magnus_series_matches_quadrature(driven):
    t = 2.0
    guard = guarded_indices(driven)
    pieces = magnus2_pieces(driven_potential(driven), time_grid(t, 8000))
    from_quadrature = matrix_exponential(pieces.M2) @ (identity(pieces.M1.space) + pieces.M1)
    error = np.abs(restrict(from_quadrature, guard) - restrict(magnus_series_closed(driven, t), guard)).max()
    assert error <= 1e-6

    closed = magnus_closed_pieces(driven, t)
    plain = identity(closed.M1.space) + closed.M1 + closed.M2
    error = np.abs(restrict(magnus2_series_propagator(pieces), guard) - restrict(plain, guard)).max()
    assert error <= 1e-6


def test_tdpt_at_zero(driven):
    assert_allclose(tdpt2_closed(driven, 0.0).entries, np.eye(driven.n_max + 1), atol=1e-15)


@pytest.mark.parametrize("omega_t", [0.5, 3.0, 17.0])
def test_tdpt_vacuum_element(driven, omega_t):
    t = omega_t / driven.omega
    expected = 1 + driven.strength ** 2 * (1j * omega_t + np.exp(-1j * omega_t) - 1)
    assert vacuum_overlap(tdpt2_closed(driven, t)) == pytest.approx(expected, abs=1e-14)


def test_tdpt_norm_defect_is_fourth_order(driven):
    """The lambda^2 terms of ||U|0>||^2 cancel; what is left is lambda^4 (|beta|^2 + 2|gamma|^2)."""
    omega_t = 7.0
    lam = driven.strength
    beta = 1j * omega_t + np.exp(-1j * omega_t) - 1
    gamma = (np.exp(1j * omega_t) - 1) ** 2 / 2
    expected = lam ** 4 * (abs(beta) ** 2 + 2 * abs(gamma) ** 2)
    assert vacuum_defect(tdpt2_closed(driven, omega_t / driven.omega)) == pytest.approx(expected, rel=1e-10)


def test_tdpt_divergence_at_full_periods(driven):
    t = TWO_PI * np.arange(2, 21) / driven.omega
    fit = divergence_exponent(driven, t, kind="tdpt")
    assert not fit.degenerate
    assert fit.slope == pytest.approx(2.0, abs=1e-6)


def test_tdpt_divergence_period_averaged(driven):
    t = np.geomspace(10, 100, 12) / driven.omega
    fit = divergence_exponent(driven, t, kind="tdpt", period_average=True)
    assert fit.slope == pytest.approx(2.0, abs=0.1)
    assert len(fit.samples) == 12


def test_magnus_series_divergence_bounded(driven):
    t = np.geomspace(10, 100, 12) / driven.omega
    fit = divergence_exponent(driven, t, kind="magnus-series", period_average=True)
    assert abs(fit.slope) <= 0.2


def test_exact_divergence_is_degenerate(driven):
    t = np.geomspace(10, 100, 6) / driven.omega
    fit = divergence_exponent(driven, t, kind="exact")
    assert fit.degenerate
    assert fit.slope is None
    assert max(abs(s) for s in fit.samples) <= 1e-10


def test_divergence_needs_four_samples(driven):
    with pytest.raises(DomainError):
        divergence_exponent(driven, [10.0, 20.0, 50.0])


def test_divergence_unknown_kind(driven):
    with pytest.raises(DomainError):
        divergence_exponent(driven, [10.0, 20.0, 50.0, 100.0], kind="bogus")


def test_cutoff_stability():
    times = [0.7, 2.0, np.pi, 5.5]
    small, large = DrivenModeConfig(n_max=12), DrivenModeConfig(n_max=16)
    for t in times:
        for propagator in (exact_propagator, magnus_exponential_closed, magnus_series_closed, tdpt2_closed):
            a, b = propagator(small, t), propagator(large, t)
            assert abs(vacuum_overlap(a) - vacuum_overlap(b)) < 1e-8
            assert abs(vacuum_defect(a) - vacuum_defect(b)) < 1e-8


def test_bad_cutoff_is_rejected_by_fock_space():
    from app.services.operators import fock_space

    with pytest.raises(ConfigError):
        fock_space(1.0, -1)
