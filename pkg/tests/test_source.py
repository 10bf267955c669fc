"""Loop source model: waveplate selection, focus phase, and noise knobs."""

import dataclasses
import math

import numpy as np
import pytest

from sagnacsim.config import LoopSettings, SourceConfig
from sagnacsim.polarization import (
    bell_state,
    fidelity,
    ideal_correlation,
    kets_equal_up_to_phase,
    reduced_density_matrix,
)
from sagnacsim.source import (
    amplitude_pair,
    emitted_density_matrix,
    pair_mean_per_pulse,
    phase_of_position,
    prepare_state,
)


def loop(h2_deg: float, q2_deg: float) -> LoopSettings:
    return LoopSettings(half_wave_rad=math.radians(h2_deg),
                        quarter_wave_rad=math.radians(q2_deg))


# ---------------------------------------------------------------------------
# Waveplate settings select the four maximally entangled states


@pytest.mark.parametrize("h2_deg,q2_deg,kind,phase", [
    (0.0, 0.0, "phi", 0.0),
    (0.0, 90.0, "phi", math.pi),
    (45.0, 0.0, "psi", 0.0),
    (45.0, 90.0, "psi", math.pi),
])
def test_waveplates_select_bell_states(h2_deg, q2_deg, kind, phase):
    state = prepare_state(SourceConfig(), loop(h2_deg, q2_deg))
    assert kets_equal_up_to_phase(state, bell_state(kind, phase), tol=1e-10)


def test_prepare_state_default_is_correlated_bell_state():
    state = prepare_state(SourceConfig(), LoopSettings())
    np.testing.assert_allclose(state, bell_state("phi"), atol=1e-12)


# ---------------------------------------------------------------------------
# Focus position sets the superposition phase


def test_phase_of_position_linear_anchored():
    source = SourceConfig(phase_offset_rad=0.25, reference_position_mm=2.0,
                          phase_period_mm=4.0)
    assert phase_of_position(source, 2.0) == pytest.approx(0.25, abs=1e-15)
    assert phase_of_position(source, 3.0) == pytest.approx(
        0.25 + math.pi / 2, abs=1e-12)
    assert phase_of_position(source, 6.0) == pytest.approx(
        0.25 + 2 * math.pi, abs=1e-12)


def test_half_period_shift_flips_phi_plus_to_phi_minus():
    source = SourceConfig(phase_period_mm=1.0)
    plus = prepare_state(source, LoopSettings(), position_mm=0.0)
    minus = prepare_state(source, LoopSettings(), position_mm=0.5)
    assert kets_equal_up_to_phase(plus, bell_state("phi", 0.0))
    assert kets_equal_up_to_phase(minus, bell_state("phi", math.pi))


def test_full_period_shift_returns_same_state():
    source = SourceConfig(phase_period_mm=0.8)
    rng = np.random.default_rng(5)
    for _ in range(50):
        z = rng.uniform(-3.0, 3.0)
        a = prepare_state(source, LoopSettings(), position_mm=z)
        b = prepare_state(source, LoopSettings(), position_mm=z + 0.8)
        assert kets_equal_up_to_phase(a, b, tol=1e-10)


def test_phase_of_position_rejects_nan():
    with pytest.raises(ValueError):
        phase_of_position(SourceConfig(), float("nan"))


# ---------------------------------------------------------------------------
# Pump power and amplitude balance


def test_pair_mean_scales_linearly_with_power():
    source = SourceConfig(mean_pairs_per_pulse=0.046, reference_power_mw=1.0)
    assert pair_mean_per_pulse(source, 1.0) == pytest.approx(0.046)
    assert pair_mean_per_pulse(source, 2.0) == pytest.approx(0.092)
    assert pair_mean_per_pulse(source, 0.0) == 0.0
    with pytest.raises(ValueError):
        pair_mean_per_pulse(source, -0.1)


def test_amplitude_pair_balance_and_norm():
    a, b = amplitude_pair(SourceConfig(imbalance=0.0))
    assert a == pytest.approx(b) and a == pytest.approx(1 / math.sqrt(2))
    a, b = amplitude_pair(SourceConfig(imbalance=0.28))
    assert a ** 2 + b ** 2 == pytest.approx(1.0, abs=1e-15)
    assert a ** 2 - b ** 2 == pytest.approx(0.28, abs=1e-15)


def test_imbalance_shows_in_coincidence_amplitudes():
    source = SourceConfig(imbalance=0.28)
    state = prepare_state(source, LoopSettings())
    # Components of the correlated superposition carry the skewed weights.
    assert abs(state[0]) ** 2 == pytest.approx(0.64, abs=1e-12)
    assert abs(state[3]) ** 2 == pytest.approx(0.36, abs=1e-12)


# ---------------------------------------------------------------------------
# Noise knobs of the mixed-state model


def test_emitted_density_matrix_pure_limit():
    source = SourceConfig(coherence=1.0, crosstalk=0.0)
    rho = emitted_density_matrix(source, loop(45.0, 90.0))
    ket = prepare_state(source, loop(45.0, 90.0))
    np.testing.assert_allclose(rho, np.outer(ket, ket.conj()), atol=1e-12)


def test_coherence_sets_diagonal_basis_correlation():
    gamma = 0.87
    rho = emitted_density_matrix(SourceConfig(coherence=gamma),
                                 LoopSettings())
    e_diag = ideal_correlation(rho, math.radians(45.0), math.radians(45.0))
    assert e_diag == pytest.approx(gamma, abs=1e-12)
    # The correlated-basis correlation is untouched by pure dephasing.
    assert ideal_correlation(rho, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_crosstalk_sets_correlated_basis_error():
    lam = 0.06
    rho = emitted_density_matrix(SourceConfig(crosstalk=lam), LoopSettings())
    assert ideal_correlation(rho, 0.0, 0.0) == pytest.approx(
        1.0 - 2.0 * lam, abs=1e-12)
    # Diagonal-basis contrast scales with the surviving population.
    assert ideal_correlation(rho, math.radians(45.0),
                             math.radians(45.0)) == pytest.approx(
        1.0 - lam, abs=1e-12)


def test_combined_noise_fidelity():
    gamma, lam = 0.92, 0.03
    rho = emitted_density_matrix(
        SourceConfig(coherence=gamma, crosstalk=lam), LoopSettings())
    assert fidelity(rho, bell_state("phi")) == pytest.approx(
        (1.0 - lam) * (1.0 + gamma) / 2.0, abs=1e-12)


def test_reduced_states_stay_maximally_mixed_under_noise():
    rng = np.random.default_rng(17)
    for _ in range(100):
        source = SourceConfig(coherence=rng.uniform(0, 1),
                              crosstalk=rng.uniform(0, 0.5),
                              phase_offset_rad=rng.uniform(0, 2 * math.pi))
        rho = emitted_density_matrix(source, LoopSettings())
        for arm in (1, 2):
            np.testing.assert_allclose(reduced_density_matrix(rho, arm),
                                       np.eye(2) / 2, atol=1e-10)


def test_emitted_density_matrix_always_valid_state():
    rng = np.random.default_rng(23)
    for _ in range(200):
        source = SourceConfig(coherence=rng.uniform(0, 1),
                              crosstalk=rng.uniform(0, 0.5),
                              imbalance=rng.uniform(-0.9, 0.9))
        settings = loop(rng.uniform(0, 180), rng.uniform(0, 180))
        rho = emitted_density_matrix(source, settings)
        eigenvalues = np.linalg.eigvalsh(rho)
        assert eigenvalues.min() >= -1e-12
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)


def test_plan_validation_rejects_bad_noise_values():
    from sagnacsim.config import ExperimentPlan, validate_plan

    bad_coherence = dataclasses.replace(
        ExperimentPlan(), source=SourceConfig(coherence=1.2))
    with pytest.raises(ValueError, match="coherence"):
        validate_plan(bad_coherence)
    bad_crosstalk = dataclasses.replace(
        ExperimentPlan(), source=SourceConfig(crosstalk=-0.1))
    with pytest.raises(ValueError, match="crosstalk"):
        validate_plan(bad_crosstalk)
