"""Joint spectral amplitude, Schmidt purity, filtering, and interference dips."""

import math

import numpy as np
import pytest

from sagnacsim.config import SpectralConfig
from sagnacsim.spectral import (
    TWO_PI_C_NM_PER_S,
    analytic_purity,
    apply_filter,
    build_jsa,
    envelope_widths,
    fwhm_of_curve,
    hom_coincidence,
    marginal_intensity,
    schmidt_purity,
    wavelength_fwhm_at_center,
)

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


def gaussian_jsa_weights(sigma_u: float, sigma_v: float,
                         n: int = 8) -> np.ndarray:
    """Sample a double-Gaussian amplitude on an n x n grid in (u, v) axes."""
    span = 5.0 * max(sigma_u, sigma_v)
    axis = np.linspace(-span, span, n)
    w1, w2 = np.meshgrid(axis, axis, indexing="ij")
    return np.exp(-(w1 + w2) ** 2 / (4 * sigma_u ** 2)
                  - (w1 - w2) ** 2 / (4 * sigma_v ** 2))


# ---------------------------------------------------------------------------
# Purity estimators agree with each other and with the closed form


def test_svd_purity_matches_partial_trace_on_8x8_grid():
    """Schmidt purity via SVD must equal tr(rho_1^2) from the Gram matrix."""
    amplitude = gaussian_jsa_weights(1.0, 3.7, n=8)
    amplitude = amplitude / math.sqrt(float(np.sum(amplitude ** 2)))

    weights = np.linalg.svd(amplitude, compute_uv=False) ** 2
    weights = weights / weights.sum()
    purity_svd = float(np.sum(weights ** 2))

    reduced = amplitude @ amplitude.conj().T  # heralded single-photon rho
    reduced = reduced / np.trace(reduced)
    purity_trace = float(np.real(np.trace(reduced @ reduced)))

    assert abs(purity_svd - purity_trace) <= 1e-10


def test_analytic_purity_closed_form():
    assert analytic_purity(1.0, 1.0) == 1.0
    assert analytic_purity(1.0, 4.0) == pytest.approx(8.0 / 17.0, abs=1e-15)
    # Symmetric under inverting the width ratio (up to rounding).
    assert analytic_purity(2.0, 5.0) == pytest.approx(
        analytic_purity(5.0, 2.0), abs=1e-15)
    with pytest.raises(ValueError):
        analytic_purity(0.0, 1.0)


def test_unfiltered_purity_matches_analytic_double_gaussian():
    spectral = SpectralConfig()
    jsa = build_jsa(spectral)
    sigma_u, sigma_v = envelope_widths(spectral)
    expected = analytic_purity(sigma_u, sigma_v)
    result = schmidt_purity(jsa)
    assert result.purity == pytest.approx(expected, rel=0.02)
    assert result.schmidt_number == pytest.approx(1.0 / result.purity)
    np.testing.assert_allclose(result.mode_weights.sum(), 1.0, atol=1e-12)


def test_gaussian_filter_purity_matches_analytic_oracle():
    """Filtered double-Gaussian stays Gaussian with shrunken widths.

    An intensity-FWHM-B Gaussian filter on each arm multiplies the
    amplitude by exp(-d_i^2 / (4 sigma_f^2)).  With d_1^2 + d_2^2 =
    (u^2 + v^2) / 2 in the rotated sum/difference axes, both envelope
    variances contract as 1/sigma'^2 = 1/sigma^2 + 1/(2 sigma_f^2),
    giving a closed-form filtered purity to compare against the SVD.
    """
    spectral = SpectralConfig()
    sigma_u, sigma_v = envelope_widths(spectral)
    for bandwidth_nm in (40.0, 18.0, 10.0):
        sigma_f = (bandwidth_nm * TWO_PI_C_NM_PER_S
                   / spectral.center_wavelength_nm ** 2) / FWHM_PER_SIGMA
        new_u = 1.0 / math.sqrt(1.0 / sigma_u ** 2 + 0.5 / sigma_f ** 2)
        new_v = 1.0 / math.sqrt(1.0 / sigma_v ** 2 + 0.5 / sigma_f ** 2)
        expected = analytic_purity(new_u, new_v)

        filtered = apply_filter(build_jsa(spectral), bandwidth_nm)
        assert schmidt_purity(filtered).purity == pytest.approx(
            expected, rel=0.03), f"bandwidth {bandwidth_nm} nm"


def test_purity_strictly_increases_as_filters_narrow():
    jsa = build_jsa(SpectralConfig())
    purities = [
        schmidt_purity(apply_filter(jsa, bandwidth)).purity
        for bandwidth in (None, 40.0, 18.0, 10.0, 6.0, 3.0, 1.0)
    ]
    assert all(b > a for a, b in zip(purities, purities[1:]))
    assert purities[-1] > 0.97


# ---------------------------------------------------------------------------
# Marginals and geometry


def test_marginal_fwhm_matches_configuration():
    spectral = SpectralConfig(marginal_bandwidth_nm=132.0)
    jsa = build_jsa(spectral)
    for arm in (1, 2):
        wavelengths, intensity = marginal_intensity(jsa, arm=arm)
        assert fwhm_of_curve(wavelengths, intensity) == pytest.approx(
            132.0, rel=0.02)


def test_marginals_of_symmetric_spectrum_are_equal():
    jsa = build_jsa(SpectralConfig())
    _, marginal_1 = marginal_intensity(jsa, arm=1)
    _, marginal_2 = marginal_intensity(jsa, arm=2)
    np.testing.assert_allclose(marginal_1, marginal_2, atol=1e-12)


def test_wavelength_fwhm_round_trip():
    spectral = SpectralConfig()
    sigma = (spectral.marginal_bandwidth_nm * TWO_PI_C_NM_PER_S
             / spectral.center_wavelength_nm ** 2) / FWHM_PER_SIGMA
    assert wavelength_fwhm_at_center(
        sigma, spectral.center_wavelength_nm) == pytest.approx(
        spectral.marginal_bandwidth_nm, rel=1e-12)


def test_fwhm_of_curve_on_exact_gaussian():
    x = np.linspace(-10, 10, 2001)
    sigma = 1.7
    width = fwhm_of_curve(x, np.exp(-x ** 2 / (2 * sigma ** 2)))
    assert width == pytest.approx(FWHM_PER_SIGMA * sigma, rel=1e-4)
    with pytest.raises(ValueError):
        fwhm_of_curve(x, np.ones_like(x))  # never falls to half maximum


# ---------------------------------------------------------------------------
# Filters


def test_apply_filter_none_and_inf_are_identity():
    jsa = build_jsa(SpectralConfig())
    for bandwidth in (None, math.inf):
        same = apply_filter(jsa, bandwidth)
        np.testing.assert_array_equal(same.amplitude, jsa.amplitude)
        assert same.transmission == jsa.transmission


def test_apply_filter_tracks_transmission():
    jsa = build_jsa(SpectralConfig())
    filtered = apply_filter(jsa, 18.0)
    assert 0.0 < filtered.transmission < 1.0
    assert filtered.transmission == pytest.approx(
        float(np.sum(np.abs(filtered.amplitude) ** 2)), rel=1e-12)
    twice = apply_filter(filtered, 18.0)
    assert twice.transmission < filtered.transmission


def test_tophat_filter_zeroes_outside_band():
    jsa = build_jsa(SpectralConfig())
    filtered = apply_filter(jsa, 40.0, kind="tophat")
    outside = np.abs(jsa.wavelengths_nm - jsa.center_wavelength_nm) > 20.0
    assert np.all(filtered.amplitude[outside, :] == 0.0)
    assert np.all(filtered.amplitude[:, outside] == 0.0)
    with pytest.raises(ValueError):
        apply_filter(jsa, 40.0, kind="brick")


def test_resolution_guards_raise_helpfully():
    with pytest.raises(ValueError, match="Increase grid_size"):
        build_jsa(SpectralConfig(grid_size=64, span_fwhm=1.5))
    jsa = build_jsa(SpectralConfig())
    with pytest.raises(ValueError, match="grid steps"):
        apply_filter(jsa, 0.2)


# ---------------------------------------------------------------------------
# Two-photon interference


def test_hom_dip_reaches_zero_for_symmetric_spectrum():
    jsa = build_jsa(SpectralConfig())
    dip = hom_coincidence(jsa, np.array([0.0]))
    assert dip[0] == pytest.approx(0.0, abs=1e-9)


def test_hom_dip_width_matches_difference_envelope():
    """The dip FWHM and the difference-frequency intensity FWHM are
    Fourier partners: their product is 8 ln 2 for Gaussian envelopes.

    The exchange overlap of the symmetric double Gaussian is
    exp(-sigma_v^2 tau^2 / 2), a Gaussian in delay with std 1/sigma_v,
    so FWHM_tau * FWHM_omega = (2 sqrt(2 ln 2))^2 = 8 ln 2.
    """
    spectral = SpectralConfig()
    jsa = build_jsa(spectral)
    _, sigma_v = envelope_widths(spectral)
    delays = np.linspace(-80.0, 80.0, 321)
    dip = hom_coincidence(jsa, delays)
    # Convert the dip into a peak to measure its width.
    width_fs = fwhm_of_curve(delays, dip.max() - dip)
    sigma_v_fwhm = FWHM_PER_SIGMA * sigma_v  # rad/s
    product = (width_fs * 1e-15) * sigma_v_fwhm
    assert product == pytest.approx(8.0 * math.log(2.0), rel=0.01)


def test_hom_far_delay_baseline_is_half():
    jsa = build_jsa(SpectralConfig())
    far = hom_coincidence(jsa, np.array([-500.0, 500.0]))
    np.testing.assert_allclose(far, 0.5, atol=5e-3)
