"""Joint spectral model of the photon pair and derived single-photon purity.

The two-photon amplitude is a double Gaussian in the pair frequencies: a
pump-energy envelope along the sum frequency and a phase-matching envelope
along the difference frequency.  It is sampled on a uniform wavelength grid
with row/column weights ``sqrt(|d omega / d lambda|)`` so that the plain
matrix SVD of the sampled array is the frequency-space Schmidt decomposition
of the continuous amplitude.

Everything downstream (heralded purity, Schmidt number, spectral filtering,
two-photon interference dips) operates on that sampled array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .config import SpectralConfig

__all__ = [
    "JointSpectrum",
    "SchmidtResult",
    "TWO_PI_C_NM_PER_S",
    "analytic_purity",
    "angular_frequency",
    "apply_filter",
    "build_jsa",
    "fwhm_of_curve",
    "hom_coincidence",
    "marginal_intensity",
    "schmidt_purity",
]

# 2*pi*c with c in nm/s: converts wavelength in nm to angular frequency in rad/s.
TWO_PI_C_NM_PER_S = 2.0 * math.pi * 2.99792458e17

_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
# Relative amplitude below which grid rows/columns are dropped before an SVD.
_CROP_RELATIVE_AMPLITUDE = 1e-7
_MIN_POINTS_PER_FWHM = 8.0
_MIN_FILTER_STEPS = 4.0


def angular_frequency(wavelength_nm: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Angular frequency (rad/s) of light at a vacuum wavelength in nm."""
    return TWO_PI_C_NM_PER_S / np.asarray(wavelength_nm, dtype=float)


@dataclass(frozen=True)
class JointSpectrum:
    """Sampled two-photon spectral amplitude on a shared wavelength grid.

    ``amplitude[i, j]`` belongs to arm 1 at ``wavelengths_nm[i]`` and arm 2
    at ``wavelengths_nm[j]`` and already includes the Jacobian weights; its
    squared sum is the probability that the pair survives all filters applied
    so far (1 for a freshly built spectrum).
    """

    wavelengths_nm: np.ndarray
    amplitude: np.ndarray
    center_wavelength_nm: float
    pump_center_nm: float
    transmission: float = 1.0

    @property
    def grid_step_nm(self) -> float:
        return float(self.wavelengths_nm[1] - self.wavelengths_nm[0])

    @property
    def angular_frequencies(self) -> np.ndarray:
        return angular_frequency(self.wavelengths_nm)


@dataclass(frozen=True)
class SchmidtResult:
    """Schmidt spectrum summary: heralded purity, mode count, mode weights."""

    purity: float
    schmidt_number: float
    mode_weights: np.ndarray


def _pump_sigma_omega(spectral: SpectralConfig) -> float:
    """Std of the sum-frequency envelope (rad/s).

    A transform-limited Gaussian pulse of intensity-FWHM duration ``t`` has a
    spectral intensity std of ``sqrt(2 ln 2) / t``; the configured scale
    factor absorbs chirp and phase-matching broadening.
    """
    duration_s = spectral.pump_duration_ps * 1e-12
    return math.sqrt(2.0 * math.log(2.0)) / duration_s * spectral.pump_bandwidth_scale


def _marginal_sigma_omega(spectral: SpectralConfig) -> float:
    """Std (rad/s) of the single-arm marginal intensity with the target FWHM."""
    fwhm_omega = (spectral.marginal_bandwidth_nm * TWO_PI_C_NM_PER_S
                  / spectral.center_wavelength_nm ** 2)
    return fwhm_omega / _FWHM_PER_SIGMA


def _envelope_sigmas(spectral: SpectralConfig) -> Tuple[float, float]:
    """(sigma_u, sigma_v): sum- and difference-frequency envelope widths."""
    sigma_u = _pump_sigma_omega(spectral)
    sigma_s = _marginal_sigma_omega(spectral)
    variance_v = 4.0 * sigma_s ** 2 - sigma_u ** 2
    if variance_v <= 0.0:
        raise ValueError(
            "marginal_bandwidth_nm is too small for the pump bandwidth: the "
            "difference-frequency envelope would have non-positive variance")
    return sigma_u, math.sqrt(variance_v)


def wavelength_fwhm_at_center(sigma_omega: float, center_wavelength_nm: float) -> float:
    """Intensity FWHM in nm of a feature with std ``sigma_omega`` in rad/s."""
    return (_FWHM_PER_SIGMA * sigma_omega * center_wavelength_nm ** 2
            / TWO_PI_C_NM_PER_S)


def build_jsa(spectral: SpectralConfig) -> JointSpectrum:
    """Sample the double-Gaussian two-photon amplitude on a wavelength grid.

    The grid spans ``span_fwhm`` marginal FWHMs either side of the center
    wavelength.  Raises if the sharpest feature (the sum-frequency ridge)
    would be sampled with fewer than 8 points per FWHM, which is where the
    discretized Schmidt spectrum visibly degrades.
    """
    sigma_u, sigma_v = _envelope_sigmas(spectral)
    center = spectral.center_wavelength_nm
    half_span = spectral.span_fwhm * spectral.marginal_bandwidth_nm
    grid = np.linspace(center - half_span, center + half_span, spectral.grid_size)
    step = float(grid[1] - grid[0])

    ridge_fwhm_nm = wavelength_fwhm_at_center(sigma_u, center)
    points_per_fwhm = ridge_fwhm_nm / step
    if points_per_fwhm < _MIN_POINTS_PER_FWHM:
        raise ValueError(
            f"grid resolution too coarse: {points_per_fwhm:.2f} points per "
            f"FWHM of the narrowest spectral feature ({ridge_fwhm_nm:.3f} nm "
            f"at {step:.3f} nm/step); need ≥ {_MIN_POINTS_PER_FWHM:.0f}. "
            "Increase grid_size or reduce span_fwhm.")

    omega = angular_frequency(grid)
    pump_omega = angular_frequency(spectral.pump_center_nm)
    sum_detuning = omega[:, None] + omega[None, :] - pump_omega
    difference = omega[:, None] - omega[None, :]
    envelope = np.exp(-sum_detuning ** 2 / (4.0 * sigma_u ** 2)
                      - difference ** 2 / (4.0 * sigma_v ** 2))

    # sqrt(|d omega / d lambda|) row/column weights make the matrix SVD the
    # frequency-space Schmidt decomposition despite the wavelength gridding.
    jacobian_root = np.sqrt(TWO_PI_C_NM_PER_S) / grid
    amplitude = envelope * np.outer(jacobian_root, jacobian_root)

    norm = math.sqrt(float(np.sum(amplitude ** 2)))
    if norm == 0.0:
        raise ValueError("sampled spectral amplitude is identically zero")
    amplitude = amplitude / norm
    return JointSpectrum(
        wavelengths_nm=grid,
        amplitude=amplitude,
        center_wavelength_nm=center,
        pump_center_nm=spectral.pump_center_nm,
        transmission=1.0,
    )


def apply_filter(jsa: JointSpectrum, bandwidth_nm: Optional[float],
                 kind: str = "gaussian") -> JointSpectrum:
    """Apply an identical bandpass filter to both arms.

    ``bandwidth_nm`` is the intensity FWHM (gaussian) or full width (tophat),
    centered on the spectrum's center wavelength; ``None`` or ``inf`` leaves
    the spectrum untouched.  The pass probability is folded into
    ``transmission``.  Raises if the filter is narrower than 4 grid steps,
    below which the sampled passband is unresolved.
    """
    if bandwidth_nm is None or math.isinf(bandwidth_nm):
        return replace(jsa)
    if bandwidth_nm <= 0.0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth_nm!r}")
    step = jsa.grid_step_nm
    if bandwidth_nm < _MIN_FILTER_STEPS * step:
        raise ValueError(
            f"filter bandwidth {bandwidth_nm:g} nm spans fewer than "
            f"{_MIN_FILTER_STEPS:.0f} grid steps ({step:.4f} nm each); "
            "increase grid_size or the bandwidth")

    grid = jsa.wavelengths_nm
    if kind == "gaussian":
        sigma_omega = (bandwidth_nm * TWO_PI_C_NM_PER_S
                       / jsa.center_wavelength_nm ** 2) / _FWHM_PER_SIGMA
        detuning = angular_frequency(grid) - angular_frequency(jsa.center_wavelength_nm)
        # Amplitude transmission: the intensity profile has the quoted FWHM.
        arm_transmission = np.exp(-detuning ** 2 / (4.0 * sigma_omega ** 2))
    elif kind == "tophat":
        arm_transmission = (
            np.abs(grid - jsa.center_wavelength_nm) <= bandwidth_nm / 2.0
        ).astype(float)
    else:
        raise ValueError(f"unknown filter kind {kind!r}; expected 'gaussian' or 'tophat'")

    before = float(np.sum(np.abs(jsa.amplitude) ** 2))
    filtered = jsa.amplitude * np.outer(arm_transmission, arm_transmission)
    after = float(np.sum(np.abs(filtered) ** 2))
    if after == 0.0:
        raise ValueError("filter removed the entire spectral amplitude")
    return replace(jsa, amplitude=filtered,
                   transmission=jsa.transmission * (after / before if before else 0.0))


def _cropped_amplitude(amplitude: np.ndarray) -> np.ndarray:
    """Contiguous sub-block holding every row/column with non-negligible weight."""
    magnitude = np.abs(amplitude)
    peak = magnitude.max()
    if peak == 0.0:
        raise ValueError("spectral amplitude is identically zero")
    threshold = peak * _CROP_RELATIVE_AMPLITUDE
    rows = np.nonzero(magnitude.max(axis=1) > threshold)[0]
    cols = np.nonzero(magnitude.max(axis=0) > threshold)[0]
    return amplitude[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]


def schmidt_purity(jsa: JointSpectrum) -> SchmidtResult:
    """Schmidt spectrum of the two-photon amplitude.

    Returns the heralded single-photon purity (sum of squared normalized
    Schmidt weights), the Schmidt number (its reciprocal), and the full
    descending weight spectrum.  Rows/columns with negligible amplitude are
    cropped before the SVD; this leaves the spectrum unchanged at the
    tolerances quoted elsewhere while keeping heavily filtered spectra cheap.
    """
    block = _cropped_amplitude(jsa.amplitude)
    singular_values = np.linalg.svd(block, compute_uv=False)
    weights = singular_values ** 2
    total = float(weights.sum())
    if total == 0.0:
        raise ValueError("spectral amplitude has zero norm")
    weights = weights / total
    purity = float(np.sum(weights ** 2))
    return SchmidtResult(purity=purity, schmidt_number=1.0 / purity,
                         mode_weights=weights)


def marginal_intensity(jsa: JointSpectrum, arm: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Single-arm spectral intensity (wavelength grid, un-normalized weights)."""
    if arm not in (1, 2):
        raise ValueError(f"arm must be 1 or 2, got {arm!r}")
    intensity = np.sum(np.abs(jsa.amplitude) ** 2, axis=2 - arm)
    return jsa.wavelengths_nm.copy(), intensity


def fwhm_of_curve(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum of a sampled single-peak curve.

    Crossings of the half-maximum level are located by linear interpolation
    on either side of the peak; raises if a crossing is missing (peak not
    resolved inside the sampled range).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 3:
        raise ValueError("x and y must be equal-length 1-D arrays of size ≥ 3")
    peak_index = int(np.argmax(y))
    half = y[peak_index] / 2.0
    if y[peak_index] <= 0.0:
        raise ValueError("curve has no positive peak")

    def crossing(indices: Sequence[int]) -> float:
        previous = peak_index
        for index in indices:
            if y[index] <= half:
                x0, x1 = x[index], x[previous]
                y0, y1 = y[index], y[previous]
                return x0 + (half - y0) * (x1 - x0) / (y1 - y0)
            previous = index
        raise ValueError("curve does not fall to half maximum inside the range")

    left = crossing(range(peak_index - 1, -1, -1))
    right = crossing(range(peak_index + 1, x.size))
    return float(right - left)


def hom_coincidence(jsa: JointSpectrum, delays_fs: np.ndarray) -> np.ndarray:
    """Two-photon interference coincidence probability versus relative delay.

    For a pair split on a balanced beam splitter the normalized coincidence
    probability is ``(1 - Re V(tau)) / 2`` where ``V`` is the exchange
    overlap of the two-photon amplitude with its arm-swapped, delay-phased
    self.  A spectrally pure (single-Schmidt-mode, exchange-symmetric)
    amplitude dips to zero at zero delay.
    """
    delays_s = np.asarray(delays_fs, dtype=float) * 1e-15
    amplitude = jsa.amplitude
    exchange = amplitude * np.conj(amplitude.T)
    norm = float(np.sum(np.abs(amplitude) ** 2))
    if norm == 0.0:
        raise ValueError("spectral amplitude has zero norm")
    # Offsetting the frequencies rigidly cancels in V; keep the phases small.
    omega = jsa.angular_frequencies - angular_frequency(jsa.center_wavelength_nm)

    probabilities = np.empty(delays_s.shape, dtype=float)
    flat = delays_s.ravel()
    out = probabilities.ravel()
    for index, delay in enumerate(flat):
        phase = np.exp(-1j * omega * delay)
        overlap = np.dot(phase, exchange @ np.conj(phase))
        out[index] = 0.5 * (1.0 - float(np.real(overlap)) / norm)
    np.clip(probabilities, 0.0, 1.0, out=probabilities)
    return probabilities


def analytic_purity(sigma_u: float, sigma_v: float) -> float:
    """Closed-form purity of the ideal double-Gaussian amplitude.

    With width ratio r = sigma_u / sigma_v the heralded purity is
    2r / (1 + r^2); equal widths give a separable (unit-purity) state.
    """
    if sigma_u <= 0.0 or sigma_v <= 0.0:
        raise ValueError("widths must be > 0")
    ratio = sigma_u / sigma_v
    return 2.0 * ratio / (1.0 + ratio ** 2)


def envelope_widths(spectral: SpectralConfig) -> Tuple[float, float]:
    """Public view of the (sum, difference) envelope stds in rad/s."""
    return _envelope_sigmas(spectral)
