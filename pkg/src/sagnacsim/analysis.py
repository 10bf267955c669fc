"""Statistical reduction of counting records.

Fringe visibility fits, accidental subtraction, correlation coefficients and
the Bell-test figure of merit with uncertainties, pair-probability
estimation, and maximum-likelihood two-qubit state reconstruction.

Counting data arrives as :class:`CountsRecord` values — one analyzer setting
held for a block of trigger gates.  Counts are floats so that closed-form
expected counts flow through the same code paths as sampled integers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from .polarization import ARM_KETS, fidelity, validate_density_matrix

__all__ = [
    "ChshResult",
    "CountsRecord",
    "FringeFit",
    "TOMOGRAPHY_BASES",
    "TomographyResult",
    "accidental_estimate_counts",
    "chsh",
    "chsh_from_records",
    "chsh_poisson_sigma",
    "corrected_pair_mean",
    "correlation_coefficient",
    "expected_S",
    "estimate_pair_probability",
    "fit_fringe",
    "net_coincidences",
    "subtract_accidentals",
    "tomography",
]

_TSIRELSON = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class CountsRecord:
    """Counting totals for one analyzer setting held over ``gates`` triggers.

    ``live_gates_*`` count the triggers during which each detector was armed
    (equal to ``gates`` when dead time is disabled or in closed-form mode).
    ``axis_value`` carries the swept quantity (angle, power, position) when
    the record belongs to a sweep.
    """

    label: str
    angle_1_deg: Optional[float]
    angle_2_deg: Optional[float]
    gates: float
    singles_1: float
    singles_2: float
    coincidences: float
    live_gates_1: float
    live_gates_2: float
    axis_value: Optional[float] = None

    def duration_s(self, trigger_rate_hz: float) -> float:
        if trigger_rate_hz <= 0.0:
            raise ValueError(f"trigger_rate must be > 0, got {trigger_rate_hz!r}")
        return self.gates / trigger_rate_hz


def accidental_estimate_counts(record: CountsRecord) -> float:
    """Uncorrelated-coincidence estimate in counts: singles product over gates."""
    if record.gates <= 0:
        raise ValueError(f"record has no gates: {record.gates!r}")
    return record.singles_1 * record.singles_2 / record.gates


def net_coincidences(record: CountsRecord) -> float:
    """Coincidence counts after subtracting the accidental estimate (may be < 0)."""
    return record.coincidences - accidental_estimate_counts(record)


def subtract_accidentals(record: CountsRecord, trigger_rate_hz: float) -> float:
    """Net coincidence rate (Hz) after removing the accidental estimate.

    The estimate is the product of the two singles rates over the trigger
    rate.  A negative result is reported as-is — clamping would bias
    averaged noise floors.
    """
    if trigger_rate_hz <= 0.0:
        raise ValueError(f"trigger_rate must be > 0, got {trigger_rate_hz!r}")
    duration = record.duration_s(trigger_rate_hz)
    return net_coincidences(record) / duration


# --------------------------------------------------------------------------
# Correlation coefficients and the Bell-test figure of merit

def correlation_coefficient(records: Sequence[CountsRecord],
                            net: bool = False) -> Tuple[float, float]:
    """Polarization correlation coefficient E and its standard error.

    ``records`` hold the four coincidence counts at (t1, t2), (t1, t2+90°),
    (t1+90°, t2), (t1+90°, t2+90°) in that order; E is their signed sum over
    their total.  With ``net=True`` each count has its accidental estimate
    subtracted first.  The error bar propagates Poisson variances of the raw
    counts through the ratio.
    """
    if len(records) != 4:
        raise ValueError(f"need exactly 4 records, got {len(records)}")
    signs = (1.0, -1.0, -1.0, 1.0)
    counts = [net_coincidences(r) if net else r.coincidences for r in records]
    variances = [max(r.coincidences, 0.0) for r in records]

    total = sum(counts)
    if total == 0.0:
        raise ValueError("zero total coincidence counts; E is undefined")
    signed = sum(s * c for s, c in zip(signs, counts))
    e_value = signed / total

    variance = sum(((s * total - signed) / total ** 2) ** 2 * v
                   for s, v, in zip(signs, variances))
    return e_value, math.sqrt(variance)


@dataclass(frozen=True)
class ChshResult:
    """Bell-test figure of merit S = |E1 - E2 + E3 + E4| with uncertainty."""

    e_values: Tuple[float, float, float, float]
    e_sigmas: Tuple[float, float, float, float]
    s_value: float
    s_sigma: float
    n_sigma: float


def chsh(correlations: Sequence[Tuple[float, float]]) -> ChshResult:
    """Combine four (E, sigma_E) pairs into the Bell-test figure of merit.

    The sign pattern is fixed: S = |E1 - E2 + E3 + E4|, with the primed
    second-arm setting in position 2.  ``n_sigma`` is the distance of S above
    the local-realism bound 2 in combined standard errors.  Values outside
    the algebraically possible range (|E| > 1, or S beyond the quantum bound
    by more than 3 combined sigmas) are rejected as corrupt input.
    """
    if len(correlations) != 4:
        raise ValueError(f"need exactly 4 correlation coefficients, got {len(correlations)}")
    e_values = tuple(float(e) for e, _ in correlations)
    e_sigmas = tuple(float(s) for _, s in correlations)
    for index, (e_value, sigma) in enumerate(zip(e_values, e_sigmas)):
        if abs(e_value) > 1.0 + 1e-9:
            raise ValueError(f"correlation {index}: |E| = {abs(e_value)} exceeds 1")
        if sigma < 0.0 or not math.isfinite(sigma):
            raise ValueError(f"correlation {index}: invalid sigma {sigma!r}")

    s_value = abs(e_values[0] - e_values[1] + e_values[2] + e_values[3])
    s_sigma = math.sqrt(sum(s ** 2 for s in e_sigmas))
    if s_value > _TSIRELSON + 3.0 * s_sigma + 1e-12:
        raise ValueError(
            f"S = {s_value} exceeds the quantum bound {_TSIRELSON} by more "
            f"than 3 combined sigmas ({s_sigma}); inputs are inconsistent")
    if s_sigma > 0.0:
        n_sigma = (s_value - 2.0) / s_sigma
    else:
        n_sigma = math.inf if s_value > 2.0 else (-math.inf if s_value < 2.0 else 0.0)
    return ChshResult(e_values=e_values, e_sigmas=e_sigmas, s_value=s_value,
                      s_sigma=s_sigma, n_sigma=n_sigma)


def chsh_from_records(records: Sequence[CountsRecord], net: bool = False) -> ChshResult:
    """Reduce a 16-record Bell-test run (4 quadruples in E order) to S.

    Accepts the record layout produced by the experiment harness: four
    consecutive records per correlation coefficient, quadruples ordered
    E(t1,t2), E(t1,t2'), E(t1',t2), E(t1',t2').
    """
    if len(records) != 16:
        raise ValueError(f"need exactly 16 records, got {len(records)}")
    correlations = [correlation_coefficient(records[4 * i:4 * i + 4], net=net)
                    for i in range(4)]
    return chsh(correlations)


def chsh_poisson_sigma(visibility: float, max_coincidences: float) -> float:
    """Predicted uncertainty of S from fringe visibility and peak counts.

    For Poisson-limited fringes with visibility V and N coincidences at the
    fringe maximum the expected standard error of S is sqrt((2 - V^2)/N).
    """
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility!r}")
    if max_coincidences < 1:
        raise ValueError(f"max_coincidences must be ≥ 1, got {max_coincidences!r}")
    return math.sqrt((2.0 - visibility ** 2) / max_coincidences)


def expected_S(visibility: float) -> float:
    """S predicted from a fringe visibility: the quantum maximum scaled by V."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility!r}")
    return _TSIRELSON * visibility


def estimate_pair_probability(singles_1_hz: float, singles_2_hz: float,
                              coincidence_hz: float, trigger_rate_hz: float) -> float:
    """Pair probability per trigger from rates alone: s1·s2/(c·f).

    With s_i = mu·eta_i·f and c = mu·eta_1·eta_2·f the detector efficiencies
    cancel, leaving mu.  Sensitive to dark counts and accidentals at the few-
    percent level; calling code can pre-subtract those from the rates.
    """
    if coincidence_hz <= 0.0:
        raise ValueError(f"coincidence rate must be > 0, got {coincidence_hz!r}")
    if trigger_rate_hz <= 0.0:
        raise ValueError(f"trigger_rate must be > 0, got {trigger_rate_hz!r}")
    if singles_1_hz < 0.0 or singles_2_hz < 0.0:
        raise ValueError("singles rates must be ≥ 0")
    return singles_1_hz * singles_2_hz / (coincidence_hz * trigger_rate_hz)


def corrected_pair_mean(record: CountsRecord, dark_prob_1: float,
                        dark_prob_2: float) -> float:
    """Pair mean per trigger with dark counts and accidentals inverted out.

    Exact inversion of the Poissonian click model for open analyzers:
    per-gate singles probabilities give x_i = -ln((1 - s_i)/(1 - d_i))
    = mu·eta_i, the joint no-click probability gives y = mu·eta_1·eta_2, and
    the efficiency-independent ratio x1·x2/y recovers mu — the singles-times-
    singles-over-coincidence estimator evaluated on dark-corrected log-scale
    rates.  Counts are normalized per live gate, so dead time cancels except
    for the (small) correlation between the two arms' dead windows.
    """
    if not (0.0 <= dark_prob_1 < 1.0 and 0.0 <= dark_prob_2 < 1.0):
        raise ValueError("dark probabilities must lie in [0, 1)")
    if record.live_gates_1 <= 0 or record.live_gates_2 <= 0:
        raise ValueError("record has no live gates")
    s1 = record.singles_1 / record.live_gates_1
    s2 = record.singles_2 / record.live_gates_2
    joint_live = record.live_gates_1 * record.live_gates_2 / record.gates
    c = record.coincidences / joint_live
    if not (s1 < 1.0 and s2 < 1.0):
        raise ValueError("per-gate singles probability must be < 1")
    x1 = -math.log((1.0 - s1) / (1.0 - dark_prob_1))
    x2 = -math.log((1.0 - s2) / (1.0 - dark_prob_2))
    no_click_joint = 1.0 - s1 - s2 + c
    if no_click_joint <= 0.0:
        raise ValueError("joint no-click probability must be > 0")
    y = (math.log(no_click_joint) - math.log(1.0 - dark_prob_1)
         - math.log(1.0 - dark_prob_2) + x1 + x2)
    if y <= 0.0:
        raise ValueError("coincidence excess is non-positive; cannot invert")
    return x1 * x2 / y


# --------------------------------------------------------------------------
# Fringe fitting

@dataclass(frozen=True)
class FringeFit:
    """Fitted fringe ``offset + amplitude·cos²(angle - phase)`` and its visibility.

    Visibility is (max - min)/(max + min) of the fitted curve, i.e.
    amplitude/(amplitude + 2·offset), clamped into [0, 1]: a slightly
    negative fitted offset (pure statistical fluctuation around zero
    background) would otherwise push V above 1.  ``phase_rad`` is the fitted
    phase in radians; for the sin² model it refers to the sin² form.
    """

    visibility: float
    visibility_sigma: float
    amplitude: float
    amplitude_sigma: float
    offset: float
    offset_sigma: float
    phase_rad: float
    phase_sigma_rad: float
    model: str

    @property
    def phase_deg(self) -> float:
        return math.degrees(self.phase_rad)


def _fringe_model(angles_rad: np.ndarray, amplitude: float, offset: float,
                  phase: float) -> np.ndarray:
    return offset + amplitude * np.cos(angles_rad - phase) ** 2


def fit_fringe(angles_deg: Sequence[float], counts: Sequence[float],
               model: str = "cos2") -> FringeFit:
    """Weighted least-squares fringe fit with Poisson errors.

    ``angles_deg`` must contain at least 5 points spanning at least half a
    fringe period (90°).  The initial phase and amplitude come from the
    discrete Fourier fundamental at twice the angle; the fit then runs a
    damped least-squares pass, re-deriving Poisson weights from the model
    once (weights sqrt(max(model, 1))).  ``model`` selects ``cos2`` or
    ``sin2``; the latter is the same curve with the phase shifted a quarter
    period, and the reported phase refers to the requested form.
    """
    if model not in ("cos2", "sin2"):
        raise ValueError(f"model must be 'cos2' or 'sin2', got {model!r}")
    angles = np.asarray(angles_deg, dtype=float)
    values = np.asarray(counts, dtype=float)
    if angles.ndim != 1 or angles.shape != values.shape:
        raise ValueError("angles and counts must be equal-length 1-D sequences")
    if angles.size < 5:
        raise ValueError(f"need at least 5 points, got {angles.size}")
    if not (np.all(np.isfinite(angles)) and np.all(np.isfinite(values))):
        raise ValueError("angles and counts must be finite")
    span = float(angles.max() - angles.min())
    if span < 90.0 - 1e-9:
        raise ValueError(
            f"angles span {span:.3g}°, need at least half a period (90°)")
    if np.all(values == 0.0):
        raise ValueError("all counts are zero; fringe is undefined")

    angles_rad = np.radians(angles)
    # sin²(x - p) == cos²(x - (p + 90°)): fit the cos² form and shift back.
    mean = float(values.mean())
    fundamental = np.sum((values - mean) * np.exp(-2j * angles_rad))
    amplitude_0 = 4.0 * abs(fundamental) / angles.size
    phase_0 = -0.5 * float(np.angle(fundamental)) if amplitude_0 > 0.0 else 0.0
    offset_0 = mean - amplitude_0 / 2.0

    flat_scale = max(abs(mean), float(np.max(np.abs(values))), 1.0)
    if amplitude_0 < 1e-12 * flat_scale:
        # Flat data: the phase is unidentifiable; fit amplitude and offset only.
        sigma = np.sqrt(np.maximum(values, 1.0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", optimize.OptimizeWarning)
            popt, pcov = optimize.curve_fit(
                lambda x, amplitude, offset: _fringe_model(np.radians(x), amplitude,
                                                           offset, 0.0),
                angles, values, p0=[0.0, mean], sigma=sigma, absolute_sigma=True)
        amplitude, offset = popt
        phase = 0.0
        amplitude_var, offset_var = pcov[0, 0], pcov[1, 1]
        amplitude_offset_cov = pcov[0, 1]
        phase_sigma = math.inf
    else:
        popt = np.array([amplitude_0, offset_0, phase_0])
        pcov = None
        for _ in range(2):
            predicted = _fringe_model(angles_rad, *popt)
            sigma = np.sqrt(np.maximum(predicted, 1.0))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", optimize.OptimizeWarning)
                popt, pcov = optimize.curve_fit(
                    lambda x, amplitude, offset, phase: _fringe_model(
                        np.radians(x), amplitude, offset, phase),
                    angles, values, p0=popt, sigma=sigma, absolute_sigma=True,
                    maxfev=10000)
        amplitude, offset, phase = popt
        if amplitude < 0.0:
            # offset + A·cos²(x-p) with A<0 equals (offset+A) + |A|·cos²(x-p-90°).
            offset += amplitude
            amplitude = -amplitude
            phase += math.pi / 2.0
        phase = math.remainder(phase, math.pi)
        amplitude_var = float(pcov[0, 0])
        offset_var = float(pcov[1, 1])
        amplitude_offset_cov = float(pcov[0, 1])
        phase_sigma = math.sqrt(max(float(pcov[2, 2]), 0.0))

    denominator = amplitude + 2.0 * offset
    if denominator <= 0.0:
        raise ValueError("fitted fringe maximum is non-positive; cannot form V")
    visibility = amplitude / denominator
    # An exact (zero-residual) fit can leave the covariance unestimated;
    # report unknown uncertainties as infinite rather than NaN.
    if not all(map(math.isfinite, (amplitude_var, offset_var, amplitude_offset_cov))):
        amplitude_var = offset_var = math.inf
        amplitude_offset_cov = 0.0
    # Delta method on V = A/(A + 2B).
    dv_da = 2.0 * offset / denominator ** 2
    dv_db = -2.0 * amplitude / denominator ** 2
    visibility_var = (dv_da ** 2 * amplitude_var + dv_db ** 2 * offset_var
                      + 2.0 * dv_da * dv_db * amplitude_offset_cov)
    if math.isnan(visibility_var):
        visibility_var = math.inf
    visibility_sigma = math.sqrt(max(visibility_var, 0.0))
    visibility = min(max(visibility, 0.0), 1.0)

    if model == "sin2":
        phase = math.remainder(phase - math.pi / 2.0, math.pi)
    return FringeFit(
        visibility=float(visibility), visibility_sigma=float(visibility_sigma),
        amplitude=float(amplitude), amplitude_sigma=math.sqrt(max(amplitude_var, 0.0)),
        offset=float(offset), offset_sigma=math.sqrt(max(offset_var, 0.0)),
        phase_rad=float(phase), phase_sigma_rad=float(phase_sigma), model=model)


# --------------------------------------------------------------------------
# Two-qubit state reconstruction

def _basis_kets():
    labels = ("H", "V", "D", "R")
    return [(a + b, ARM_KETS[a], ARM_KETS[b]) for a in labels for b in labels]


TOMOGRAPHY_BASES: Tuple[str, ...] = tuple(label for label, _, _ in _basis_kets())

_PROJECTORS = np.stack([
    np.outer(np.kron(ket_a, ket_b), np.kron(ket_a, ket_b).conj())
    for _, ket_a, ket_b in _basis_kets()
])

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1j], [1j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
_PAULI_BASIS = np.stack([
    np.kron(_PAULI[a], _PAULI[b]) for a in "IXYZ" for b in "IXYZ"
])


@dataclass(frozen=True)
class TomographyResult:
    """Reconstructed two-photon polarization state and reconstruction metadata."""

    rho: np.ndarray
    fidelity: Optional[float]
    log_likelihood: float
    iterations: int
    converged: bool
    method: str


def _basis_probabilities(rho: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("kij,ji->k", _PROJECTORS, rho))


def _rho_from_params(params: np.ndarray) -> np.ndarray:
    lower = np.zeros((4, 4), dtype=complex)
    lower[np.diag_indices(4)] = params[:4]
    rows, cols = np.tril_indices(4, k=-1)
    lower[rows, cols] = params[4:10] + 1j * params[10:16]
    gram = lower.conj().T @ lower
    trace = np.real(np.trace(gram))
    if trace <= 0.0:
        return np.eye(4, dtype=complex) / 4.0
    return gram / trace


def _params_from_rho(rho: np.ndarray) -> np.ndarray:
    # Cholesky of a slightly regularized matrix; rho = L L† -> T = L†.
    values, vectors = np.linalg.eigh(rho)
    values = np.clip(values, 1e-9, None)
    regular = (vectors * values) @ vectors.conj().T
    regular /= np.real(np.trace(regular))
    lower = np.linalg.cholesky(regular).conj().T
    # _rho_from_params builds T†T from a lower triangle; transpose layout.
    lower = lower.conj().T
    params = np.zeros(16)
    params[:4] = np.real(np.diag(lower))
    rows, cols = np.tril_indices(4, k=-1)
    params[4:10] = np.real(lower[rows, cols])
    params[10:16] = np.imag(lower[rows, cols])
    return params


def _linear_inversion(probabilities: np.ndarray) -> np.ndarray:
    """Least-squares state from basis probabilities, projected onto valid states."""
    design = np.real(np.einsum("kij,lji->kl", _PROJECTORS, _PAULI_BASIS)) / 4.0
    coefficients, *_ = np.linalg.lstsq(design, probabilities, rcond=None)
    rho = np.tensordot(coefficients, _PAULI_BASIS, axes=(0, 0)) / 4.0
    rho = (rho + rho.conj().T) / 2.0
    values, vectors = np.linalg.eigh(rho)
    values = np.clip(values, 0.0, None)
    if values.sum() == 0.0:
        return np.eye(4, dtype=complex) / 4.0
    rho = (vectors * values) @ vectors.conj().T
    return rho / np.real(np.trace(rho))


def _poisson_log_likelihood(counts: np.ndarray, probabilities: np.ndarray) -> float:
    scale = counts.sum() / probabilities.sum()
    rates = np.clip(scale * probabilities, 1e-300, None)
    return float(np.sum(counts * np.log(rates) - rates - gammaln(counts + 1.0)))


def tomography(counts: Sequence[Union[CountsRecord, float]],
               target: Optional[np.ndarray] = None) -> TomographyResult:
    """Maximum-likelihood two-qubit state from 16 product-basis counts.

    ``counts`` follow :data:`TOMOGRAPHY_BASES` order — both arms cycle
    through {H, V, D, R}, second arm fastest.  The state is parameterized as
    T†T / Tr(T†T), which is positive by construction, and fitted by
    maximizing the Poisson likelihood with the overall count scale profiled
    out analytically.  Seeded from linear inversion projected onto valid
    states; if the optimizer fails to converge the better of the best
    iterate and the linear-inversion seed is returned with
    ``converged=False`` (method reports which).
    """
    if len(counts) != 16:
        raise ValueError(f"need exactly 16 basis counts, got {len(counts)}")
    values = np.array([
        float(c.coincidences) if isinstance(c, CountsRecord) else float(c)
        for c in counts])
    if np.any(values < 0.0) or not np.all(np.isfinite(values)):
        raise ValueError("counts must be finite and ≥ 0")
    total = values.sum()
    if total <= 0.0:
        raise ValueError("all tomography counts are zero")

    # Normalization from the computational-basis quadruple {HH, HV, VH, VV}:
    # indices 0 (HH), 1 (HV), 4 (VH), 5 (VV) in basis order.
    normalization = values[0] + values[1] + values[4] + values[5]
    if normalization <= 0.0:
        normalization = total / 4.0
    measured = values / normalization

    rho_linear = _linear_inversion(measured)
    initial = _params_from_rho(rho_linear)

    def objective(params: np.ndarray) -> float:
        probabilities = np.clip(_basis_probabilities(_rho_from_params(params)),
                                1e-300, None)
        return float(total * math.log(probabilities.sum())
                     - np.dot(values, np.log(probabilities)))

    result = optimize.minimize(
        objective, initial, method="L-BFGS-B",
        options={"maxiter": 10000, "maxfun": 100000, "gtol": 1e-8, "ftol": 1e-14})

    rho_mle = _rho_from_params(result.x)
    candidates = [("mle", rho_mle, bool(result.success))]
    if not result.success:
        candidates.append(("linear", rho_linear, False))
    scored = [
        (method, rho, ok, _poisson_log_likelihood(values, _basis_probabilities(rho)))
        for method, rho, ok in candidates]
    method, rho, converged, log_likelihood = max(scored, key=lambda item: item[3])

    rho = validate_density_matrix(rho)
    fidelity_value = fidelity(rho, target) if target is not None else None
    return TomographyResult(
        rho=rho, fidelity=fidelity_value, log_likelihood=log_likelihood,
        iterations=int(result.nit), converged=converged, method=method)
