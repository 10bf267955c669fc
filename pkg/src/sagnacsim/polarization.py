"""Exact two-qubit polarization algebra for photon-pair experiments.

Two-photon amplitudes are ordered ``(HH, HV, VH, VV)``: the Kronecker product
of the arm-1 and arm-2 single-photon ``(H, V)`` bases.  All angles are in
radians, measured counterclockwise from the horizontal (H) axis; callers
working in degrees convert at the boundary.

States may be passed either as a length-4 complex ket or as a 4x4 density
matrix; every measurement helper accepts both.  All functions are pure and
safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "KET_TOLERANCE",
    "AnalyzerSetting",
    "WaveplateSetting",
    "H_KET",
    "V_KET",
    "ARM_KETS",
    "arm_measurement_operator",
    "arm_probability",
    "as_density_matrix",
    "bell_state",
    "chsh_value",
    "coincidence_probability",
    "fidelity",
    "half_wave",
    "ideal_correlation",
    "joint_probability",
    "jones_operator",
    "kets_equal_up_to_phase",
    "normalized",
    "outcome_probabilities",
    "polarizer_projector",
    "quarter_wave",
    "reduced_density_matrix",
    "retarder",
    "rotation",
    "validate_density_matrix",
    "validate_ket",
    "werner_state",
]

#: Tolerance for ket normalization checks.
KET_TOLERANCE = 1e-12
#: Tolerances for density-matrix validation.
DM_HERMITIAN_TOLERANCE = 1e-10
DM_TRACE_TOLERANCE = 1e-10
DM_EIGENVALUE_FLOOR = -1e-8

H_KET = np.array([1.0, 0.0], dtype=complex)
V_KET = np.array([0.0, 1.0], dtype=complex)

#: Single-arm analysis kets used for tomography: horizontal, vertical,
#: diagonal (+45 deg), antidiagonal (-45 deg), right circular, left circular.
ARM_KETS = {
    "H": H_KET,
    "V": V_KET,
    "D": np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0),
    "A": np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0),
    "R": np.array([1.0, -1.0j], dtype=complex) / math.sqrt(2.0),
    "L": np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2.0),
}

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

StateLike = Union[np.ndarray, Sequence[complex]]


def normalized(amplitudes: StateLike) -> np.ndarray:
    """Return a unit-norm copy of a two-photon amplitude vector."""
    ket = np.asarray(amplitudes, dtype=complex).reshape(4)
    norm = np.linalg.norm(ket)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("cannot normalize a zero or non-finite amplitude vector")
    return ket / norm


def validate_ket(state: StateLike) -> np.ndarray:
    """Check shape and unit norm of a two-photon ket; return it as ndarray."""
    ket = np.asarray(state, dtype=complex)
    if ket.shape != (4,):
        raise ValueError(f"two-photon ket must have shape (4,), got {ket.shape}")
    if not np.all(np.isfinite(ket.view(float))):
        raise ValueError("ket amplitudes must be finite")
    norm_sq = float(np.vdot(ket, ket).real)
    if abs(norm_sq - 1.0) > 1e-9:
        raise ValueError(f"ket must be normalized: sum |a_i|^2 = {norm_sq!r}")
    return ket


def validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Check Hermiticity, unit trace, and positivity of a 4x4 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"density matrix must have shape (4, 4), got {rho.shape}")
    if not np.all(np.isfinite(rho.view(float))):
        raise ValueError("density matrix entries must be finite")
    if np.max(np.abs(rho - rho.conj().T)) > DM_HERMITIAN_TOLERANCE:
        raise ValueError("density matrix must be Hermitian within 1e-10")
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > DM_TRACE_TOLERANCE:
        raise ValueError(f"density matrix trace must be 1 within 1e-10, got {trace!r}")
    eigenvalues = np.linalg.eigvalsh(rho)
    if float(eigenvalues.min()) < DM_EIGENVALUE_FLOOR:
        raise ValueError(
            f"density matrix must be positive semidefinite, min eigenvalue {eigenvalues.min():.3e}"
        )
    return rho


def as_density_matrix(state: StateLike) -> np.ndarray:
    """Coerce a ket or density matrix to a validated 4x4 density matrix."""
    array = np.asarray(state, dtype=complex)
    if array.shape == (4,):
        ket = validate_ket(array)
        return np.outer(ket, ket.conj())
    return validate_density_matrix(array)


def bell_state(kind: str, phase: float = 0.0) -> np.ndarray:
    """Return a maximally entangled two-photon ket.

    ``kind`` selects the branch: ``"phi"`` gives ``(|HH> + e^{i*phase}|VV>)/sqrt(2)``
    and ``"psi"`` gives ``(|HV> + e^{i*phase}|VH>)/sqrt(2)``.  ``phase`` = 0 or pi
    produces the four standard maximally entangled states.
    """
    if not (isinstance(phase, (int, float)) and math.isfinite(phase)):
        raise ValueError(f"phase must be a finite real number, got {phase!r}")
    factor = complex(math.cos(phase), math.sin(phase))
    label = kind.lower()
    if label in ("phi", "ph"):
        ket = np.array([1.0, 0.0, 0.0, factor], dtype=complex)
    elif label in ("psi", "ps"):
        ket = np.array([0.0, 1.0, factor, 0.0], dtype=complex)
    else:
        raise ValueError(f"kind must be 'phi' or 'psi', got {kind!r}")
    return ket / math.sqrt(2.0)


def rotation(angle: float) -> np.ndarray:
    """Real rotation of the polarization plane by ``angle`` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def retarder(retardance: float, fast_axis_angle: float) -> np.ndarray:
    """Jones matrix of a linear retarder.

    Convention: ``R(angle) @ diag(1, e^{i*retardance}) @ R(-angle)`` with the
    fast axis along ``fast_axis_angle``.  Observable probabilities are
    independent of the overall-phase convention chosen here.
    """
    rot = rotation(fast_axis_angle)
    core = np.array(
        [[1.0, 0.0], [0.0, complex(math.cos(retardance), math.sin(retardance))]],
        dtype=complex,
    )
    return rot @ core @ rot.conj().T


def half_wave(fast_axis_angle: float) -> np.ndarray:
    """Half-wave plate (retardance pi) at the given fast-axis angle."""
    return retarder(math.pi, fast_axis_angle)


def quarter_wave(fast_axis_angle: float) -> np.ndarray:
    """Quarter-wave plate (retardance pi/2) at the given fast-axis angle."""
    return retarder(math.pi / 2.0, fast_axis_angle)


@dataclass(frozen=True)
class WaveplateSetting:
    """A linear retarder setting: retardance and fast-axis angle, in radians."""

    retardance: float
    fast_axis_angle: float

    def operator(self) -> np.ndarray:
        return retarder(self.retardance, self.fast_axis_angle)


def jones_operator(setting: WaveplateSetting) -> np.ndarray:
    """Unitary Jones matrix induced by a waveplate setting."""
    return setting.operator()


def polarizer_projector(theta: float) -> np.ndarray:
    """Rank-1 projector onto linear polarization at angle ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    ket = np.array([c, s], dtype=complex)
    return np.outer(ket, ket.conj())


def arm_measurement_operator(
    angle: Optional[float],
    plates: Tuple[WaveplateSetting, ...] = (),
) -> np.ndarray:
    """Effective single-arm measurement operator.

    Light traverses the waveplates in listed order and then meets a linear
    polarizer at ``angle``; the returned operator is the Heisenberg-picture
    projector ``U^dag P U``.  ``angle=None`` models an open port (no polarizer):
    the operator is the identity (every photon reaches the detector).
    """
    if angle is None:
        operator = np.eye(2, dtype=complex)
    else:
        operator = polarizer_projector(angle)
    for plate in reversed(plates):
        jones = plate.operator()
        operator = jones.conj().T @ operator @ jones
    return operator


@dataclass(frozen=True)
class AnalyzerSetting:
    """Per-arm analyzer configuration for one measurement interval.

    ``angle_1``/``angle_2`` are linear-polarizer angles in radians; ``None``
    leaves that arm unanalyzed (open port).  Optional waveplate stacks are
    applied before the polarizer, in listed order.
    """

    angle_1: Optional[float]
    angle_2: Optional[float]
    plates_1: Tuple[WaveplateSetting, ...] = ()
    plates_2: Tuple[WaveplateSetting, ...] = ()
    label: str = ""

    def operator_1(self) -> np.ndarray:
        return arm_measurement_operator(self.angle_1, self.plates_1)

    def operator_2(self) -> np.ndarray:
        return arm_measurement_operator(self.angle_2, self.plates_2)

    def orthogonal(self, arm: int) -> "AnalyzerSetting":
        """Setting with one arm's polarizer rotated by 90 degrees."""
        if arm == 1:
            if self.angle_1 is None:
                raise ValueError("cannot rotate an open port")
            return AnalyzerSetting(
                self.angle_1 + math.pi / 2.0, self.angle_2, self.plates_1, self.plates_2
            )
        if arm == 2:
            if self.angle_2 is None:
                raise ValueError("cannot rotate an open port")
            return AnalyzerSetting(
                self.angle_1, self.angle_2 + math.pi / 2.0, self.plates_1, self.plates_2
            )
        raise ValueError(f"arm must be 1 or 2, got {arm!r}")


def _expectation(state: StateLike, operator: np.ndarray) -> float:
    array = np.asarray(state, dtype=complex)
    if array.shape == (4,):
        ket = validate_ket(array)
        value = complex(np.vdot(ket, operator @ ket))
    else:
        rho = validate_density_matrix(array)
        value = complex(np.trace(rho @ operator))
    probability = value.real
    # Clip sub-tolerance negative round-off; anything larger is a real error.
    if probability < 0.0:
        if probability < -1e-9:
            raise ValueError(f"probability evaluated to {probability!r}")
        probability = 0.0
    return float(probability)


def joint_probability(state: StateLike, setting: AnalyzerSetting) -> float:
    """Probability that one pair yields a photon past both analyzers."""
    operator = np.kron(setting.operator_1(), setting.operator_2())
    return _expectation(state, operator)


def arm_probability(state: StateLike, setting: AnalyzerSetting, arm: int) -> float:
    """Probability that one pair yields a photon past the analyzer of one arm."""
    identity = np.eye(2, dtype=complex)
    if arm == 1:
        operator = np.kron(setting.operator_1(), identity)
    elif arm == 2:
        operator = np.kron(identity, setting.operator_2())
    else:
        raise ValueError(f"arm must be 1 or 2, got {arm!r}")
    return _expectation(state, operator)


def outcome_probabilities(
    state: StateLike, setting: AnalyzerSetting
) -> Tuple[float, float, float, float]:
    """Per-pair probabilities of the four analyzer outcomes.

    Returns ``(p_both, p_only_1, p_only_2, p_neither)``: the pair delivers a
    photon past both analyzers, past arm 1 only, past arm 2 only, or neither.
    The four values sum to 1.
    """
    p_both = joint_probability(state, setting)
    p_arm1 = arm_probability(state, setting, 1)
    p_arm2 = arm_probability(state, setting, 2)
    p_only_1 = max(p_arm1 - p_both, 0.0)
    p_only_2 = max(p_arm2 - p_both, 0.0)
    p_neither = max(1.0 - p_both - p_only_1 - p_only_2, 0.0)
    return p_both, p_only_1, p_only_2, p_neither


def coincidence_probability(state: StateLike, theta_1: float, theta_2: float) -> float:
    """Probability of a joint transmission through polarizers at the two angles.

    For maximally entangled states this reproduces the standard closed forms:
    ``cos^2(theta_1 -+ theta_2)/2`` for the phi-type states and
    ``sin^2(theta_1 +- theta_2)/2`` for the psi-type states.
    """
    return joint_probability(state, AnalyzerSetting(theta_1, theta_2))


def ideal_correlation(state: StateLike, theta_1: float, theta_2: float) -> float:
    """Polarization correlation coefficient from the four analytic coincidences.

    Combines the coincidence probabilities at ``(theta_1, theta_2)`` and the
    three settings with either polarizer rotated by 90 degrees.  For the
    phi-plus state this equals ``cos(2*(theta_1 - theta_2))``.
    """
    quarter = math.pi / 2.0
    p_pp = coincidence_probability(state, theta_1, theta_2)
    p_po = coincidence_probability(state, theta_1, theta_2 + quarter)
    p_op = coincidence_probability(state, theta_1 + quarter, theta_2)
    p_oo = coincidence_probability(state, theta_1 + quarter, theta_2 + quarter)
    total = p_pp + p_po + p_op + p_oo
    if total <= 0.0:
        raise ValueError("total coincidence probability is zero")
    value = (p_pp - p_po - p_op + p_oo) / total
    return float(min(1.0, max(-1.0, value)))


def chsh_value(
    state: StateLike,
    angles: Tuple[float, float, float, float] = (
        0.0,
        math.pi / 4.0,
        math.pi / 8.0,
        3.0 * math.pi / 8.0,
    ),
) -> float:
    """Bell-test statistic for analyzer angles ``(a, a', b, b')``.

    Returns ``|E(a,b) - E(a,b') + E(a',b) + E(a',b')|``.  The default angles
    are the standard optimal settings, where a maximally entangled state
    reaches ``2*sqrt(2)``.
    """
    a, a_prime, b, b_prime = angles
    value = (
        ideal_correlation(state, a, b)
        - ideal_correlation(state, a, b_prime)
        + ideal_correlation(state, a_prime, b)
        + ideal_correlation(state, a_prime, b_prime)
    )
    return abs(value)


def fidelity(rho: StateLike, target: StateLike) -> float:
    """Overlap ``<target|rho|target>`` of a state with a pure target ket."""
    target_ket = validate_ket(np.asarray(target, dtype=complex))
    density = as_density_matrix(rho)
    value = complex(np.vdot(target_ket, density @ target_ket)).real
    return float(min(1.0, max(0.0, value)))


def reduced_density_matrix(state: StateLike, arm: int) -> np.ndarray:
    """Partial trace of a two-photon state onto one arm."""
    rho = as_density_matrix(state)
    tensor = rho.reshape(2, 2, 2, 2)
    if arm == 1:
        return np.einsum("ikjk->ij", tensor)
    if arm == 2:
        return np.einsum("kikj->ij", tensor)
    raise ValueError(f"arm must be 1 or 2, got {arm!r}")


def werner_state(p: float) -> np.ndarray:
    """Mixture of the phi-plus projector (weight ``p``) with white noise."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {p!r}")
    phi = bell_state("phi", 0.0)
    return p * np.outer(phi, phi.conj()) + (1.0 - p) * np.eye(4, dtype=complex) / 4.0


def kets_equal_up_to_phase(a: StateLike, b: StateLike, tol: float = 1e-10) -> bool:
    """True when two kets describe the same physical state."""
    ket_a = validate_ket(np.asarray(a, dtype=complex))
    ket_b = validate_ket(np.asarray(b, dtype=complex))
    return abs(abs(complex(np.vdot(ket_a, ket_b))) - 1.0) <= tol
