"""Entangled-pair source model.

A bidirectionally pumped loop interferometer emits photon pairs in a
superposition of two pair-creation amplitudes.  One photon leaves through a
fixed arm; the other passes a half-wave and a quarter-wave plate that select
which maximally entangled state the superposition realizes.  The relative
phase between the two amplitudes is set by the pump focus position along the
crystal; the amplitude balance and two noise knobs (coherence decay of the
cross terms, incoherent polarization crosstalk) complete the model.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .config import LoopSettings, SourceConfig
from .polarization import (
    H_KET,
    V_KET,
    half_wave,
    quarter_wave,
    validate_density_matrix,
    validate_ket,
)

__all__ = [
    "amplitude_pair",
    "emitted_density_matrix",
    "pair_mean_per_pulse",
    "phase_of_position",
    "prepare_state",
]


def phase_of_position(source: SourceConfig, position_mm: float) -> float:
    """Relative phase (radians) between the two pair amplitudes at a focus position.

    The phase is linear in the position with one full turn per
    ``phase_period_mm``, anchored so that ``reference_position_mm`` gives
    ``phase_offset_rad`` exactly.
    """
    if not math.isfinite(position_mm):
        raise ValueError(f"position must be finite, got {position_mm!r}")
    return source.phase_offset_rad + 2.0 * math.pi * (
        position_mm - source.reference_position_mm) / source.phase_period_mm


def pair_mean_per_pulse(source: SourceConfig, power_mw: float) -> float:
    """Mean generated pairs per pump pulse at the given average pump power.

    The mean scales linearly with power from its value at the reference
    power; two-photon emission from a quadratic process is linear in pump
    power for a fixed repetition rate.
    """
    if power_mw < 0.0:
        raise ValueError(f"power must be ≥ 0, got {power_mw!r}")
    return source.mean_pairs_per_pulse * power_mw / source.reference_power_mw


def amplitude_pair(source: SourceConfig) -> tuple:
    """Real amplitudes (a, b) of the two pair-creation terms, a² + b² = 1."""
    a = math.sqrt((1.0 + source.imbalance) / 2.0)
    b = math.sqrt((1.0 - source.imbalance) / 2.0)
    return a, b


def _output_arm_vectors(loop: LoopSettings) -> tuple:
    """Polarization kets of the movable arm for the two pair amplitudes.

    The arm's quarter-wave plate at zero orientation is taken as the phase
    reference: each output vector is rephased so that, when the quarter-wave
    plate is at zero, its dominant component is real and positive.  With both
    plates at zero the arm vectors are then exactly |H> and |V>, and plate
    rotations move between the four maximally entangled states without
    extraneous global phases.
    """
    plate_operator = half_wave(loop.half_wave_rad) @ quarter_wave(loop.quarter_wave_rad)
    reference = half_wave(loop.half_wave_rad) @ quarter_wave(0.0)
    vectors = []
    for column in (0, 1):
        vector = plate_operator[:, column].copy()
        anchor = reference[:, column]
        pivot = int(np.argmax(np.abs(anchor)))
        vector *= np.exp(-1j * np.angle(anchor[pivot]))
        vectors.append(vector / np.linalg.norm(vector))
    return vectors[0], vectors[1]


def prepare_state(source: SourceConfig, loop: LoopSettings,
                  position_mm: Optional[float] = None) -> np.ndarray:
    """Pure two-photon polarization ket emitted by a noiseless source.

    The state is ``a |H>|vH> + b e^{i phi} |V>|vV>`` where (a, b) encode the
    amplitude imbalance, phi is the position-dependent phase, and vH, vV are
    the movable-arm vectors produced by the output waveplates.  With default
    settings this is the standard correlated Bell state.
    """
    if position_mm is None:
        position_mm = source.crystal_position_mm
    phi = phase_of_position(source, position_mm)
    a, b = amplitude_pair(source)
    v_h, v_v = _output_arm_vectors(loop)
    ket = a * np.kron(H_KET, v_h) + b * np.exp(1j * phi) * np.kron(V_KET, v_v)
    return validate_ket(ket)


def emitted_density_matrix(source: SourceConfig, loop: LoopSettings,
                           position_mm: Optional[float] = None) -> np.ndarray:
    """Two-photon polarization density matrix including source noise.

    ``coherence`` scales the off-diagonal (cross) terms between the two pair
    amplitudes: 1 keeps the pure superposition, 0 leaves a classical mixture.
    ``crosstalk`` moves that fraction of the population into the
    polarization-swapped product states (first photon's polarization paired
    with the other amplitude's arm vector), modeling imperfect splitting in
    the loop.  With coherence 1 and crosstalk 0 this equals the projector
    onto :func:`prepare_state`.
    """
    if position_mm is None:
        position_mm = source.crystal_position_mm
    phi = phase_of_position(source, position_mm)
    a, b = amplitude_pair(source)
    v_h, v_v = _output_arm_vectors(loop)

    k_1 = np.kron(H_KET, v_h)
    k_2 = np.kron(V_KET, v_v)
    swap_1 = np.kron(H_KET, v_v)
    swap_2 = np.kron(V_KET, v_h)

    c_1 = a
    c_2 = b * np.exp(1j * phi)
    cross = source.coherence * c_1 * np.conj(c_2)

    main = (a * a * np.outer(k_1, k_1.conj())
            + b * b * np.outer(k_2, k_2.conj())
            + cross * np.outer(k_1, k_2.conj())
            + np.conj(cross) * np.outer(k_2, k_1.conj()))
    swapped = (a * a * np.outer(swap_1, swap_1.conj())
               + b * b * np.outer(swap_2, swap_2.conj()))
    rho = (1.0 - source.crosstalk) * main + source.crosstalk * swapped
    return validate_density_matrix(rho)
