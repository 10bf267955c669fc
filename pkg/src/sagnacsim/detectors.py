"""Gated detector model: click probabilities, dead time, throughput limits.

Detectors are armed once per trigger gate.  A click blanks the following
``dead_gates`` gates (partial dead-time overlap rounds up to whole gates);
the gate containing the click itself counts as live.  All rates are Hz and
all times seconds unless a unit suffix says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

__all__ = [
    "accidental_rate",
    "click_probability",
    "coincidence_to_accidental_ratio",
    "max_singles_rate",
    "max_trigger_rate",
    "multi_photon_click_probability",
    "steady_state_click_rate",
    "suppress_dead_time",
]


def _check_unit_interval(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def click_probability(photon_probability: float, efficiency: float,
                      dark_prob: float) -> float:
    """Probability an armed gate clicks: photon detection OR a dark count.

    ``photon_probability`` is the chance a signal photon reaches the
    detector within the gate; ``efficiency`` converts it to a detection;
    dark counts fire independently with ``dark_prob`` per gate.
    """
    _check_unit_interval("photon_probability", photon_probability)
    _check_unit_interval("efficiency", efficiency)
    _check_unit_interval("dark_prob", dark_prob)
    return 1.0 - (1.0 - photon_probability * efficiency) * (1.0 - dark_prob)


def multi_photon_click_probability(photon_counts: np.ndarray, efficiency: float,
                                   dark_prob: float) -> np.ndarray:
    """Per-gate click probability given an integer photon count in each gate.

    Each of the ``n`` photons is missed independently with probability
    ``1 - efficiency``; a dark count can still fire an empty gate.
    """
    _check_unit_interval("efficiency", efficiency)
    _check_unit_interval("dark_prob", dark_prob)
    counts = np.asarray(photon_counts)
    miss_all = np.power(1.0 - efficiency, counts)
    return 1.0 - miss_all * (1.0 - dark_prob)


def max_trigger_rate(input_rate_hz: float, singles_rate_hz: float,
                     dead_time_s: float, gate_period_s: float) -> float:
    """Effective trigger rate left after dead-time losses, floored at zero.

    Every registered single blanks ``dead_time / gate_period`` would-be
    triggers, so the usable gate rate is the input rate minus that loss.
    """
    if input_rate_hz < 0.0 or singles_rate_hz < 0.0:
        raise ValueError("rates must be ≥ 0")
    if gate_period_s <= 0.0:
        raise ValueError(f"gate_period must be > 0, got {gate_period_s!r}")
    if dead_time_s < 0.0:
        raise ValueError(f"dead_time must be ≥ 0, got {dead_time_s!r}")
    rate = input_rate_hz - singles_rate_hz * (dead_time_s / gate_period_s)
    return max(rate, 0.0)


def max_singles_rate(input_rate_hz: float, dead_time_s: float,
                     gate_period_s: float) -> float:
    """Saturation singles rate of a gated detector.

    At saturation every live gate clicks, and each click costs
    ``dead_time / gate_period`` gates, so the click rate approaches
    ``input_rate * gate_period / dead_time``.  With zero dead time nothing
    throttles the detector and the input rate itself is returned.
    """
    if input_rate_hz < 0.0:
        raise ValueError(f"input_rate must be ≥ 0, got {input_rate_hz!r}")
    if gate_period_s <= 0.0:
        raise ValueError(f"gate_period must be > 0, got {gate_period_s!r}")
    if dead_time_s < 0.0:
        raise ValueError(f"dead_time must be ≥ 0, got {dead_time_s!r}")
    if dead_time_s == 0.0:
        return input_rate_hz
    return input_rate_hz * gate_period_s / dead_time_s


def steady_state_click_rate(click_prob_per_gate: float, trigger_rate_hz: float,
                            dead_gates: int) -> float:
    """Long-run click rate when each click blanks ``dead_gates`` gates.

    Renewal argument: a cycle is one click plus its dead gates plus the
    geometric wait for the next click, giving rate p·f / (1 + p·D).
    """
    _check_unit_interval("click_prob_per_gate", click_prob_per_gate)
    if trigger_rate_hz < 0.0:
        raise ValueError(f"trigger_rate must be ≥ 0, got {trigger_rate_hz!r}")
    if dead_gates < 0:
        raise ValueError(f"dead_gates must be ≥ 0, got {dead_gates!r}")
    return (click_prob_per_gate * trigger_rate_hz
            / (1.0 + click_prob_per_gate * dead_gates))


def accidental_rate(singles_1_hz: float, singles_2_hz: float,
                    trigger_rate_hz: float) -> float:
    """Expected uncorrelated-coincidence rate from two independent singles rates."""
    if trigger_rate_hz <= 0.0:
        raise ValueError(f"trigger_rate must be > 0, got {trigger_rate_hz!r}")
    if singles_1_hz < 0.0 or singles_2_hz < 0.0:
        raise ValueError("singles rates must be ≥ 0")
    return singles_1_hz * singles_2_hz / trigger_rate_hz


def coincidence_to_accidental_ratio(coincidence_rate_hz: float,
                                    accidental_rate_hz: float) -> float:
    """Coincidence rate over accidental rate; infinite when accidentals vanish."""
    if coincidence_rate_hz < 0.0 or accidental_rate_hz < 0.0:
        raise ValueError("rates must be ≥ 0")
    if accidental_rate_hz == 0.0:
        return math.inf
    return coincidence_rate_hz / accidental_rate_hz


def suppress_dead_time(candidate_indices: np.ndarray, dead_gates: int,
                       n_gates: int) -> Tuple[np.ndarray, int]:
    """Greedy dead-time filter over sorted candidate click gate indices.

    Accepts the earliest candidate, blanks the ``dead_gates`` gates after it,
    and repeats.  Returns the accepted indices and the number of live gates
    (gates in ``[0, n_gates)`` during which the detector was armed; dead
    spans are truncated at the end of the block).
    """
    candidates = np.asarray(candidate_indices, dtype=np.int64)
    if candidates.ndim != 1:
        raise ValueError("candidate_indices must be one-dimensional")
    if n_gates < 0:
        raise ValueError(f"n_gates must be ≥ 0, got {n_gates!r}")
    if dead_gates < 0:
        raise ValueError(f"dead_gates must be ≥ 0, got {dead_gates!r}")
    if dead_gates == 0 or candidates.size == 0:
        return candidates, n_gates

    accepted = []
    blanked = 0
    next_live = 0
    last_index = n_gates - 1
    for gate in candidates.tolist():
        if gate >= next_live:
            accepted.append(gate)
            blanked += min(dead_gates, last_index - gate)
            next_live = gate + dead_gates + 1
    return np.asarray(accepted, dtype=np.int64), n_gates - blanked
