"""Pulse-train Monte Carlo harness composing source, state, and detectors.

Each schedule entry holds one analyzer setting for a block of trigger gates.
Gates are simulated in batches; every batch draws from its own counter-based
random substream keyed by (seed, entry index, batch index), so results are
bit-identical no matter how batches are distributed over workers, and merging
batch totals is associative.

Sampling per batch is exact and sparse:

- the number of pairs in each gate is Poisson (or Bose-Einstein "thermal"),
- pairs in occupied gates are routed multinomially into (both pass / only
  arm 1 / only arm 2 / neither) using the state's outcome probabilities,
- each arm clicks with probability 1 - (1-eta)^(photons) aggregated with an
  independent dark-count process (Poissonized so per-gate dark clicks are
  exactly Bernoulli while only realized events are materialized),
- a click blanks the following dead-time gates of its own arm; dead windows
  do not straddle batch boundaries (the truncation bias is O(dead/batch)).

Closed-form mode replaces sampling with expected counts in which the
correlated-pair term enters at first order in the pair mean, so subtracting
the standard accidental estimate recovers the state's Born probabilities
exactly; use it for fast oracle runs, not throughput studies (it ignores
dead time).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .analysis import CountsRecord
from .config import ExperimentPlan, ScheduleEntry
from .detectors import multi_photon_click_probability, suppress_dead_time
from .polarization import AnalyzerSetting, outcome_probabilities
from .source import emitted_density_matrix, pair_mean_per_pulse

__all__ = [
    "SweepResult",
    "run_chsh",
    "run_pulse_train",
    "sweep_crystal_position",
    "sweep_polarizer",
    "sweep_power",
]

_STREAMS_PER_ENTRY = 2 ** 24


@dataclass(frozen=True)
class SweepResult:
    """One record per point of a strictly monotone sweep axis."""

    axis_name: str
    axis_unit: str
    axis_values: Tuple[float, ...]
    records: Tuple[CountsRecord, ...]

    def __post_init__(self) -> None:
        if len(self.axis_values) != len(self.records):
            raise ValueError("axis_values and records must have equal length")
        if len(self.axis_values) >= 2:
            steps = np.diff(np.asarray(self.axis_values, dtype=float))
            if not (np.all(steps > 0.0) or np.all(steps < 0.0)):
                raise ValueError(f"{self.axis_name} axis must be strictly monotone")


def _batch_counts(task: tuple) -> Tuple[int, int, int, int, int]:
    """Simulate one batch of gates; returns (s1, s2, coincidences, live1, live2)."""
    (seed, entry_index, batch_index, batch_size, mu, p_both, p_only_1, p_only_2,
     eta_1, eta_2, dark_1, dark_2, dead_1, dead_2, statistics) = task
    stream = entry_index * _STREAMS_PER_ENTRY + batch_index
    rng = np.random.Generator(np.random.Philox(key=[seed, stream]))

    if statistics == "thermal":
        pairs = rng.geometric(1.0 / (1.0 + mu), batch_size) - 1
    else:
        pairs = rng.poisson(mu, batch_size)
    occupied = np.nonzero(pairs)[0]
    n_occupied = pairs[occupied]

    # Multinomial routing of the pairs in occupied gates via a binomial chain.
    m_both = rng.binomial(n_occupied, min(max(p_both, 0.0), 1.0))
    rest = n_occupied - m_both
    denom = 1.0 - p_both
    frac = p_only_1 / denom if denom > 1e-15 else 0.0
    m_only_1 = rng.binomial(rest, min(max(frac, 0.0), 1.0))
    rest = rest - m_only_1
    denom = 1.0 - p_both - p_only_1
    frac = p_only_2 / denom if denom > 1e-15 else 0.0
    m_only_2 = rng.binomial(rest, min(max(frac, 0.0), 1.0))

    masks = []
    lives = []
    for arm_counts, eta, dark, dead in (
            (m_both + m_only_1, eta_1, dark_1, dead_1),
            (m_both + m_only_2, eta_2, dark_2, dead_2)):
        click_mask = np.zeros(batch_size, dtype=bool)
        if occupied.size:
            signal_prob = multi_photon_click_probability(arm_counts, eta, 0.0)
            hits = rng.random(occupied.size) < signal_prob
            click_mask[occupied[hits]] = True
        # Dark clicks: a Poisson number of events at uniform gates gives an
        # exact independent Bernoulli(dark) click per gate.
        if dark > 0.0:
            n_dark = rng.poisson(-batch_size * math.log1p(-dark))
            if n_dark:
                click_mask[rng.integers(0, batch_size, n_dark)] = True
        if dead > 0:
            accepted, live = suppress_dead_time(np.nonzero(click_mask)[0],
                                                dead, batch_size)
            click_mask = np.zeros(batch_size, dtype=bool)
            click_mask[accepted] = True
        else:
            live = batch_size
        masks.append(click_mask)
        lives.append(live)

    coincidences = int(np.count_nonzero(masks[0] & masks[1]))
    return (int(np.count_nonzero(masks[0])), int(np.count_nonzero(masks[1])),
            coincidences, lives[0], lives[1])


def _analytic_record(entry: ScheduleEntry, probabilities: Tuple[float, ...],
                     mu: float, plan: ExperimentPlan,
                     axis_value: Optional[float]) -> CountsRecord:
    """Expected counts, correlated-pair term linearized in the pair mean.

    Singles use the exact per-gate click probability (Poisson-thinned photons
    plus darks).  The coincidence expectation is the product of the two
    singles probabilities — reproduced exactly by the standard accidental
    estimate — plus ``mu·eta1·eta2·p_both``, so accidental subtraction
    recovers Born probabilities exactly.  Dead time is not modeled here.
    """
    p_both, p_only_1, p_only_2, _ = probabilities
    p_1 = p_both + p_only_1
    p_2 = p_both + p_only_2
    eta_1 = plan.detector_1.total_efficiency
    eta_2 = plan.detector_2.total_efficiency
    dark_1 = plan.detector_1.dark_prob_per_gate
    dark_2 = plan.detector_2.dark_prob_per_gate
    gates = float(entry.pulses)
    prob_1 = 1.0 - math.exp(-mu * eta_1 * p_1) * (1.0 - dark_1)
    prob_2 = 1.0 - math.exp(-mu * eta_2 * p_2) * (1.0 - dark_2)
    coincidence_prob = prob_1 * prob_2 + mu * eta_1 * eta_2 * p_both
    return CountsRecord(
        label=entry.setting.label,
        angle_1_deg=_degrees_or_none(entry.setting.angle_1),
        angle_2_deg=_degrees_or_none(entry.setting.angle_2),
        gates=gates,
        singles_1=gates * prob_1,
        singles_2=gates * prob_2,
        coincidences=gates * coincidence_prob,
        live_gates_1=gates,
        live_gates_2=gates,
        axis_value=axis_value,
    )


def _degrees_or_none(angle_rad: Optional[float]) -> Optional[float]:
    return None if angle_rad is None else math.degrees(angle_rad)


def run_pulse_train(plan: ExperimentPlan, state: np.ndarray,
                    analytic: bool = False, workers: int = 1,
                    entry_offset: int = 0,
                    axis_values: Optional[Sequence[Optional[float]]] = None,
                    ) -> Tuple[CountsRecord, ...]:
    """Simulate every schedule entry of the plan against one prepared state.

    Returns one :class:`CountsRecord` per entry.  Deterministic for a given
    (seed, batch_size, entry order): batch substreams are keyed by the global
    entry index (``entry_offset`` + position; sweeps pass distinct offsets so
    their points are statistically independent) and the batch index, making
    the result independent of ``workers``.
    """
    if not plan.schedule:
        raise ValueError("plan has an empty schedule")
    if workers < 1:
        raise ValueError(f"workers must be ≥ 1, got {workers!r}")
    if axis_values is None:
        axis_values = [None] * len(plan.schedule)
    if len(axis_values) != len(plan.schedule):
        raise ValueError("axis_values must match the schedule length")

    mu = pair_mean_per_pulse(plan.source, plan.run.power_mw)
    entry_probabilities = [outcome_probabilities(state, entry.setting)
                           for entry in plan.schedule]

    if analytic:
        return tuple(
            _analytic_record(entry, probs, mu, plan, axis)
            for entry, probs, axis in zip(plan.schedule, entry_probabilities,
                                          axis_values))

    batch_size = plan.run.batch_size
    tasks = []
    spans = []
    for position, (entry, probs) in enumerate(zip(plan.schedule,
                                                  entry_probabilities)):
        entry_index = entry_offset + position
        n_batches = -(-entry.pulses // batch_size)
        if n_batches > _STREAMS_PER_ENTRY:
            raise ValueError(
                f"schedule[{position}]: {n_batches} batches exceeds the "
                f"{_STREAMS_PER_ENTRY} substreams reserved per entry; "
                "increase batch_size")
        start = len(tasks)
        for batch_index in range(n_batches):
            remaining = entry.pulses - batch_index * batch_size
            tasks.append((
                plan.run.seed, entry_index, batch_index,
                min(batch_size, remaining), mu, *probs[:3],
                plan.detector_1.total_efficiency, plan.detector_2.total_efficiency,
                plan.detector_1.dark_prob_per_gate, plan.detector_2.dark_prob_per_gate,
                plan.detector_1.dead_gates, plan.detector_2.dead_gates,
                plan.run.pair_statistics))
        spans.append((start, len(tasks)))

    if workers == 1:
        outcomes = [_batch_counts(task) for task in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_batch_counts, tasks, chunksize=chunk))

    records = []
    for (entry, axis), (start, stop) in zip(zip(plan.schedule, axis_values), spans):
        totals = [sum(outcome[i] for outcome in outcomes[start:stop])
                  for i in range(5)]
        records.append(CountsRecord(
            label=entry.setting.label,
            angle_1_deg=_degrees_or_none(entry.setting.angle_1),
            angle_2_deg=_degrees_or_none(entry.setting.angle_2),
            gates=float(entry.pulses),
            singles_1=float(totals[0]), singles_2=float(totals[1]),
            coincidences=float(totals[2]),
            live_gates_1=float(totals[3]), live_gates_2=float(totals[4]),
            axis_value=axis,
        ))
    return tuple(records)


def _entries_for_angles(pairs: Sequence[Tuple[Optional[float], Optional[float]]],
                        pulses: int,
                        labels: Optional[Sequence[str]] = None,
                        ) -> Tuple[ScheduleEntry, ...]:
    entries = []
    for index, (angle_1_deg, angle_2_deg) in enumerate(pairs):
        label = labels[index] if labels else (
            f"a1={angle_1_deg:g}deg,a2={angle_2_deg:g}deg")
        setting = AnalyzerSetting(
            angle_1=None if angle_1_deg is None else math.radians(angle_1_deg),
            angle_2=None if angle_2_deg is None else math.radians(angle_2_deg),
            label=label)
        entries.append(ScheduleEntry(setting=setting, pulses=pulses))
    return tuple(entries)


def sweep_polarizer(plan: ExperimentPlan, state: np.ndarray, angle_1_deg: float,
                    angle_2_list_deg: Sequence[float], analytic: bool = False,
                    workers: int = 1, entry_offset: int = 0) -> SweepResult:
    """Coincidence fringe: arm-1 analyzer fixed, arm-2 analyzer swept (degrees)."""
    angles = [float(a) for a in angle_2_list_deg]
    entries = _entries_for_angles([(angle_1_deg, a) for a in angles],
                                  plan.run.pulses_per_setting)
    records = run_pulse_train(plan.with_schedule(entries), state,
                              analytic=analytic, workers=workers,
                              entry_offset=entry_offset, axis_values=angles)
    return SweepResult(axis_name="analyzer_2_angle", axis_unit="deg",
                       axis_values=tuple(angles), records=records)


def sweep_power(plan: ExperimentPlan, state: np.ndarray,
                powers_mw: Sequence[float], analytic: bool = False,
                workers: int = 1, entry_offset: int = 0) -> SweepResult:
    """Singles/coincidence scaling versus average pump power (analyzers open)."""
    powers = [float(p) for p in powers_mw]
    if any(p < 0.0 for p in powers):
        raise ValueError("powers must be ≥ 0")
    setting = AnalyzerSetting(angle_1=None, angle_2=None, label="open")
    entry = ScheduleEntry(setting=setting, pulses=plan.run.pulses_per_setting)
    records = []
    for index, power in enumerate(powers):
        powered = replace(plan, run=replace(plan.run, power_mw=power),
                          schedule=(entry,))
        records.extend(run_pulse_train(
            powered, state, analytic=analytic, workers=workers,
            entry_offset=entry_offset + index, axis_values=[power]))
    return SweepResult(axis_name="pump_power", axis_unit="mW",
                       axis_values=tuple(powers), records=tuple(records))


def sweep_crystal_position(plan: ExperimentPlan, positions_mm: Sequence[float],
                           angle_1_deg: float = 45.0, angle_2_deg: float = 45.0,
                           analytic: bool = False, workers: int = 1,
                           entry_offset: int = 0) -> SweepResult:
    """Coincidence fringe versus pump-focus position with both analyzers diagonal.

    The emitted state (including configured source noise) is re-derived at
    every position, so the fringe maps the position-dependent phase.
    """
    positions = [float(z) for z in positions_mm]
    entries = _entries_for_angles(
        [(angle_1_deg, angle_2_deg)] * len(positions),
        plan.run.pulses_per_setting,
        labels=[f"z={z:g}mm" for z in positions])
    records = []
    for index, (position, entry) in enumerate(zip(positions, entries)):
        state = emitted_density_matrix(plan.source, plan.loop, position_mm=position)
        records.extend(run_pulse_train(
            plan.with_schedule((entry,)), state, analytic=analytic,
            workers=workers, entry_offset=entry_offset + index,
            axis_values=[position]))
    return SweepResult(axis_name="crystal_position", axis_unit="mm",
                       axis_values=tuple(positions), records=tuple(records))


def run_chsh(plan: ExperimentPlan, state: np.ndarray,
             angles_deg: Tuple[float, float, float, float] = (0.0, 45.0, 22.5, 67.5),
             analytic: bool = False, workers: int = 1,
             entry_offset: int = 0) -> Tuple[CountsRecord, ...]:
    """Sixteen-setting Bell-test run.

    ``angles_deg`` is (t1, t1', t2, t2').  For each correlation coefficient
    E(a, b) with a in {t1, t1'} and b in {t2, t2'}, four records are taken at
    (a, b), (a, b+90°), (a+90°, b), (a+90°, b+90°) — quadruples ordered
    E(t1,t2), E(t1,t2'), E(t1',t2), E(t1',t2'), ready for the Bell-test
    reduction.
    """
    t1, t1p, t2, t2p = (float(a) for a in angles_deg)
    pairs = []
    labels = []
    for name, (a, b) in (("E1", (t1, t2)), ("E2", (t1, t2p)),
                         ("E3", (t1p, t2)), ("E4", (t1p, t2p))):
        for tag, (x, y) in (("ab", (a, b)), ("ab+", (a, b + 90.0)),
                            ("a+b", (a + 90.0, b)), ("a+b+", (a + 90.0, b + 90.0))):
            pairs.append((x, y))
            labels.append(f"{name}:{tag}")
    entries = _entries_for_angles(pairs, plan.run.pulses_per_setting, labels=labels)
    return run_pulse_train(plan.with_schedule(entries), state, analytic=analytic,
                           workers=workers, entry_offset=entry_offset)
