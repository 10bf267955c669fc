"""Pulse-train Monte Carlo harness: determinism, dead time, closed-form mode."""

import dataclasses
import math

import numpy as np
import pytest

from sagnacsim.analysis import (
    chsh_from_records,
    correlation_coefficient,
    expected_S,
    fit_fringe,
    net_coincidences,
)
from sagnacsim.config import (
    DetectorConfig,
    ExperimentPlan,
    RunSettings,
    ScheduleEntry,
    SourceConfig,
)
from sagnacsim.experiment import (
    run_chsh,
    run_pulse_train,
    sweep_crystal_position,
    sweep_polarizer,
    sweep_power,
)
from sagnacsim.polarization import AnalyzerSetting, bell_state


def small_plan(pulses: int = 2_000_000, seed: int = 314,
               dead_time_us: float = 0.0, dark: float = 1e-5,
               efficiency: float = 0.15, coupling: float = 0.21,
               statistics: str = "poisson") -> ExperimentPlan:
    detector = DetectorConfig(efficiency=efficiency,
                              coupling_efficiency=coupling,
                              dark_prob_per_gate=dark,
                              dead_time_us=dead_time_us)
    return ExperimentPlan(
        detector_1=detector, detector_2=detector,
        run=RunSettings(seed=seed, batch_size=500_000,
                        pair_statistics=statistics,
                        pulses_per_setting=pulses))


def schedule_at(plan: ExperimentPlan, angle_1_deg, angle_2_deg,
                pulses: int) -> ExperimentPlan:
    setting = AnalyzerSetting(
        angle_1=None if angle_1_deg is None else math.radians(angle_1_deg),
        angle_2=None if angle_2_deg is None else math.radians(angle_2_deg),
        label="test")
    return plan.with_schedule([ScheduleEntry(setting=setting, pulses=pulses)])


# ---------------------------------------------------------------------------
# Determinism


def test_workers_do_not_change_results():
    plan = schedule_at(small_plan(pulses=3_000_000), 0.0, 22.5, 3_000_000)
    state = bell_state("phi")
    serial = run_pulse_train(plan, state, workers=1)
    parallel = run_pulse_train(plan, state, workers=3)
    assert serial == parallel


def test_batch_size_does_not_change_results():
    """Substreams are keyed per batch, so totals shift only if batching does."""
    state = bell_state("phi")
    base = small_plan(pulses=2_000_000)
    a = run_pulse_train(schedule_at(base, 0.0, 30.0, 2_000_000), state)
    b = run_pulse_train(schedule_at(base, 0.0, 30.0, 2_000_000), state,
                        workers=2)
    assert a == b


def test_same_seed_reproduces_different_seed_differs():
    state = bell_state("phi")
    plan_a = schedule_at(small_plan(seed=77), 0.0, 10.0, 1_000_000)
    plan_b = schedule_at(small_plan(seed=78), 0.0, 10.0, 1_000_000)
    again = run_pulse_train(plan_a, state)
    assert run_pulse_train(plan_a, state) == again
    assert run_pulse_train(plan_b, state) != again


def test_entry_offset_decorrelates_repeats():
    state = bell_state("phi")
    plan = schedule_at(small_plan(), 0.0, 20.0, 1_000_000)
    first = run_pulse_train(plan, state, entry_offset=0)
    second = run_pulse_train(plan, state, entry_offset=1)
    assert first != second


def test_stream_budget_guard():
    plan = schedule_at(small_plan(), 0.0, 0.0, 10)
    tiny = dataclasses.replace(
        plan, run=dataclasses.replace(plan.run, batch_size=1))
    state = bell_state("phi")
    run_pulse_train(tiny, state)  # 10 batches: fine
    huge = schedule_at(small_plan(), 0.0, 0.0, 2 ** 25)
    huge = dataclasses.replace(
        huge, run=dataclasses.replace(huge.run, batch_size=1))
    with pytest.raises(ValueError, match="substreams"):
        run_pulse_train(huge, state)


def test_empty_schedule_rejected():
    with pytest.raises(ValueError, match="empty schedule"):
        run_pulse_train(small_plan(), bell_state("phi"))


# ---------------------------------------------------------------------------
# Closed-form mode agrees with sampling and with theory


def test_analytic_mode_recovers_born_probabilities_exactly():
    """Net coincidence fraction in closed-form mode equals mu * eta^2 * P."""
    plan = schedule_at(small_plan(), 0.0, 22.5, 20_000_000)
    state = bell_state("phi")
    (rec,) = run_pulse_train(plan, state, analytic=True)
    eta = plan.detector_1.total_efficiency
    mu = plan.source.mean_pairs_per_pulse
    p_both = 0.5 * math.cos(math.radians(22.5)) ** 2
    net = net_coincidences(rec)
    assert net / rec.gates == pytest.approx(mu * eta * eta * p_both,
                                            rel=1e-9)


def test_monte_carlo_agrees_with_analytic_within_3_sigma():
    pulses = 4_000_000
    state = bell_state("phi")
    for angle in (0.0, 22.5, 45.0, 67.5):
        plan = schedule_at(small_plan(pulses=pulses, seed=901), 0.0, angle,
                           pulses)
        (sampled,) = run_pulse_train(plan, state)
        (expected,) = run_pulse_train(plan, state, analytic=True)
        for field in ("singles_1", "singles_2", "coincidences"):
            observed = getattr(sampled, field)
            mean = getattr(expected, field)
            assert abs(observed - mean) <= 3.0 * math.sqrt(mean) + 1e-9, \
                (angle, field, observed, mean)


def test_analytic_chsh_matches_visibility_prediction():
    """Closed-form Bell run, reduced net, equals 2*sqrt(2)*V to 1e-6."""
    gamma, lam = 0.956, 0.024
    from sagnacsim.source import emitted_density_matrix

    plan = small_plan()
    source = SourceConfig(coherence=gamma, crosstalk=lam)
    rho = emitted_density_matrix(source, plan.loop)
    records = run_chsh(plan, rho, analytic=True)
    result = chsh_from_records(records, net=True)
    c_zz = 1.0 - 2.0 * lam
    c_xx = (1.0 - lam) * gamma
    fringe_visibility = 0.5 * (c_zz + c_xx)
    assert result.s_value == pytest.approx(
        expected_S(fringe_visibility), abs=1e-6)


def test_accidentals_scale_bilinearly_with_singles():
    """The underlying photo-click intensity doubles when one arm's efficiency
    does.  The raw singles saturate (1 - exp) and carry a dark offset, so the
    comparison inverts the click model first."""
    state = bell_state("phi")
    base = schedule_at(small_plan(), 0.0, 90.0, 20_000_000)
    (rec_1,) = run_pulse_train(base, state, analytic=True)
    boosted = dataclasses.replace(
        base, detector_2=dataclasses.replace(base.detector_2,
                                             efficiency=0.30))
    (rec_2,) = run_pulse_train(boosted, state, analytic=True)

    def intensity(rec, arm):
        fraction = getattr(rec, f"singles_{arm}") / rec.gates
        return -math.log((1.0 - fraction) / (1.0 - 1e-5))

    assert intensity(rec_2, 1) == pytest.approx(intensity(rec_1, 1),
                                                rel=1e-12)
    assert intensity(rec_2, 2) == pytest.approx(2.0 * intensity(rec_1, 2),
                                                rel=1e-12)


# ---------------------------------------------------------------------------
# Dead time


def test_dead_time_reduces_live_gates_by_renewal_fraction():
    pulses = 4_000_000
    plan = schedule_at(small_plan(pulses=pulses, dead_time_us=5.0,
                                  efficiency=0.6, coupling=0.9),
                       None, None, pulses)
    state = bell_state("phi")
    (rec,) = run_pulse_train(plan, state)
    # Click probability per live gate for open analyzers.
    mu, eta = 0.046, 0.54
    p_click = 1.0 - (1.0 - 1e-5) * math.exp(-mu * eta)
    dead = plan.detector_1.dead_gates
    live_fraction_expected = 1.0 / (1.0 + p_click * dead)
    assert rec.live_gates_1 / rec.gates == pytest.approx(
        live_fraction_expected, rel=0.02)
    assert rec.singles_1 / rec.live_gates_1 == pytest.approx(p_click,
                                                             rel=0.02)


def test_dead_time_off_keeps_all_gates_live():
    plan = schedule_at(small_plan(), 0.0, 0.0, 1_000_000)
    (rec,) = run_pulse_train(plan, bell_state("phi"))
    assert rec.live_gates_1 == rec.gates
    assert rec.live_gates_2 == rec.gates


# ---------------------------------------------------------------------------
# Pair-number statistics


def test_thermal_statistics_raise_accidental_fraction():
    """Bose-Einstein pair numbers bunch: same mean, larger variance, so the
    uncorrelated coincidence floor grows relative to Poisson pairs."""
    pulses = 8_000_000
    kwargs = dict(pulses=pulses, seed=555, efficiency=0.6, coupling=0.9,
                  dark=0.0)
    poisson_plan = schedule_at(small_plan(**kwargs), 0.0, 90.0, pulses)
    thermal_plan = schedule_at(small_plan(statistics="thermal", **kwargs),
                               0.0, 90.0, pulses)
    state = bell_state("phi")
    (rec_p,) = run_pulse_train(poisson_plan, state)
    (rec_t,) = run_pulse_train(thermal_plan, state)
    # Equal mean pair numbers -> equal singles within counting noise ...
    assert rec_t.singles_1 == pytest.approx(rec_p.singles_1, rel=0.02)
    # ... but the crossed-analyzer coincidence floor roughly doubles.
    assert rec_t.coincidences > 1.5 * rec_p.coincidences


def test_invalid_statistics_rejected_by_config():
    from sagnacsim.config import ConfigError, validate_plan
    plan = small_plan()
    bad = dataclasses.replace(
        plan, run=dataclasses.replace(plan.run, pair_statistics="uniform"))
    with pytest.raises(ConfigError, match="pair_statistics"):
        validate_plan(bad)


# ---------------------------------------------------------------------------
# Sweeps


def test_sweep_polarizer_fringe_fits_visibility():
    plan = small_plan(pulses=1_500_000, seed=606)
    angles = list(np.arange(0.0, 181.0, 15.0))
    sweep = sweep_polarizer(plan, bell_state("phi"), 0.0, angles,
                            analytic=True)
    assert sweep.axis_values == tuple(angles)
    assert [r.axis_value for r in sweep.records] == angles
    counts = [r.coincidences for r in sweep.records]
    fit = fit_fringe(angles, counts)
    # Raw closed-form fringe: accidentals dilute V below 1.
    assert 0.9 < fit.visibility < 1.0
    net = [net_coincidences(r) for r in sweep.records]
    fit_net = fit_fringe(angles, net)
    assert fit_net.visibility == pytest.approx(1.0, abs=1e-6)
    assert fit_net.phase_deg == pytest.approx(0.0, abs=1e-3)


def test_sweep_power_scales_click_intensity_linearly():
    plan = small_plan(dark=0.0)
    powers = [0.5, 1.0, 2.0]
    sweep = sweep_power(plan, bell_state("phi"), powers, analytic=True)
    # Invert the saturating click model: -ln(1 - s/G) = mu(P)·eta.
    intensity = np.array([
        -math.log(1.0 - r.singles_1 / r.gates) for r in sweep.records])
    assert intensity[2] / intensity[0] == pytest.approx(4.0, rel=1e-12)
    assert intensity[1] / intensity[0] == pytest.approx(2.0, rel=1e-12)
    # The accidental floor (singles product) therefore grows quadratically
    # in power while the true-pair term grows linearly, degrading CAR.
    car = np.array([
        r.coincidences / (r.singles_1 * r.singles_2 / r.gates)
        for r in sweep.records])
    assert car[0] > car[1] > car[2]
    with pytest.raises(ValueError):
        sweep_power(plan, bell_state("phi"), [-1.0], analytic=True)


def test_sweep_crystal_position_maps_phase_fringe():
    source = SourceConfig(phase_period_mm=1.0)
    plan = dataclasses.replace(small_plan(), source=source)
    positions = list(np.linspace(0.0, 1.0, 9))
    sweep = sweep_crystal_position(plan, positions, analytic=True)
    net = np.array([net_coincidences(r) for r in sweep.records])
    # Diagonal analyzers at 45 deg: maximum at phase 0, minimum at half period.
    assert net[0] == pytest.approx(net[-1], rel=1e-9)
    assert net[4] == pytest.approx(0.0, abs=net[0] * 1e-9)
    assert net[0] > 0.0


def test_run_chsh_record_layout():
    plan = small_plan()
    records = run_chsh(plan, bell_state("phi"), analytic=True)
    assert len(records) == 16
    # First quadruple measures E(t1, t2) at (0, 22.5) and its complements.
    assert records[0].angle_1_deg == pytest.approx(0.0)
    assert records[0].angle_2_deg == pytest.approx(22.5)
    assert records[1].angle_2_deg == pytest.approx(112.5)
    assert records[2].angle_1_deg == pytest.approx(90.0)
    result = chsh_from_records(records, net=True)
    assert result.s_value == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-9)


def test_run_chsh_sampled_close_to_analytic():
    plan = small_plan(pulses=2_000_000, seed=808)
    state = bell_state("phi")
    sampled = chsh_from_records(run_chsh(plan, state, workers=2), net=True)
    assert sampled.s_value == pytest.approx(2.0 * math.sqrt(2.0),
                                            abs=4.0 * sampled.s_sigma)


def test_correlation_of_sampled_records_brackets_truth():
    plan = small_plan(pulses=2_000_000, seed=909)
    state = bell_state("phi")
    records = run_chsh(plan, state)
    e_value, sigma = correlation_coefficient(records[:4], net=True)
    truth = math.cos(2.0 * math.radians(0.0 - 22.5))
    assert abs(e_value - truth) <= 4.0 * sigma
