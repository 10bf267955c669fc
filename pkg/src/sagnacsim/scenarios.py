"""Measurement scenarios: calibrated presets plus end-to-end study recipes.

Each scenario assembles an experiment plan (user config merged with the
scenario's calibrated noise preset), runs the pulse-train simulation, reduces
the counts, and returns a :class:`ScenarioResult` holding delimited tables, a
JSON-ready summary, and declarative figure specs.  Serialization to files is
the report writer's job (:mod:`sagnacsim.reports`).

Scenario names are descriptive; the short aliases ``fig1``/``fig3``/``fig4``/
``tomo`` number this tool's own standard report figures (each scenario's PNG
files carry the same numbers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .analysis import (
    CountsRecord,
    accidental_estimate_counts,
    chsh_from_records,
    corrected_pair_mean,
    estimate_pair_probability,
    expected_S,
    fit_fringe,
    net_coincidences,
    tomography,
    TOMOGRAPHY_BASES,
)
from .config import ExperimentPlan, ScheduleEntry, apply_overrides
from .detectors import (
    coincidence_to_accidental_ratio,
    max_singles_rate,
    max_trigger_rate,
)
from .experiment import (
    run_chsh,
    run_pulse_train,
    sweep_crystal_position,
    sweep_polarizer,
    sweep_power,
)
from .polarization import (
    AnalyzerSetting,
    WaveplateSetting,
    as_density_matrix,
    bell_state,
    chsh_value,
)
from .source import emitted_density_matrix, pair_mean_per_pulse
from .spectral import (
    apply_filter,
    build_jsa,
    fwhm_of_curve,
    hom_coincidence,
    marginal_intensity,
    schmidt_purity,
)

__all__ = [
    "ALIASES",
    "PRESETS",
    "SCENARIO_NAMES",
    "FigureSpec",
    "ScenarioError",
    "ScenarioResult",
    "Table",
    "UnknownScenarioError",
    "apply_preset",
    "canonical_name",
    "preset_overrides",
    "run_scenario",
]


class ScenarioError(RuntimeError):
    """A scenario could not produce its outputs."""


class UnknownScenarioError(ScenarioError):
    """The requested scenario name is not registered."""


@dataclass(frozen=True)
class Table:
    """One delimited output table: a name, a header row, and data rows."""

    name: str
    headers: Tuple[str, ...]
    rows: Tuple[Tuple[object, ...], ...]


@dataclass(frozen=True)
class FigureSpec:
    """Declarative figure description rendered by the report writer."""

    name: str
    kind: str  # "xy" | "panels" | "heatmap" | "matrix_pair"
    title: str
    payload: Dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioResult:
    """Everything a scenario produced, ready for serialization."""

    name: str
    tables: Tuple[Table, ...]
    summary: Dict[str, object]
    figures: Tuple[FigureSpec, ...]


# --------------------------------------------------------------------------
# Presets

#: Calibrated per-scenario parameter overrides (dotted config keys).  These
#: model the study-specific source quality and detector noise floors; any key
#: the user sets explicitly in the config file wins over the preset.
PRESETS: Dict[str, Dict[str, object]] = {
    "pair-rates": {
        "run.pulses_per_setting": 20_000_000,
    },
    "phase-fringe": {
        "source.coherence": 0.992443,
        "source.crosstalk": 0.0075,
        "detector_1.dark_prob_per_gate": 5.4e-4,
        "detector_2.dark_prob_per_gate": 5.4e-4,
        "run.pulses_per_setting": 60_000_000,
    },
    "polarization-fringe": {
        "source.coherence": 0.984772,
        "source.crosstalk": 0.015,
        "detector_1.dark_prob_per_gate": 2.88e-4,
        "detector_2.dark_prob_per_gate": 2.88e-4,
        "run.pulses_per_setting": 20_000_000,
    },
    "chsh": {
        "source.coherence": 0.956,
        "source.crosstalk": 0.024,
        "run.pulses_per_setting": 20_000_000,
    },
    "tomography": {
        "source.coherence": 0.984772,
        "source.crosstalk": 0.015,
        "detector_1.dark_prob_per_gate": 8.3225e-4,
        "detector_2.dark_prob_per_gate": 8.3225e-4,
        "run.pulses_per_setting": 20_000_000,
    },
    "spectral": {},
    "accidental-floor": {
        "detector_1.efficiency": 0.6,
        "detector_1.coupling_efficiency": 0.9,
        "detector_1.dead_time_us": 0.0,
        "detector_2.efficiency": 0.6,
        "detector_2.coupling_efficiency": 0.9,
        "detector_2.dead_time_us": 0.0,
        "run.pulses_per_setting": 20_000_000,
    },
}

#: Short aliases accepted at the command line.  ``figN`` numbers this tool's
#: report figures for the corresponding scenario.
ALIASES: Dict[str, str] = {
    "fig1": "pair-rates",
    "fig3": "phase-fringe",
    "fig4": "polarization-fringe",
    "tomo": "tomography",
}

#: The four Bell states as loop settings (half-wave, quarter-wave in degrees).
_BELL_LOOPS: Tuple[Tuple[str, str, float, float], ...] = (
    ("phi_plus", "Φ⁺", 0.0, 0.0),
    ("phi_minus", "Φ⁻", 0.0, 90.0),
    ("psi_plus", "Ψ⁺", 45.0, 0.0),
    ("psi_minus", "Ψ⁻", 45.0, 90.0),
)

#: Analyzer construction per tomography basis letter: polarizer angle and
#: quarter-wave-plate fast-axis angles, both in degrees.  The circular basis
#: uses a quarter-wave plate at 45° followed by the polarizer at 90°, which
#: passes the right-circular ket exactly and blocks its orthogonal partner.
_BASIS_OPTICS: Dict[str, Tuple[float, Tuple[float, ...]]] = {
    "H": (0.0, ()),
    "V": (90.0, ()),
    "D": (45.0, ()),
    "R": (90.0, (45.0,)),
}


def canonical_name(name: str) -> str:
    """Resolve aliases (case-insensitively); raise
    :class:`UnknownScenarioError` for strangers."""
    folded = name.strip().lower()
    resolved = ALIASES.get(folded, folded)
    if resolved not in _RUNNERS:
        known = sorted(set(_RUNNERS) | set(ALIASES))
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; known scenarios: {', '.join(known)}")
    return resolved


def preset_overrides(name: str) -> Dict[str, object]:
    """The calibrated overrides for a scenario (copy; dotted keys)."""
    return dict(PRESETS[canonical_name(name)])


def apply_preset(plan: ExperimentPlan, name: str,
                 explicit: frozenset = frozenset()) -> ExperimentPlan:
    """Overlay a scenario preset, skipping keys the user set explicitly."""
    overrides = {key: value for key, value in preset_overrides(name).items()
                 if key not in explicit}
    return apply_overrides(plan, overrides)


# --------------------------------------------------------------------------
# Shared table plumbing

_COUNT_HEADERS: Tuple[str, ...] = (
    "setting",
    "angle_1 (deg)",
    "angle_2 (deg)",
    "gates",
    "singles_1 (counts)",
    "singles_2 (counts)",
    "coincidences (counts)",
    "accidentals_estimate (counts)",
    "duration (s)",
)


def _count_row(record: CountsRecord, trigger_rate_hz: float) -> Tuple[object, ...]:
    return (
        record.label,
        record.angle_1_deg,
        record.angle_2_deg,
        record.gates,
        record.singles_1,
        record.singles_2,
        record.coincidences,
        accidental_estimate_counts(record),
        record.duration_s(trigger_rate_hz),
    )


def _fit_block(fit) -> Dict[str, object]:
    return {
        "visibility": fit.visibility,
        "visibility_sigma": fit.visibility_sigma,
        "amplitude": fit.amplitude,
        "offset": fit.offset,
        "phase_deg": fit.phase_deg,
    }


def _run_block(plan: ExperimentPlan) -> Dict[str, object]:
    """Common provenance block for summaries."""
    return {
        "seed": plan.run.seed,
        "pulses_per_setting": plan.run.pulses_per_setting,
        "pair_mean_per_pulse": pair_mean_per_pulse(plan.source, plan.run.power_mw),
        "pair_statistics": plan.run.pair_statistics,
        "trigger_rate_hz": plan.detector_1.trigger_rate_hz,
    }


# --------------------------------------------------------------------------
# Scenario: pair-rates (alias fig1)

def _scenario_pair_rates(plan: ExperimentPlan, analytic: bool,
                         workers: int) -> ScenarioResult:
    """Singles/coincidence scaling and accidental ratio versus pump power."""
    powers = [round(0.2 * k, 10) for k in range(1, 11)]
    state = emitted_density_matrix(plan.source, plan.loop)
    sweep = sweep_power(plan, state, powers, analytic=analytic, workers=workers)
    f_trig = plan.detector_1.trigger_rate_hz

    headers = ("power (mW)",) + _COUNT_HEADERS[3:] + (
        "singles_rate_1 (Hz)", "singles_rate_2 (Hz)", "coincidence_rate (Hz)",
        "accidental_rate (Hz)", "car", "pair_mean_estimate",
        "pair_mean_corrected")
    rows = []
    ref_summary: Dict[str, object] = {}
    for power, record in zip(powers, sweep.records):
        duration = record.duration_s(f_trig)
        acc = accidental_estimate_counts(record)
        s1_hz = record.singles_1 / duration
        s2_hz = record.singles_2 / duration
        c_hz = record.coincidences / duration
        acc_hz = acc / duration
        car = coincidence_to_accidental_ratio(record.coincidences, acc)
        bare = (estimate_pair_probability(s1_hz, s2_hz, c_hz, f_trig)
                if record.coincidences > 0 else float("nan"))
        try:
            corrected = corrected_pair_mean(
                record, plan.detector_1.dark_prob_per_gate,
                plan.detector_2.dark_prob_per_gate)
        except ValueError:  # count-starved point: no invertible excess
            corrected = float("nan")
        rows.append((power,) + _count_row(record, f_trig)[3:]
                    + (s1_hz, s2_hz, c_hz, acc_hz, car, bare, corrected))
        if math.isclose(power, plan.source.reference_power_mw, rel_tol=1e-9):
            ref_summary = {
                "power_mw": power,
                "singles_rate_1_hz": s1_hz,
                "singles_rate_2_hz": s2_hz,
                "coincidence_rate_hz": c_hz,
                "car": car,
                "pair_mean_estimate": bare,
                "pair_mean_corrected": corrected,
                "max_trigger_rate_hz": max_trigger_rate(
                    f_trig, s1_hz, plan.detector_1.dead_time_s,
                    plan.detector_1.gate_period_s),
                "max_singles_rate_hz": max_singles_rate(
                    f_trig, plan.detector_1.dead_time_s,
                    plan.detector_1.gate_period_s),
            }

    table = Table("rates", headers, tuple(tuple(r) for r in rows))
    summary = {
        "scenario": "pair-rates",
        "mode": "analytic" if analytic else "monte-carlo",
        "run": _run_block(plan),
        "at_reference_power": ref_summary,
    }
    x = powers
    fig_rates = FigureSpec(
        "fig1_rates", "xy", "Counting rates vs pump power",
        {
            "x": x, "xlabel": "pump power (mW)", "ylabel": "rate (Hz)",
            "yscale": "log",
            "series": [
                {"y": [r[-7] for r in rows], "label": "singles arm 1"},
                {"y": [r[-6] for r in rows], "label": "singles arm 2"},
                {"y": [r[-5] for r in rows], "label": "coincidences"},
                {"y": [r[-4] for r in rows], "label": "accidental estimate",
                 "style": "--"},
            ],
        })
    fig_car = FigureSpec(
        "fig1_car", "xy", "Coincidence-to-accidental ratio vs pump power",
        {
            "x": x, "xlabel": "pump power (mW)", "ylabel": "CAR",
            "series": [{"y": [r[-3] for r in rows], "label": "CAR"}],
        })
    return ScenarioResult("pair-rates", (table,), summary, (fig_rates, fig_car))


# --------------------------------------------------------------------------
# Scenario: phase-fringe (alias fig3)

def _scenario_phase_fringe(plan: ExperimentPlan, analytic: bool,
                           workers: int) -> ScenarioResult:
    """Coincidence fringe versus pump-focus position at diagonal analyzers."""
    period = plan.source.phase_period_mm
    z0 = plan.source.reference_position_mm
    positions = [z0 + period * k / 24.0 for k in range(25)]
    sweep = sweep_crystal_position(plan, positions, analytic=analytic,
                                   workers=workers)
    f_trig = plan.detector_1.trigger_rate_hz

    raw = [float(r.coincidences) for r in sweep.records]
    net = [net_coincidences(r) for r in sweep.records]
    # One phase period spans 180° of the cos²(θ − φ) fit model.
    fit_angles = [(z - z0) / period * 180.0 for z in positions]
    fit_raw = fit_fringe(fit_angles, raw)
    fit_net = fit_fringe(fit_angles, net)

    min_index = int(np.argmin(raw))
    accidental_at_min = accidental_estimate_counts(sweep.records[min_index])
    fitted_minimum = fit_raw.offset
    min_ratio = (fitted_minimum / accidental_at_min
                 if accidental_at_min > 0 else float("inf"))

    # Model-free period estimate from the discrete Fourier fundamental.
    samples = np.asarray(net[:-1], dtype=float)  # drop duplicated endpoint
    spectrum = np.abs(np.fft.rfft(samples - samples.mean()))
    dominant = int(np.argmax(spectrum[1:]) + 1)
    fitted_period_mm = (positions[-1] - positions[0]) / dominant

    headers = ("position (mm)", "phase (deg)") + _COUNT_HEADERS + (
        "net_coincidences (counts)",)
    rows = tuple(
        (z, (z - z0) / period * 360.0) + _count_row(r, f_trig) + (n,)
        for z, r, n in zip(positions, sweep.records, net))
    table = Table("fringe", headers, rows)

    summary = {
        "scenario": "phase-fringe",
        "mode": "analytic" if analytic else "monte-carlo",
        "run": _run_block(plan),
        "analyzers_deg": [45.0, 45.0],
        "raw_fit": _fit_block(fit_raw),
        "net_fit": _fit_block(fit_net),
        "fitted_period_mm": fitted_period_mm,
        "phase_period_mm": period,
        "fitted_minimum_counts": fitted_minimum,
        "accidental_at_minimum_counts": accidental_at_min,
        "minimum_to_accidental_ratio": min_ratio,
    }
    dense = np.linspace(fit_angles[0], fit_angles[-1], 361)
    fig = FigureSpec(
        "fig3_fringe", "xy", "Coincidences vs pump-focus position",
        {
            "x": positions, "xlabel": "position (mm)",
            "ylabel": "counts per point",
            "series": [
                {"y": raw, "label": "raw", "marker": "o"},
                {"y": net, "label": "net", "marker": "s"},
                {"x": [z0 + a / 180.0 * period for a in dense],
                 "y": [fit_raw.offset + fit_raw.amplitude
                       * math.cos(math.radians(a) - fit_raw.phase_rad) ** 2
                       for a in dense],
                 "label": "raw fit", "style": "-"},
            ],
            "hlines": [{"y": accidental_at_min, "label": "accidental level"}],
        })
    return ScenarioResult("phase-fringe", (table,), summary, (fig,))


# --------------------------------------------------------------------------
# Scenario: polarization-fringe (alias fig4)

def _scenario_polarization_fringe(plan: ExperimentPlan, analytic: bool,
                                  workers: int) -> ScenarioResult:
    """Polarization-correlation fringes for all four Bell states, two bases."""
    sweep_angles = [10.0 * k for k in range(37)]
    f_trig = plan.detector_1.trigger_rate_hz
    tables = []
    panels = []
    states_summary: Dict[str, object] = {}

    for state_index, (key, label, h2_deg, q2_deg) in enumerate(_BELL_LOOPS):
        loop = replace(plan.loop, half_wave_rad=math.radians(h2_deg),
                       quarter_wave_rad=math.radians(q2_deg))
        state = emitted_density_matrix(plan.source, loop)
        rows = []
        basis_summary: Dict[str, object] = {}
        panel_series = []
        for basis_index, (basis_key, angle_1) in enumerate(
                (("hv", 0.0), ("diag", 45.0))):
            offset = (state_index * 2 + basis_index) * 50
            sweep = sweep_polarizer(plan, state, angle_1, sweep_angles,
                                    analytic=analytic, workers=workers,
                                    entry_offset=offset)
            raw = [float(r.coincidences) for r in sweep.records]
            net = [net_coincidences(r) for r in sweep.records]
            fit_raw = fit_fringe(sweep_angles, raw)
            fit_net = fit_fringe(sweep_angles, net)
            basis_summary[basis_key] = {
                "angle_1_deg": angle_1,
                "raw_fit": _fit_block(fit_raw),
                "net_fit": _fit_block(fit_net),
            }
            rows.extend(
                (basis_key,) + _count_row(r, f_trig) + (n,)
                for r, n in zip(sweep.records, net))
            panel_series.append({"y": raw, "label": f"{basis_key} raw",
                                 "marker": "o"})
            panel_series.append({"y": net, "label": f"{basis_key} net",
                                 "marker": "s"})
        states_summary[key] = {
            "label": label,
            "half_wave_deg": h2_deg,
            "quarter_wave_deg": q2_deg,
            "bases": basis_summary,
        }
        headers = ("basis",) + _COUNT_HEADERS + ("net_coincidences (counts)",)
        tables.append(Table(f"fringe_{key}", headers,
                            tuple(tuple(r) for r in rows)))
        panels.append({
            "title": label, "x": sweep_angles,
            "xlabel": "analyzer 2 angle (deg)", "ylabel": "counts",
            "series": panel_series,
        })

    summary = {
        "scenario": "polarization-fringe",
        "mode": "analytic" if analytic else "monte-carlo",
        "run": _run_block(plan),
        "states": states_summary,
    }
    fig = FigureSpec("fig4_fringes", "panels",
                     "Polarization-correlation fringes", {"panels": panels})
    return ScenarioResult("polarization-fringe", tuple(tables), summary, (fig,))


# --------------------------------------------------------------------------
# Scenario: chsh

def _scenario_chsh(plan: ExperimentPlan, analytic: bool,
                   workers: int) -> ScenarioResult:
    """Sixteen-setting Bell-test run with raw and net reductions."""
    angles = (0.0, 45.0, 22.5, 67.5)
    state = emitted_density_matrix(plan.source, plan.loop)
    records = run_chsh(plan, state, angles, analytic=analytic, workers=workers)
    f_trig = plan.detector_1.trigger_rate_hz

    net = chsh_from_records(records, net=True)
    raw = chsh_from_records(records, net=False)
    predicted = chsh_value(
        state, tuple(math.radians(a) for a in angles))

    headers = _COUNT_HEADERS + ("net_coincidences (counts)",)
    table = Table("chsh_counts", headers,
                  tuple(_count_row(r, f_trig) + (net_coincidences(r),)
                        for r in records))

    def _block(result) -> Dict[str, object]:
        return {
            "e_values": list(result.e_values),
            "e_sigmas": list(result.e_sigmas),
            "s_value": result.s_value,
            "s_sigma": result.s_sigma,
            "n_sigma": result.n_sigma,
        }

    summary = {
        "scenario": "chsh",
        "mode": "analytic" if analytic else "monte-carlo",
        "run": _run_block(plan),
        "angles_deg": list(angles),
        "raw": _block(raw),
        "net": _block(net),
        "predicted_s_from_state": predicted,
        "ideal_s_at_unit_visibility": expected_S(1.0),
    }
    labels = ["E1", "E2", "E3", "E4"]
    fig = FigureSpec(
        "chsh_correlations", "xy", "Correlation coefficients",
        {
            "x": [1, 2, 3, 4], "xlabel": "coefficient", "ylabel": "E",
            "xticks": labels,
            "series": [
                {"y": list(raw.e_values), "yerr": list(raw.e_sigmas),
                 "label": f"raw (S={raw.s_value:.4f})", "marker": "o"},
                {"y": list(net.e_values), "yerr": list(net.e_sigmas),
                 "label": f"net (S={net.s_value:.4f})", "marker": "s"},
            ],
        })
    return ScenarioResult("chsh", (table,), summary, (fig,))


# --------------------------------------------------------------------------
# Scenario: tomography (alias tomo)

def _basis_setting(pair: str) -> AnalyzerSetting:
    """Analyzer construction (polarizer + optional quarter-wave) per basis."""
    plates_and_angles = []
    for letter in pair:
        pol_deg, qwp_degs = _BASIS_OPTICS[letter]
        plates = tuple(
            WaveplateSetting(retardance=math.pi / 2.0,
                             fast_axis_angle=math.radians(a))
            for a in qwp_degs)
        plates_and_angles.append((math.radians(pol_deg), plates))
    (a1, p1), (a2, p2) = plates_and_angles
    return AnalyzerSetting(angle_1=a1, angle_2=a2, plates_1=p1, plates_2=p2,
                           label=pair)


def _scenario_tomography(plan: ExperimentPlan, analytic: bool,
                         workers: int) -> ScenarioResult:
    """Sixteen-basis reconstruction, raw and accidental-corrected."""
    state = emitted_density_matrix(plan.source, plan.loop)
    entries = tuple(ScheduleEntry(_basis_setting(pair),
                                  plan.run.pulses_per_setting)
                    for pair in TOMOGRAPHY_BASES)
    records = run_pulse_train(plan.with_schedule(entries), state,
                              analytic=analytic, workers=workers)
    f_trig = plan.detector_1.trigger_rate_hz
    target = bell_state("phi", 0.0)

    raw_result = tomography(records, target=target)
    net_counts = [max(net_coincidences(r), 0.0) for r in records]
    net_result = tomography(net_counts, target=target)

    headers = ("basis",) + _COUNT_HEADERS[1:] + ("net_coincidences (counts)",)
    table = Table("tomography_counts", headers,
                  tuple((r.label,) + _count_row(r, f_trig)[1:] + (n,)
                        for r, n in zip(records, net_counts)))

    def _block(result) -> Dict[str, object]:
        rho = [[(float(z.real), float(z.imag)) for z in row]
               for row in result.rho]
        return {
            "rho_re_im_row_major": [pair for row in rho for pair in row],
            "fidelity_vs_target": result.fidelity,
            "log_likelihood": result.log_likelihood,
            "iterations": result.iterations,
            "converged": result.converged,
            "method": result.method,
        }

    summary = {
        "scenario": "tomography",
        "mode": "analytic" if analytic else "monte-carlo",
        "run": _run_block(plan),
        "bases": list(TOMOGRAPHY_BASES),
        "raw": _block(raw_result),
        "net": _block(net_result),
        "state_fidelity_vs_target": float(
            np.real(np.trace(state @ as_density_matrix(target)))),
    }
    axis = ["HH", "HV", "VH", "VV"]
    fig = FigureSpec(
        "tomo_density_matrix", "matrix_pair", "Reconstructed state (net)",
        {
            "real": np.real(net_result.rho).tolist(),
            "imag": np.imag(net_result.rho).tolist(),
            "labels": axis,
        })
    return ScenarioResult("tomography", (table,), summary, (fig,))


# --------------------------------------------------------------------------
# Scenario: spectral

_FILTER_BANDWIDTHS_NM: Tuple[Optional[float], ...] = (
    1.0, 3.0, 6.0, 10.0, 18.0, 40.0, None)


def _scenario_spectral(plan: ExperimentPlan, analytic: bool,
                       workers: int) -> ScenarioResult:
    """Schmidt purity versus filter bandwidth, marginals, and the dip scan."""
    del analytic, workers  # deterministic closed-form pipeline
    jsa = build_jsa(plan.spectral)

    purity_rows = []
    purity_by_bw: Dict[str, float] = {}
    for bandwidth in _FILTER_BANDWIDTHS_NM:
        filtered = apply_filter(jsa, bandwidth)
        result = schmidt_purity(filtered)
        key = "inf" if bandwidth is None else repr(float(bandwidth))
        purity_by_bw[key] = result.purity
        purity_rows.append((
            "inf" if bandwidth is None else bandwidth,
            result.purity,
            result.schmidt_number,
            filtered.transmission,
        ))
    purity_table = Table(
        "purity_vs_bandwidth",
        ("filter_bandwidth (nm)", "purity", "schmidt_number", "transmission"),
        tuple(purity_rows))

    wavelengths, marg_1 = marginal_intensity(jsa, arm=1)
    _, marg_2 = marginal_intensity(jsa, arm=2)
    marginal_fwhm = fwhm_of_curve(wavelengths, marg_1)
    marginal_table = Table(
        "marginal_spectrum",
        ("wavelength (nm)", "intensity_arm_1", "intensity_arm_2"),
        tuple((w, i1, i2) for w, i1, i2 in
              zip(wavelengths.tolist(), marg_1.tolist(), marg_2.tolist())))

    delays_fs = np.linspace(-80.0, 80.0, 161)
    dip = hom_coincidence(jsa, delays_fs)
    dip_fwhm = fwhm_of_curve(delays_fs, 0.5 - dip)
    hom_table = Table(
        "hom_dip",
        ("delay (fs)", "coincidence_probability"),
        tuple((d, c) for d, c in zip(delays_fs.tolist(), dip.tolist())))

    summary = {
        "scenario": "spectral",
        "grid_size": plan.spectral.grid_size,
        "span_fwhm": plan.spectral.span_fwhm,
        "purity_by_bandwidth_nm": purity_by_bw,
        "marginal_fwhm_nm": marginal_fwhm,
        "target_marginal_fwhm_nm": plan.spectral.marginal_bandwidth_nm,
        "hom_dip_minimum": float(np.min(dip)),
        "hom_dip_fwhm_fs": dip_fwhm,
    }
    finite = [(bw, p) for bw, p, _, _ in purity_rows if bw != "inf"]
    fig_purity = FigureSpec(
        "spectral_purity", "xy", "Schmidt purity vs filter bandwidth",
        {
            "x": [bw for bw, _ in finite], "xlabel": "filter bandwidth (nm)",
            "ylabel": "purity", "yscale": "log", "xscale": "log",
            "series": [{"y": [p for _, p in finite], "label": "filtered",
                        "marker": "o"}],
            "hlines": [{"y": purity_by_bw["inf"], "label": "unfiltered"}],
        })
    step = max(1, jsa.amplitude.shape[0] // 512)
    intensity = np.abs(jsa.amplitude[::step, ::step]) ** 2
    fig_jsa = FigureSpec(
        "spectral_jsa", "heatmap", "Joint spectral intensity",
        {
            "x": wavelengths[::step].tolist(),
            "y": wavelengths[::step].tolist(),
            "z": intensity.tolist(),
            "xlabel": "arm-2 wavelength (nm)",
            "ylabel": "arm-1 wavelength (nm)",
        })
    fig_hom = FigureSpec(
        "spectral_hom", "xy", "Two-photon interference dip",
        {
            "x": delays_fs.tolist(), "xlabel": "relative delay (fs)",
            "ylabel": "coincidence probability",
            "series": [{"y": dip.tolist(), "label": "dip"}],
        })
    return ScenarioResult("spectral",
                          (purity_table, marginal_table, hom_table), summary,
                          (fig_purity, fig_jsa, fig_hom))


# --------------------------------------------------------------------------
# Scenario: accidental-floor (library-level; used by the validation suite)

def _scenario_accidental_floor(plan: ExperimentPlan, analytic: bool,
                               workers: int) -> ScenarioResult:
    """Uncorrelated-coincidence floor at crossed analyzers, ideal state."""
    state = as_density_matrix(bell_state("phi", 0.0))
    setting = AnalyzerSetting(0.0, math.radians(90.0), label="crossed")
    entries = (ScheduleEntry(setting, plan.run.pulses_per_setting),)
    record = run_pulse_train(plan.with_schedule(entries), state,
                             analytic=analytic, workers=workers)[0]
    f_trig = plan.detector_1.trigger_rate_hz

    d1 = plan.detector_1.dark_prob_per_gate
    d2 = plan.detector_2.dark_prob_per_gate
    gates = record.gates
    a = record.singles_1 / gates
    b = record.singles_2 / gates
    dark_part = gates * (a * d2 + b * d1 - d1 * d2)
    floor = record.coincidences - dark_part
    estimate = accidental_estimate_counts(record)
    table = Table("accidental_floor", _COUNT_HEADERS + (
        "dark_contribution (counts)", "floor_minus_darks (counts)"),
        (_count_row(record, f_trig) + (dark_part, floor),))
    summary = {
        "scenario": "accidental-floor",
        "mode": "analytic" if analytic else "monte-carlo",
        "run": _run_block(plan),
        "coincidences": record.coincidences,
        "dark_contribution": dark_part,
        "floor_minus_darks": floor,
        "accidental_estimate": estimate,
        "floor_to_estimate_ratio": (floor / estimate if estimate > 0
                                    else float("inf")),
    }
    return ScenarioResult("accidental-floor", (table,), summary, ())


# --------------------------------------------------------------------------
# Registry

_RUNNERS: Dict[str, Callable[[ExperimentPlan, bool, int], ScenarioResult]] = {
    "pair-rates": _scenario_pair_rates,
    "phase-fringe": _scenario_phase_fringe,
    "polarization-fringe": _scenario_polarization_fringe,
    "chsh": _scenario_chsh,
    "tomography": _scenario_tomography,
    "spectral": _scenario_spectral,
    "accidental-floor": _scenario_accidental_floor,
}

SCENARIO_NAMES: Tuple[str, ...] = tuple(sorted(_RUNNERS))


def run_scenario(name: str, plan: ExperimentPlan, *, analytic: bool = False,
                 workers: int = 1,
                 explicit: frozenset = frozenset()) -> ScenarioResult:
    """Run one scenario end to end and return its in-memory outputs.

    The scenario's calibrated preset is overlaid on ``plan`` first; dotted
    keys listed in ``explicit`` (the ones the user set in the config file or
    on the command line) are left untouched.
    """
    resolved = canonical_name(name)
    prepared = apply_preset(plan, resolved, explicit)
    try:
        return _RUNNERS[resolved](prepared, analytic, workers)
    except (ValueError, ArithmeticError) as exc:
        raise ScenarioError(f"scenario {resolved!r} failed: {exc}") from exc
