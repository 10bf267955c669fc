"""Experiment configuration: dataclasses, validation, and file round-trip.

Configuration files are YAML (JSON is accepted as an alternative encoding;
files ending in ``.json`` are parsed as JSON).  Angles and phases live in
the files in degrees — keys carry a ``_deg`` suffix — and are converted to
radians on load; everything in the dataclasses is radians and SI-adjacent
lab units (mm, mW, ns, us, nm, ps).

An empty file yields the documented defaults.  Unknown keys and violated
constraints raise :class:`ConfigError` naming the offending key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import yaml

from .polarization import AnalyzerSetting, WaveplateSetting

__all__ = [
    "ConfigError",
    "CrystalInfo",
    "DetectorConfig",
    "ExperimentPlan",
    "LoopSettings",
    "RunSettings",
    "ScheduleEntry",
    "SourceConfig",
    "SpectralConfig",
    "apply_overrides",
    "default_plan",
    "flatten_keys",
    "load_config",
    "plan_from_dict",
    "plan_to_dict",
    "read_config_data",
    "save_config",
]


class ConfigError(ValueError):
    """A configuration file or override violates the documented schema."""


@dataclass(frozen=True)
class CrystalInfo:
    """Descriptive crystal metadata; carried through to reports, never computed on."""

    grating_period_um: float = 19.2
    length_mm: float = 10.0
    opening_angle_deg: float = 4.6
    temperature_c: float = 40.0


@dataclass(frozen=True)
class SourceConfig:
    """Photon-pair source parameters.

    ``mean_pairs_per_pulse`` is the Poisson mean at ``reference_power_mw``;
    the mean scales linearly with pump power.  The relative phase between the
    two pair-creation amplitudes is ``phase_offset_rad`` plus a linear term in
    the crystal position with period ``phase_period_mm``.  ``imbalance``
    skews the two amplitudes to ``sqrt((1 +- imbalance)/2)``.  ``coherence``
    (off-diagonal survival factor) and ``crosstalk`` (weight routed into the
    polarization-swapped product states) parameterize intrinsic state noise;
    the defaults describe a noiseless source.
    """

    mean_pairs_per_pulse: float = 0.046
    reference_power_mw: float = 1.0
    phase_offset_rad: float = 0.0
    crystal_position_mm: float = 0.0
    reference_position_mm: float = 0.0
    phase_period_mm: float = 1.0
    imbalance: float = 0.0
    coherence: float = 1.0
    crosstalk: float = 0.0
    crystal: CrystalInfo = field(default_factory=CrystalInfo)


@dataclass(frozen=True)
class LoopSettings:
    """Output-arm waveplate orientations selecting which entangled state is emitted."""

    half_wave_rad: float = 0.0
    quarter_wave_rad: float = 0.0


@dataclass(frozen=True)
class DetectorConfig:
    """Gated single-photon detector model parameters for one arm."""

    efficiency: float = 0.15
    coupling_efficiency: float = 0.21
    dark_prob_per_gate: float = 1e-5
    dead_time_us: float = 5.0
    gate_period_ns: float = 50.0

    @property
    def total_efficiency(self) -> float:
        """End-to-end photon detection probability (coupling times detector)."""
        return self.efficiency * self.coupling_efficiency

    @property
    def dead_time_s(self) -> float:
        return self.dead_time_us * 1e-6

    @property
    def gate_period_s(self) -> float:
        return self.gate_period_ns * 1e-9

    @property
    def trigger_rate_hz(self) -> float:
        return 1e9 / self.gate_period_ns

    @property
    def dead_gates(self) -> int:
        """Whole gates blanked after a click; partial overlap rounds up."""
        if self.dead_time_us <= 0.0:
            return 0
        return math.ceil(self.dead_time_us * 1000.0 / self.gate_period_ns)


@dataclass(frozen=True)
class SpectralConfig:
    """Joint-spectrum model parameters.

    The pump envelope width is the transform-limited width of a Gaussian
    pulse of ``pump_duration_ps`` multiplied by ``pump_bandwidth_scale`` (a
    one-time calibration absorbing non-Gaussian phase matching and pump
    chirp).  The anti-diagonal envelope is chosen so the single-arm marginal
    has ``marginal_bandwidth_nm`` FWHM.  The grid spans ``span_fwhm`` marginal
    FWHMs either side of the center wavelength.
    """

    center_wavelength_nm: float = 1550.0
    pump_center_nm: float = 775.0
    pump_duration_ps: float = 3.5
    marginal_bandwidth_nm: float = 132.0
    pump_bandwidth_scale: float = 2.082
    grid_size: int = 2048
    span_fwhm: float = 1.5


@dataclass(frozen=True)
class RunSettings:
    """Sampling controls: seed, batching, pump power, pair-number statistics."""

    seed: int = 12345
    batch_size: int = 1_000_000
    power_mw: float = 1.0
    pair_statistics: str = "poisson"
    pulses_per_setting: int = 20_000_000


@dataclass(frozen=True)
class ScheduleEntry:
    """One analyzer setting held for a fixed number of pulses."""

    setting: AnalyzerSetting
    pulses: int


@dataclass(frozen=True)
class ExperimentPlan:
    """Complete, serializable description of one simulated experiment."""

    source: SourceConfig = field(default_factory=SourceConfig)
    loop: LoopSettings = field(default_factory=LoopSettings)
    detector_1: DetectorConfig = field(default_factory=DetectorConfig)
    detector_2: DetectorConfig = field(default_factory=DetectorConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    run: RunSettings = field(default_factory=RunSettings)
    schedule: Tuple[ScheduleEntry, ...] = ()

    def with_schedule(self, entries: Sequence[ScheduleEntry]) -> "ExperimentPlan":
        return replace(self, schedule=tuple(entries))


def default_plan() -> ExperimentPlan:
    """Plan with every documented default and an empty schedule."""
    return ExperimentPlan()


# --------------------------------------------------------------------------
# Validation

def _require(condition: bool, key: str, constraint: str, value: Any) -> None:
    if not condition:
        raise ConfigError(f"{key}: constraint violated: {constraint} (got {value!r})")


def validate_plan(plan: ExperimentPlan) -> ExperimentPlan:
    """Check every documented constraint; return the plan unchanged."""
    src = plan.source
    _require(src.mean_pairs_per_pulse >= 0.0, "source.mean_pairs_per_pulse",
             "mean_pairs_per_pulse ≥ 0", src.mean_pairs_per_pulse)
    _require(src.reference_power_mw > 0.0, "source.reference_power_mw",
             "reference_power_mw > 0", src.reference_power_mw)
    _require(src.phase_period_mm > 0.0, "source.phase_period_mm",
             "phase_period_mm > 0", src.phase_period_mm)
    _require(math.isfinite(src.phase_offset_rad), "source.phase_offset_deg",
             "phase_offset finite", src.phase_offset_rad)
    _require(-1.0 <= src.imbalance <= 1.0, "source.imbalance",
             "-1 ≤ imbalance ≤ 1", src.imbalance)
    _require(0.0 <= src.coherence <= 1.0, "source.coherence",
             "0 ≤ coherence ≤ 1", src.coherence)
    _require(0.0 <= src.crosstalk <= 1.0, "source.crosstalk",
             "0 ≤ crosstalk ≤ 1", src.crosstalk)

    for name, det in (("detector_1", plan.detector_1), ("detector_2", plan.detector_2)):
        _require(0.0 <= det.efficiency <= 1.0, f"{name}.efficiency",
                 "efficiency ≤ 1 and ≥ 0", det.efficiency)
        _require(0.0 <= det.coupling_efficiency <= 1.0, f"{name}.coupling_efficiency",
                 "coupling_efficiency ≤ 1 and ≥ 0", det.coupling_efficiency)
        _require(0.0 <= det.dark_prob_per_gate <= 1.0, f"{name}.dark_prob_per_gate",
                 "dark_prob_per_gate ≤ 1 and ≥ 0", det.dark_prob_per_gate)
        _require(det.dead_time_us >= 0.0, f"{name}.dead_time_us",
                 "dead_time_us ≥ 0", det.dead_time_us)
        _require(det.gate_period_ns > 0.0, f"{name}.gate_period_ns",
                 "gate_period_ns > 0", det.gate_period_ns)

    spec = plan.spectral
    for key in ("center_wavelength_nm", "pump_center_nm", "pump_duration_ps",
                "marginal_bandwidth_nm", "pump_bandwidth_scale", "span_fwhm"):
        _require(getattr(spec, key) > 0.0, f"spectral.{key}", f"{key} > 0",
                 getattr(spec, key))
    _require(spec.grid_size >= 64, "spectral.grid_size", "grid_size ≥ 64",
             spec.grid_size)

    run = plan.run
    _require(0 <= run.seed < 2 ** 64, "run.seed", "0 ≤ seed < 2^64", run.seed)
    _require(run.batch_size >= 1, "run.batch_size", "batch_size ≥ 1", run.batch_size)
    _require(run.power_mw >= 0.0, "run.power_mw", "power_mw ≥ 0", run.power_mw)
    _require(run.pair_statistics in ("poisson", "thermal"), "run.pair_statistics",
             "pair_statistics ∈ {poisson, thermal}", run.pair_statistics)
    _require(run.pulses_per_setting >= 1, "run.pulses_per_setting",
             "pulses_per_setting ≥ 1", run.pulses_per_setting)

    for index, entry in enumerate(plan.schedule):
        _require(entry.pulses >= 1, f"schedule[{index}].pulses", "pulses ≥ 1",
                 entry.pulses)
    return plan


# --------------------------------------------------------------------------
# Mapping <-> dataclass conversion

def _as_float(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def _check_keys(data: Mapping[str, Any], allowed: Sequence[str], path: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _crystal_from(data: Mapping[str, Any], path: str) -> CrystalInfo:
    allowed = ("grating_period_um", "length_mm", "opening_angle_deg", "temperature_c")
    _check_keys(data, allowed, path)
    base = CrystalInfo()
    return CrystalInfo(*[
        _as_float(data.get(key, getattr(base, key)), f"{path}.{key}") for key in allowed
    ])


def _source_from(data: Mapping[str, Any], path: str) -> SourceConfig:
    allowed = ("mean_pairs_per_pulse", "reference_power_mw", "phase_offset_deg",
               "crystal_position_mm", "reference_position_mm", "phase_period_mm",
               "imbalance", "coherence", "crosstalk", "crystal")
    _check_keys(data, allowed, path)
    base = SourceConfig()
    crystal = data.get("crystal", {})
    if not isinstance(crystal, Mapping):
        raise ConfigError(f"{path}.crystal: expected a mapping, got {crystal!r}")
    return SourceConfig(
        mean_pairs_per_pulse=_as_float(
            data.get("mean_pairs_per_pulse", base.mean_pairs_per_pulse),
            f"{path}.mean_pairs_per_pulse"),
        reference_power_mw=_as_float(
            data.get("reference_power_mw", base.reference_power_mw),
            f"{path}.reference_power_mw"),
        phase_offset_rad=math.radians(_as_float(
            data.get("phase_offset_deg", math.degrees(base.phase_offset_rad)),
            f"{path}.phase_offset_deg")),
        crystal_position_mm=_as_float(
            data.get("crystal_position_mm", base.crystal_position_mm),
            f"{path}.crystal_position_mm"),
        reference_position_mm=_as_float(
            data.get("reference_position_mm", base.reference_position_mm),
            f"{path}.reference_position_mm"),
        phase_period_mm=_as_float(
            data.get("phase_period_mm", base.phase_period_mm),
            f"{path}.phase_period_mm"),
        imbalance=_as_float(data.get("imbalance", base.imbalance), f"{path}.imbalance"),
        coherence=_as_float(data.get("coherence", base.coherence), f"{path}.coherence"),
        crosstalk=_as_float(data.get("crosstalk", base.crosstalk), f"{path}.crosstalk"),
        crystal=_crystal_from(crystal, f"{path}.crystal"),
    )


def _loop_from(data: Mapping[str, Any], path: str) -> LoopSettings:
    allowed = ("half_wave_deg", "quarter_wave_deg")
    _check_keys(data, allowed, path)
    base = LoopSettings()
    return LoopSettings(
        half_wave_rad=math.radians(_as_float(
            data.get("half_wave_deg", math.degrees(base.half_wave_rad)),
            f"{path}.half_wave_deg")),
        quarter_wave_rad=math.radians(_as_float(
            data.get("quarter_wave_deg", math.degrees(base.quarter_wave_rad)),
            f"{path}.quarter_wave_deg")),
    )


def _detector_from(data: Mapping[str, Any], path: str) -> DetectorConfig:
    allowed = ("efficiency", "coupling_efficiency", "dark_prob_per_gate",
               "dead_time_us", "gate_period_ns")
    _check_keys(data, allowed, path)
    base = DetectorConfig()
    return DetectorConfig(*[
        _as_float(data.get(key, getattr(base, key)), f"{path}.{key}") for key in allowed
    ])


def _spectral_from(data: Mapping[str, Any], path: str) -> SpectralConfig:
    allowed = ("center_wavelength_nm", "pump_center_nm", "pump_duration_ps",
               "marginal_bandwidth_nm", "pump_bandwidth_scale", "grid_size",
               "span_fwhm")
    _check_keys(data, allowed, path)
    base = SpectralConfig()
    return SpectralConfig(
        center_wavelength_nm=_as_float(
            data.get("center_wavelength_nm", base.center_wavelength_nm),
            f"{path}.center_wavelength_nm"),
        pump_center_nm=_as_float(
            data.get("pump_center_nm", base.pump_center_nm), f"{path}.pump_center_nm"),
        pump_duration_ps=_as_float(
            data.get("pump_duration_ps", base.pump_duration_ps),
            f"{path}.pump_duration_ps"),
        marginal_bandwidth_nm=_as_float(
            data.get("marginal_bandwidth_nm", base.marginal_bandwidth_nm),
            f"{path}.marginal_bandwidth_nm"),
        pump_bandwidth_scale=_as_float(
            data.get("pump_bandwidth_scale", base.pump_bandwidth_scale),
            f"{path}.pump_bandwidth_scale"),
        grid_size=_as_int(data.get("grid_size", base.grid_size), f"{path}.grid_size"),
        span_fwhm=_as_float(data.get("span_fwhm", base.span_fwhm), f"{path}.span_fwhm"),
    )


def _run_from(data: Mapping[str, Any], path: str) -> RunSettings:
    allowed = ("seed", "batch_size", "power_mw", "pair_statistics",
               "pulses_per_setting")
    _check_keys(data, allowed, path)
    base = RunSettings()
    statistics = data.get("pair_statistics", base.pair_statistics)
    if not isinstance(statistics, str):
        raise ConfigError(f"{path}.pair_statistics: expected a string, got {statistics!r}")
    return RunSettings(
        seed=_as_int(data.get("seed", base.seed), f"{path}.seed"),
        batch_size=_as_int(data.get("batch_size", base.batch_size), f"{path}.batch_size"),
        power_mw=_as_float(data.get("power_mw", base.power_mw), f"{path}.power_mw"),
        pair_statistics=statistics,
        pulses_per_setting=_as_int(
            data.get("pulses_per_setting", base.pulses_per_setting),
            f"{path}.pulses_per_setting"),
    )


def _plates_from(data: Any, path: str) -> Tuple[WaveplateSetting, ...]:
    if data is None:
        return ()
    if not isinstance(data, Sequence) or isinstance(data, (str, bytes)):
        raise ConfigError(f"{path}: expected a list of waveplate entries, got {data!r}")
    plates: List[WaveplateSetting] = []
    for index, item in enumerate(data):
        entry_path = f"{path}[{index}]"
        if not isinstance(item, Mapping):
            raise ConfigError(f"{entry_path}: expected a mapping, got {item!r}")
        _check_keys(item, ("kind", "retardance_deg", "angle_deg"), entry_path)
        angle = math.radians(_as_float(item.get("angle_deg", 0.0), f"{entry_path}.angle_deg"))
        if "kind" in item:
            kind = item["kind"]
            if kind == "half":
                retardance = math.pi
            elif kind == "quarter":
                retardance = math.pi / 2.0
            else:
                raise ConfigError(f"{entry_path}.kind: expected 'half' or 'quarter', got {kind!r}")
        elif "retardance_deg" in item:
            retardance = math.radians(
                _as_float(item["retardance_deg"], f"{entry_path}.retardance_deg"))
        else:
            raise ConfigError(f"{entry_path}: needs 'kind' or 'retardance_deg'")
        plates.append(WaveplateSetting(retardance=retardance, fast_axis_angle=angle))
    return tuple(plates)


def _angle_from(data: Mapping[str, Any], key: str, path: str) -> Optional[float]:
    value = data.get(key, None)
    if value is None:
        return None
    return math.radians(_as_float(value, f"{path}.{key}"))


def _schedule_from(data: Any, path: str, default_pulses: int) -> Tuple[ScheduleEntry, ...]:
    if data is None:
        return ()
    if not isinstance(data, Sequence) or isinstance(data, (str, bytes)):
        raise ConfigError(f"{path}: expected a list of schedule entries, got {data!r}")
    entries: List[ScheduleEntry] = []
    for index, item in enumerate(data):
        entry_path = f"{path}[{index}]"
        if not isinstance(item, Mapping):
            raise ConfigError(f"{entry_path}: expected a mapping, got {item!r}")
        allowed = ("angle_1_deg", "angle_2_deg", "plates_1", "plates_2", "pulses", "label")
        _check_keys(item, allowed, entry_path)
        label = item.get("label", "")
        if not isinstance(label, str):
            raise ConfigError(f"{entry_path}.label: expected a string, got {label!r}")
        setting = AnalyzerSetting(
            angle_1=_angle_from(item, "angle_1_deg", entry_path),
            angle_2=_angle_from(item, "angle_2_deg", entry_path),
            plates_1=_plates_from(item.get("plates_1"), f"{entry_path}.plates_1"),
            plates_2=_plates_from(item.get("plates_2"), f"{entry_path}.plates_2"),
            label=label,
        )
        pulses = _as_int(item.get("pulses", default_pulses), f"{entry_path}.pulses")
        entries.append(ScheduleEntry(setting=setting, pulses=pulses))
    return tuple(entries)


def plan_from_dict(data: Optional[Mapping[str, Any]]) -> ExperimentPlan:
    """Build and validate a plan from a (possibly empty) nested mapping."""
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"top level: expected a mapping, got {type(data).__name__}")
    allowed = ("source", "loop", "detector_1", "detector_2", "spectral", "run", "schedule")
    _check_keys(data, allowed, "top level")
    for key in ("source", "loop", "detector_1", "detector_2", "spectral", "run"):
        section = data.get(key, {})
        if section is None:
            continue
        if not isinstance(section, Mapping):
            raise ConfigError(f"{key}: expected a mapping, got {section!r}")
    run = _run_from(data.get("run") or {}, "run")
    plan = ExperimentPlan(
        source=_source_from(data.get("source") or {}, "source"),
        loop=_loop_from(data.get("loop") or {}, "loop"),
        detector_1=_detector_from(data.get("detector_1") or {}, "detector_1"),
        detector_2=_detector_from(data.get("detector_2") or {}, "detector_2"),
        spectral=_spectral_from(data.get("spectral") or {}, "spectral"),
        run=run,
        schedule=_schedule_from(data.get("schedule"), "schedule", run.pulses_per_setting),
    )
    return validate_plan(plan)


def _plates_to_list(plates: Tuple[WaveplateSetting, ...]) -> List[Dict[str, Any]]:
    out: List[Dict[str, Any]] = []
    for plate in plates:
        entry: Dict[str, Any] = {"angle_deg": math.degrees(plate.fast_axis_angle)}
        if abs(plate.retardance - math.pi) < 1e-15:
            entry["kind"] = "half"
        elif abs(plate.retardance - math.pi / 2.0) < 1e-15:
            entry["kind"] = "quarter"
        else:
            entry["retardance_deg"] = math.degrees(plate.retardance)
        out.append(entry)
    return out


def plan_to_dict(plan: ExperimentPlan) -> Dict[str, Any]:
    """Nested mapping mirroring the file schema (angles in degrees)."""
    src, loop, spec, run = plan.source, plan.loop, plan.spectral, plan.run
    data: Dict[str, Any] = {
        "source": {
            "mean_pairs_per_pulse": src.mean_pairs_per_pulse,
            "reference_power_mw": src.reference_power_mw,
            "phase_offset_deg": math.degrees(src.phase_offset_rad),
            "crystal_position_mm": src.crystal_position_mm,
            "reference_position_mm": src.reference_position_mm,
            "phase_period_mm": src.phase_period_mm,
            "imbalance": src.imbalance,
            "coherence": src.coherence,
            "crosstalk": src.crosstalk,
            "crystal": {
                "grating_period_um": src.crystal.grating_period_um,
                "length_mm": src.crystal.length_mm,
                "opening_angle_deg": src.crystal.opening_angle_deg,
                "temperature_c": src.crystal.temperature_c,
            },
        },
        "loop": {
            "half_wave_deg": math.degrees(loop.half_wave_rad),
            "quarter_wave_deg": math.degrees(loop.quarter_wave_rad),
        },
        "detector_1": _detector_to_dict(plan.detector_1),
        "detector_2": _detector_to_dict(plan.detector_2),
        "spectral": {
            "center_wavelength_nm": spec.center_wavelength_nm,
            "pump_center_nm": spec.pump_center_nm,
            "pump_duration_ps": spec.pump_duration_ps,
            "marginal_bandwidth_nm": spec.marginal_bandwidth_nm,
            "pump_bandwidth_scale": spec.pump_bandwidth_scale,
            "grid_size": spec.grid_size,
            "span_fwhm": spec.span_fwhm,
        },
        "run": {
            "seed": run.seed,
            "batch_size": run.batch_size,
            "power_mw": run.power_mw,
            "pair_statistics": run.pair_statistics,
            "pulses_per_setting": run.pulses_per_setting,
        },
    }
    if plan.schedule:
        entries = []
        for entry in plan.schedule:
            setting = entry.setting
            item: Dict[str, Any] = {"pulses": entry.pulses}
            if setting.angle_1 is not None:
                item["angle_1_deg"] = math.degrees(setting.angle_1)
            if setting.angle_2 is not None:
                item["angle_2_deg"] = math.degrees(setting.angle_2)
            if setting.plates_1:
                item["plates_1"] = _plates_to_list(setting.plates_1)
            if setting.plates_2:
                item["plates_2"] = _plates_to_list(setting.plates_2)
            if setting.label:
                item["label"] = setting.label
            entries.append(item)
        data["schedule"] = entries
    return data


def _detector_to_dict(det: DetectorConfig) -> Dict[str, Any]:
    return {
        "efficiency": det.efficiency,
        "coupling_efficiency": det.coupling_efficiency,
        "dark_prob_per_gate": det.dark_prob_per_gate,
        "dead_time_us": det.dead_time_us,
        "gate_period_ns": det.gate_period_ns,
    }


def read_config_data(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a YAML or JSON configuration file into its raw nested mapping."""
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"config file not found: {file_path}")
    text = file_path.read_text(encoding="utf-8")
    try:
        if file_path.suffix.lower() == ".json":
            data = json.loads(text) if text.strip() else {}
        else:
            data = yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"could not parse {file_path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(
            f"{file_path}: expected a mapping, got {type(data).__name__}")
    return dict(data)


def flatten_keys(data: Mapping[str, Any], prefix: str = "") -> frozenset:
    """Dotted paths of every leaf key in a nested mapping."""
    keys = set()
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, Mapping):
            keys |= flatten_keys(value, prefix=f"{dotted}.")
        else:
            keys.add(dotted)
    return frozenset(keys)


def load_config(path: Union[str, Path]) -> ExperimentPlan:
    """Parse and validate a YAML or JSON experiment configuration file."""
    return plan_from_dict(read_config_data(path))


def save_config(plan: ExperimentPlan, path: Union[str, Path]) -> None:
    """Write a plan to a YAML (default) or JSON configuration file."""
    file_path = Path(path)
    data = plan_to_dict(plan)
    if file_path.suffix.lower() == ".json":
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    else:
        text = yaml.safe_dump(data, sort_keys=True, default_flow_style=False)
    file_path.write_text(text, encoding="utf-8")


def apply_overrides(plan: ExperimentPlan, overrides: Mapping[str, Any]) -> ExperimentPlan:
    """Apply dotted-key overrides (``section.key`` = value) on top of a plan.

    Values are interpreted exactly as the file schema does (angles in
    degrees with ``_deg`` keys).  Schedule entries cannot be overridden this
    way; pass a config file for that.
    """
    data = plan_to_dict(plan)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        if not 2 <= len(parts) <= 3:
            raise ConfigError(
                f"override {dotted!r}: expected section.key or section.sub.key")
        node: Dict[str, Any] = data
        for part in parts[:-1]:
            next_node = node.setdefault(part, {})
            if not isinstance(next_node, dict):
                raise ConfigError(f"override {dotted!r}: {part} is not a section")
            node = next_node
        node[parts[-1]] = value
    return plan_from_dict(data)
