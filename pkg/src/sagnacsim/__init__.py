"""Desk-scale simulator for a pulsed Sagnac-loop photon-pair source.

Monte Carlo gated-detector counting plus closed-form spectral and
polarization models: correlation fringes, Bell-test statistics, detector
throughput limits, Schmidt-mode purity, and two-qubit state tomography,
with a scenario CLI that writes CSV/JSON reports and figures.
"""

from .analysis import (
    ChshResult,
    CountsRecord,
    FringeFit,
    TomographyResult,
    chsh,
    chsh_from_records,
    chsh_poisson_sigma,
    corrected_pair_mean,
    correlation_coefficient,
    estimate_pair_probability,
    expected_S,
    fit_fringe,
    net_coincidences,
    subtract_accidentals,
    tomography,
)
from .config import (
    ConfigError,
    DetectorConfig,
    ExperimentPlan,
    LoopSettings,
    RunSettings,
    ScheduleEntry,
    SourceConfig,
    SpectralConfig,
    default_plan,
    load_config,
    save_config,
)
from .detectors import (
    accidental_rate,
    coincidence_to_accidental_ratio,
    max_singles_rate,
    max_trigger_rate,
)
from .experiment import (
    SweepResult,
    run_chsh,
    run_pulse_train,
    sweep_crystal_position,
    sweep_polarizer,
    sweep_power,
)
from .polarization import (
    AnalyzerSetting,
    WaveplateSetting,
    bell_state,
    chsh_value,
    coincidence_probability,
    fidelity,
    ideal_correlation,
)
from .scenarios import (
    ScenarioError,
    ScenarioResult,
    UnknownScenarioError,
    run_scenario,
)
from .source import emitted_density_matrix, pair_mean_per_pulse, prepare_state
from .spectral import (
    JointSpectrum,
    SchmidtResult,
    apply_filter,
    build_jsa,
    hom_coincidence,
    schmidt_purity,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AnalyzerSetting",
    "ChshResult",
    "ConfigError",
    "CountsRecord",
    "DetectorConfig",
    "ExperimentPlan",
    "FringeFit",
    "JointSpectrum",
    "LoopSettings",
    "RunSettings",
    "ScenarioError",
    "ScenarioResult",
    "ScheduleEntry",
    "SchmidtResult",
    "SourceConfig",
    "SpectralConfig",
    "SweepResult",
    "TomographyResult",
    "UnknownScenarioError",
    "WaveplateSetting",
    "accidental_rate",
    "apply_filter",
    "bell_state",
    "build_jsa",
    "chsh",
    "chsh_from_records",
    "chsh_poisson_sigma",
    "chsh_value",
    "coincidence_probability",
    "coincidence_to_accidental_ratio",
    "corrected_pair_mean",
    "correlation_coefficient",
    "default_plan",
    "emitted_density_matrix",
    "estimate_pair_probability",
    "expected_S",
    "fidelity",
    "fit_fringe",
    "hom_coincidence",
    "ideal_correlation",
    "load_config",
    "max_singles_rate",
    "max_trigger_rate",
    "net_coincidences",
    "pair_mean_per_pulse",
    "prepare_state",
    "run_chsh",
    "run_pulse_train",
    "run_scenario",
    "save_config",
    "schmidt_purity",
    "subtract_accidentals",
    "sweep_crystal_position",
    "sweep_polarizer",
    "sweep_power",
    "tomography",
]
