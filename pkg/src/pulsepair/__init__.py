"""Pulsed polarization-entangled photon-pair experiments: states, source
model, coincidence counting Monte Carlo, fringe analysis and a CLI."""

from .analysis import (
    FringeFit,
    FringePoint,
    FringeScan,
    chsh,
    fit_fringe,
    polarization_scan,
    visibility,
)
from .counting import (
    CountRecord,
    DetectorConfig,
    ExpectedRates,
    ModelRegimeWarning,
    RunConfig,
    expected_rates,
    pair_click_rate,
    simulate_run,
    subtract_accidentals,
)
from .polarization import (
    BASIS_LABELS,
    DensityMatrix,
    OneQubitOperator,
    PureState,
    TwoQubitOperator,
    apply_local,
    bell_state,
    coincidence_probability,
    concurrence,
    correlation,
    half_waveplate,
    identity,
    phase_shifter,
    polarizer,
    pure_to_density,
    purity,
)
from .source import (
    SourceConfig,
    amplitude_ratio,
    bell_transform,
    emitted_state,
    mixed_state,
)

__version__ = "0.1.0"

__all__ = [
    "BASIS_LABELS",
    "CountRecord",
    "DensityMatrix",
    "DetectorConfig",
    "ExpectedRates",
    "FringeFit",
    "FringePoint",
    "FringeScan",
    "ModelRegimeWarning",
    "OneQubitOperator",
    "PureState",
    "RunConfig",
    "SourceConfig",
    "TwoQubitOperator",
    "amplitude_ratio",
    "apply_local",
    "bell_state",
    "bell_transform",
    "chsh",
    "coincidence_probability",
    "concurrence",
    "correlation",
    "emitted_state",
    "expected_rates",
    "fit_fringe",
    "half_waveplate",
    "identity",
    "mixed_state",
    "pair_click_rate",
    "phase_shifter",
    "polarization_scan",
    "polarizer",
    "pure_to_density",
    "purity",
    "simulate_run",
    "subtract_accidentals",
    "visibility",
]
