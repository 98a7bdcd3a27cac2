"""Macroscopic thick-spray layer: finite-volume gas, particle Vlasov phase, remainders."""

from .presets import PRESETS, PresetState, build_preset, relaxation_rate
from .remainder import AnalyticGas, RemainderEvaluator, SplineGas, remainder_diagnostics
from .solver import (
    CSV_COLUMNS,
    SimulationResult,
    SimulationSetup,
    SprayOptions,
    gas_step,
    run_simulation,
    spray_step,
    stable_dt,
    vlasov_step,
    volume_fraction,
)
from .state import (
    CFLError,
    GasField,
    NegativeTemperatureError,
    OverpackedError,
    ParticlePhase,
    RemainderReport,
    SolverError,
)
