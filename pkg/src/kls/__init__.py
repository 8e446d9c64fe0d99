"""Pulse-coupled frequency/phase synchronization with anchor-free relative
localization, plus a deterministic event-driven simulator reproducing the
ideal-sampling, sampled, and drift-compensated scenarios."""

__version__ = "0.1.0"

from .core import (
    SPEED_OF_LIGHT,
    PulseSchedule,
    SamplingModel,
    ScheduleRangeError,
    from_ns,
    propagation_delay,
    receive_phase,
    to_ns,
    transmit_phase,
)
from .localization import (
    DecomposedPhases,
    MdsResult,
    classical_mds,
    decompose,
    delays_from_symmetric,
    procrustes_align,
    relative_position_error,
)
from .node import (
    DivergenceError,
    NodeState,
    PhaseVector,
    ProtocolOrderError,
    decode_phase_vector,
    encode_phase_vector,
)
from .sim import (
    EventKind,
    HostSpec,
    HostTrace,
    ScenarioTrace,
    SimConfig,
    default_coupling_gain,
    quantize_time,
    run_scenario,
    scenario_preset,
)

__all__ = [
    "SPEED_OF_LIGHT",
    "PulseSchedule",
    "SamplingModel",
    "ScheduleRangeError",
    "from_ns",
    "propagation_delay",
    "receive_phase",
    "to_ns",
    "transmit_phase",
    "DecomposedPhases",
    "MdsResult",
    "classical_mds",
    "decompose",
    "delays_from_symmetric",
    "procrustes_align",
    "relative_position_error",
    "DivergenceError",
    "NodeState",
    "PhaseVector",
    "ProtocolOrderError",
    "decode_phase_vector",
    "encode_phase_vector",
    "EventKind",
    "HostSpec",
    "HostTrace",
    "ScenarioTrace",
    "SimConfig",
    "default_coupling_gain",
    "quantize_time",
    "run_scenario",
    "scenario_preset",
    "__version__",
]
