"""ftsim: seeded fault-injection simulation of redundant distributed processes.

Processes carry hidden bit/phase fault flags flipped by random coin tosses;
pairwise communication propagates the flags; logical processes add
triple-modular redundancy and concatenation; detectors extract parity
syndromes through disposable ancillae; a corrector tracks inferred faults
and fixes outcomes at readout.  The experiment layer measures logical
failure rates, threshold behaviour and communication cost.
"""

__version__ = "0.1.0"

from .core import (
    BITS,
    Basis,
    CostLedger,
    DEFAULT_FAULT_LOCATIONS,
    FaultBox,
    FaultLocation,
    Process,
    RngStream,
    StateSet,
    communicate,
    derive_seed,
    init_process,
    local_op,
    terminate,
    toss,
)
from .encoding import (
    LogicalProcess,
    OpDescriptor,
    PairingStrategy,
    concatenate,
    decode_majority,
    encode,
    logical_communicate,
    logical_local_op,
    readout_logical,
)
from .detection import (
    FaultDetector,
    Syndrome,
    decode_syndrome,
    detection_round,
    extract_syndrome,
)
from .correction import (
    CorrectorStats,
    FaultCorrector,
    FaultFrame,
    FrameEntry,
    direct_correct,
)
from .experiments import (
    CostComparisonResult,
    ExperimentConfig,
    ExperimentResult,
    FaultInjection,
    OracleResult,
    OracleScenario,
    SweepResult,
    SweepRow,
    config_violations,
    cost_comparison,
    exhaustive_oracle,
    memory_experiment,
    threshold_sweep,
    wilson_interval,
)
from .errors import (
    ConfigurationError,
    CrashStopViolation,
    EncodingError,
    SimulationError,
    TrackingError,
)
