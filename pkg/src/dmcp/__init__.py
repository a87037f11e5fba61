"""Detuning-modulated composite pulses: synthesis, robustness, n-level lifts,
and coupled-waveguide mapping."""

from .dynamics import (
    CompositeSequence,
    ErrorModel,
    PulseSegment,
    SequenceKind,
    StateVector,
    apply,
    bloch_trajectory,
    compose,
    gate_distance,
    ideal_rotation,
    resonant_pulse,
    segment_propagator,
    target_rotation,
)
from .synthesis import (
    ConditionResidual,
    ConvergenceError,
    SynthesisProblem,
    VerificationReport,
    make_universal,
    pp_residuals,
    solve_pp,
    verify_sequence,
)
from .catalog import SEQUENCE_CATALOG, catalog_names, catalog_sequence, derived_sequence
from .robustness import (
    InitialStateSet,
    ScanResult,
    area_scan,
    decoherence_scan,
    haar_state,
    robustness_radius,
    scan_2d,
    state_fidelity,
    transfer_fidelity,
)
from .nlevel import (
    SpinSystem,
    nlevel_propagator,
    population_trajectory,
    spin_generators,
    wigner_lift,
)
from .photonics import (
    BetaCalibration,
    CouplingCalibration,
    fit_coupling,
    layout_from_sequence,
    propagate_intensity,
    widths_for_ratio,
)

__version__ = "0.1.0"
