"""Mirror-game joint improvisation engine.

Virtual players are second-order oscillators whose coupling input is chosen
per sampling window by an optimal-control problem balancing position
matching, signature tracking, velocity matching and effort.  The package
runs batch dyad experiments, computes the coordination metrics, and serves a
real-time virtual player over WebSocket.
"""

from .control import (
    Costate,
    CouplingWeights,
    PartnerEstimate,
    WindowProblem,
    WindowSolution,
    costate_rhs,
    estimate_partner,
    optimal_control,
    solve_window_coupled,
    solve_window_single,
    verify_second_variation,
    window_cost,
)
from .errors import (
    DegenerateSamples,
    EmptyGrid,
    GridMismatch,
    LengthMismatch,
    MirrorGameError,
    NonFiniteState,
    NonMonotonicTime,
    SchemaViolation,
    TooShort,
)
from .experiments import (
    TRIAL_ORDER,
    WEIGHT_PRESETS,
    DyadBatch,
    DyadConfig,
    PlayerSetup,
    TrialAnalysis,
    TrialRecord,
    analyze_trial,
    default_config,
    run_dyad_batch,
    run_vp_vp_trial,
)
from .liveplay import (
    ScriptedSource,
    SessionConfig,
    SessionState,
    replay_hp,
    run_scripted_session,
    session_report,
    session_tick,
)
from .metrics import (
    BoxStats,
    DistanceMatrix,
    PhasePDF,
    PhaseSeries,
    classical_mds,
    emd,
    emd_matrix,
    phase_pdf,
    rms_position_error,
    summary_stats,
    wavelet_relative_phase,
)
from .oscillator import HkbParams, LinearParams, PlayerState, hkb_accel, linear_accel, rk4_step
from .signature import (
    Signature,
    VelocityPDF,
    kde_pdf,
    load_positions,
    load_signature,
    save_positions,
    save_signature,
    signature_at,
    signature_values,
    synth_signature,
    velocity_from_positions,
)

__version__ = "0.1.0"
