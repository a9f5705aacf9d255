//! Pulse envelopes, sequence compilation and the closed-form phase model.

mod envelopes;
mod phase_model;
mod sequence;
mod simulate;

pub use envelopes::{
    drag_envelope, ng_of_t, smoothed_square_value, GateConversion, GatePulseNetZero,
    GateSettings, MicrowavePulse, PhysicalGate, SmoothedSquare, DEGENERACY_NG,
};
pub use phase_model::{
    displacement_for_phase, echo_phase_difference, flat_for_phase, ideal_phase_model,
    mapping_targets, parity_phase, refocused_phase_difference, theoretical_duration_ns,
    IdealTrajectory,
};
pub use sequence::{
    compile_charge_monitor, compile_echo_cpm, compile_pseudo_z, compile_ramsey_cpm,
    compile_single_gate, FinalGate, PulseSequence, Segment, SegmentKind,
};
pub use simulate::{
    calibrate_drag, gate_fidelity, mapping_fidelity, simulate_from, simulate_sequence, Checkpoint,
    MappingReport, ParityOutcome, SequenceHamiltonian, SimOptions, SimulationResult,
};
