//! Single-qubit Clifford group, (interleaved) randomized benchmarking and
//! the pseudo-Z construction.

mod channel;
mod fit;
mod group;
mod pseudo_z;
mod pulse_channels;
mod rb;

pub use channel::Channel;
pub use fit::{fit_decay, irb_fidelity, rb_fidelity, DecayFit, IrbFidelity};
pub use group::{clifford_group, gate_unitary, unitary_distance, CliffordElement, CliffordGroup};
pub use pseudo_z::{echo_pa, echo_pa_prime, ideal_pseudo_z, pseudo_z, PseudoZCertificate};
pub use pulse_channels::{physical_gate_channels, process_channel, pseudo_z_channel};
pub use rb::{
    random_rb_sequence, run_rb, simulate_sequence, ChannelModel, DepthResult, InterleavedGate,
    RbConfig, RbResult, RbSequence,
};
