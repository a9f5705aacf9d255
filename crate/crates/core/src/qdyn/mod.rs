//! Truncated-transmon dynamics: the parity-dependent Hamiltonian, collapse
//! operators and fixed-step RK4 Lindblad integration.

mod hamiltonian;
mod lindblad;
mod params;

pub use hamiltonian::{
    build_static_hamiltonian, build_static_hamiltonian_in_frame, charge_modulation,
    dispersion_shifts, dispersion_term, level_energies, parity_frequency, parity_splitting,
    HamiltonianSnapshot,
};
pub use lindblad::{
    basis_state, collapse_operators, lindblad_evolve, pure_dephasing_rate, state_fidelity,
    DensityMatrix, FnHamiltonian, LindbladIntegrator, StaticHamiltonian,
    TimeDependentHamiltonian, DEFAULT_DT_NS, TRACE_TOLERANCE,
};
pub use params::{dispersion_ladder, DephasingSource, Parity, TransmonParams};
