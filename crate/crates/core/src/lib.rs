//! Pulse-level simulation and statistical analysis for charge-parity
//! detection on an offset-charge-tunable transmon.
//!
//! The crate is split along the measurement chain:
//!
//! - [`qdyn`]: truncated-transmon operators, the parity-dependent
//!   Hamiltonian, and fixed-step Lindblad integration.
//! - [`pulses`]: DRAG microwave envelopes, erf-edged net-zero gate pulses,
//!   sequence compilation (EchoCPM, Ramsey CPM, charge monitor, pseudo-Z)
//!   and the closed-form phase model used as an oracle.
//! - [`cliffords`]: the single-qubit Clifford group, randomized and
//!   interleaved benchmarking, decay fitting and pseudo-Z certification.
//! - [`parity`]: quasiparticle tunneling as a Poisson process, ideal and
//!   measured random-telegraph traces, the analytic autocorrelation.
//! - [`spectral`]: Welch periodograms and the Lorentzian PSD fit.
//! - [`calib`]: simulated calibration experiments built from the above.
//!
//! Units: time in ns inside the pulse-level simulator, µs for parity traces,
//! frequencies in GHz (MHz for charge dispersion), angular rates in rad/ns.

pub mod calib;
pub mod cliffords;
mod error;
pub mod linalg;
pub mod lsq;
pub mod parity;
pub mod pulses;
pub mod qdyn;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
