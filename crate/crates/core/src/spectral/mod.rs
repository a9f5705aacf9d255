//! Welch power spectral densities of parity traces and the Lorentzian fit
//! that recovers the effective fidelity and tunneling rate.

mod fit;
mod welch;

pub use fit::{
    finite_segment_correction, fit_lorentzian, lorentzian, mapping_fidelity_from_feff, model_psd, FitOptions,
    LorentzianFit,
};
pub use welch::{periodogram, welch, Psd, DEFAULT_OVERLAP, DEFAULT_SEGMENT_LEN, MIN_SEGMENT_LEN};
