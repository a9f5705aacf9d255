use std::f64::consts::PI;

use super::{Parity, TransmonParams};
use crate::linalg::{diagonal, CMatrix};
use crate::{Error, Result};

/// Hamiltonian at a given instant, in rad/ns.
#[derive(Debug, Clone)]
pub struct HamiltonianSnapshot {
    pub matrix: CMatrix,
    pub time_ns: f64,
}

impl HamiltonianSnapshot {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Level energies `2π(k·f_rel − (η/2)·k(k−1))` in rad/ns, with `f_rel` the
/// qubit frequency measured from `frame_ghz`.
pub fn level_energies(params: &TransmonParams, frame_ghz: f64) -> Vec<f64> {
    (0..params.levels())
        .map(|k| {
            let k = k as f64;
            2.0 * PI * (k * (params.f01_ghz - frame_ghz) - 0.5 * params.anharmonicity_ghz * k * (k - 1.0))
        })
        .collect()
}

/// Static transmon Hamiltonian in the lab frame.
pub fn build_static_hamiltonian(params: &TransmonParams) -> Result<HamiltonianSnapshot> {
    build_static_hamiltonian_in_frame(params, 0.0)
}

/// Static transmon Hamiltonian in a frame rotating at `frame_ghz`.
pub fn build_static_hamiltonian_in_frame(
    params: &TransmonParams,
    frame_ghz: f64,
) -> Result<HamiltonianSnapshot> {
    if params.levels() < 2 {
        return Err(Error::invalid(
            "levels",
            format!("Hamiltonian needs at least 2 levels, got {}", params.levels()),
        ));
    }
    Ok(HamiltonianSnapshot {
        matrix: diagonal(&level_energies(params, frame_ghz)),
        time_ns: 0.0,
    })
}

/// `cos(2π(n_g + (P − 1)/4))`, the parity-dependent charge modulation.
pub fn charge_modulation(ng: f64, parity: Parity) -> f64 {
    (2.0 * PI * (ng + (parity.value() as f64 - 1.0) / 4.0)).cos()
}

/// Diagonal shifts `−½·2π·ε_k·cos(2π(n_g + (P−1)/4))` in rad/ns.
pub fn dispersion_shifts(params: &TransmonParams, ng: f64, parity: Parity) -> Vec<f64> {
    let c = charge_modulation(ng, parity);
    params
        .epsilon_mhz
        .iter()
        .map(|eps| -0.5 * 2.0 * PI * eps * 1e-3 * c)
        .collect()
}

pub fn dispersion_term(params: &TransmonParams, ng: f64, parity: Parity) -> HamiltonianSnapshot {
    HamiltonianSnapshot {
        matrix: diagonal(&dispersion_shifts(params, ng, parity)),
        time_ns: 0.0,
    }
}

/// 0↔1 transition frequency (GHz) for the given offset charge and parity.
pub fn parity_frequency(params: &TransmonParams, ng: f64, parity: Parity) -> f64 {
    params.f01_ghz - 0.5 * params.epsilon10_mhz() * 1e-3 * charge_modulation(ng, parity)
}

/// `|f_e − f_o| = |ε10·cos(2π·n_g)|` in GHz.
pub fn parity_splitting(params: &TransmonParams, ng: f64) -> f64 {
    (parity_frequency(params, ng, Parity::Even) - parity_frequency(params, ng, Parity::Odd)).abs()
}
