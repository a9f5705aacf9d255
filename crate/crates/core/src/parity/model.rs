use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Constant-rate quasiparticle tunneling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelingModel {
    /// Γ in 1/ms.
    gamma_per_ms: f64,
}

impl TunnelingModel {
    pub fn new(gamma_per_ms: f64) -> Result<Self> {
        if !(gamma_per_ms.is_finite() && gamma_per_ms > 0.0) {
            return Err(Error::invalid("gamma", format!("must be positive and finite, got {gamma_per_ms}")));
        }
        Ok(Self { gamma_per_ms })
    }

    pub fn from_tau_ms(tau_ms: f64) -> Result<Self> {
        if !(tau_ms.is_finite() && tau_ms > 0.0) {
            return Err(Error::invalid("tau", format!("must be positive and finite, got {tau_ms}")));
        }
        Self::new(1.0 / tau_ms)
    }

    /// τ = 30.2 ms.
    pub fn paper() -> Self {
        Self::from_tau_ms(30.2).expect("positive")
    }

    pub fn gamma_per_ms(&self) -> f64 {
        self.gamma_per_ms
    }

    pub fn tau_ms(&self) -> f64 {
        1.0 / self.gamma_per_ms
    }

    pub fn rate_per_us(&self) -> f64 {
        self.gamma_per_ms * 1e-3
    }

    pub fn rate_per_s(&self) -> f64 {
        self.gamma_per_ms * 1e3
    }
}

/// Readout and mapping fidelities.
///
/// Parity states are ordered `(even, odd)` and qubit outcomes
/// `(excited, ground)`; even parity maps to the excited symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityModel {
    pub f_g: f64,
    pub f_e: f64,
    pub f_m: f64,
}

impl FidelityModel {
    pub fn new(f_g: f64, f_e: f64, f_m: f64) -> Result<Self> {
        for (name, v) in [("f_g", f_g), ("f_e", f_e), ("f_m", f_m)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(Self { f_g, f_e, f_m })
    }

    pub fn perfect() -> Self {
        Self {
            f_g: 1.0,
            f_e: 1.0,
            f_m: 1.0,
        }
    }

    /// `F_g = 0.995`, `F_e = 0.951`, `F_m = 0.9937`.
    pub fn paper() -> Self {
        Self {
            f_g: 0.995,
            f_e: 0.951,
            f_m: 0.9937,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.f_g, self.f_e, self.f_m).map(|_| ())
    }

    pub fn effective_fidelity(&self) -> f64 {
        (self.f_g + self.f_e - 1.0) * self.f_m
    }

    /// Readout confusion matrix; column = true qubit state, row = reported.
    pub fn readout_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.f_e, 1.0 - self.f_g, 1.0 - self.f_e, self.f_g)
    }

    /// Mapping matrix; column = parity, row = qubit state.
    pub fn mapping_matrix(&self) -> Matrix2<f64> {
        let good = 0.5 * (1.0 + self.f_m);
        Matrix2::new(good, 1.0 - good, 1.0 - good, good)
    }

    /// `F_tot = F_r·F_map`: probability of each reported symbol given parity.
    pub fn total_matrix(&self) -> Matrix2<f64> {
        self.readout_matrix() * self.mapping_matrix()
    }

    /// `E = F_totᵀ·M_corr·F_tot`; `E_αβ` is the product of the expected
    /// reported values given parities α and β.
    pub fn correlation_matrix(&self) -> Matrix2<f64> {
        let f = self.total_matrix();
        f.transpose() * m_corr() * f
    }

    /// Probability that a single sample reports the true parity, for a
    /// stationary (equiprobable) parity.
    pub fn single_shot_accuracy(&self) -> f64 {
        let f = self.total_matrix();
        0.5 * (f[(0, 0)] + f[(1, 1)])
    }
}

/// Products of reported values: symbols `(excited, ground)` stand for
/// `(even, odd)`, i.e. `(−1, +1)`.
pub fn m_corr() -> Matrix2<f64> {
    Matrix2::new(1.0, -1.0, -1.0, 1.0)
}

/// `C(τ) = (F_e − F_g)² + F_eff²·e^{−2Γ|τ|}` for `τ ≠ 0`, `C(0) = 1`.
pub fn analytic_autocorr(fid: &FidelityModel, model: &TunnelingModel, lag_us: f64) -> f64 {
    if lag_us == 0.0 {
        return 1.0;
    }
    let offset = fid.f_e - fid.f_g;
    let feff = fid.effective_fidelity();
    offset * offset + feff * feff * (-2.0 * model.rate_per_us() * lag_us.abs()).exp()
}
