use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use serde::Serialize;

use super::welch::Psd;
use crate::lsq::{levenberg_marquardt, LsqOptions};
use crate::parity::FidelityModel;
use crate::{Error, Result};

/// `4Γ/((2Γ)² + (2πf)²)`, the spectrum of a unit telegraph signal.
pub fn lorentzian(gamma_per_s: f64, f_hz: f64) -> f64 {
    let w = 2.0 * PI * f_hz;
    4.0 * gamma_per_s / (4.0 * gamma_per_s * gamma_per_s + w * w)
}

/// `F_eff²·4Γ/((2Γ)² + (2πf)²) + [1 − F_eff² − (F_e − F_g)²]·dt`.
pub fn model_psd(f_eff: f64, gamma_per_s: f64, fid: &FidelityModel, dt_s: f64, f_hz: f64) -> f64 {
    let offset = fid.f_e - fid.f_g;
    f_eff * f_eff * lorentzian(gamma_per_s, f_hz) + (1.0 - f_eff * f_eff - offset * offset) * dt_s
}

/// Expected change of a rectangular-window periodogram of a unit telegraph
/// signal at Fourier bin `n` of an `N`-sample segment, relative to the
/// infinite-record spectrum.
pub fn finite_segment_correction(gamma_per_s: f64, dt_s: f64, segment_len: usize, bin: usize) -> f64 {
    let n = segment_len as f64;
    let rho = (-2.0 * gamma_per_s * dt_s).exp();
    let omega = 2.0 * PI * bin as f64 / n;
    let z = Complex64::from_polar(rho, -omega);
    let one = Complex64::new(1.0, 0.0);
    let ratio = z / ((one - z) * (one - z));
    -2.0 * dt_s / n * (1.0 - rho.powf(n)) * ratio.re
}

/// `F_m` implied by an effective fidelity and known readout fidelities.
pub fn mapping_fidelity_from_feff(f_eff: f64, fid: &FidelityModel) -> f64 {
    f_eff / (fid.f_g + fid.f_e - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fit `ln S` (multiplicative periodogram errors) instead of relative
    /// linear residuals.
    pub log_space: bool,
    /// Model the expected finite-segment periodogram rather than the
    /// infinite-record Lorentzian.
    pub finite_segment_correction: bool,
    /// Remove the `E[ln χ²_{2K}/2K]` offset of averaged log-periodograms.
    pub log_bias_correction: bool,
    pub lsq: LsqOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            log_space: true,
            finite_segment_correction: true,
            log_bias_correction: true,
            lsq: LsqOptions::default(),
        }
    }
}

impl FitOptions {
    /// Plain Eq.-style model with no estimator corrections, for fitting
    /// noiseless model samples.
    pub fn bare() -> Self {
        Self {
            finite_segment_correction: false,
            log_bias_correction: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorentzianFit {
    pub f_eff_hat: f64,
    /// Γ in 1/s.
    pub gamma_hat: f64,
    /// White floor in 1/Hz.
    pub floor_hat: f64,
    /// Covariance of `(f_eff, gamma, floor)`.
    #[serde(skip)]
    pub covariance: Matrix3<f64>,
    pub std_errors: [f64; 3],
    pub residual_norm: f64,
    pub iterations: usize,
    pub n_points: usize,
    pub f_m_hat: Option<f64>,
}

impl LorentzianFit {
    pub fn tau_hat_ms(&self) -> f64 {
        1e3 / self.gamma_hat
    }

    pub fn tau_std_ms(&self) -> f64 {
        self.tau_hat_ms() * self.std_errors[1] / self.gamma_hat
    }

    pub fn corner_hz(&self) -> f64 {
        self.gamma_hat / PI
    }

    /// 95 % intervals for `(f_eff, gamma, floor)`.
    pub fn confidence_intervals(&self) -> [(f64, f64); 3] {
        let p = [self.f_eff_hat, self.gamma_hat, self.floor_hat];
        std::array::from_fn(|i| (p[i] - 1.96 * self.std_errors[i], p[i] + 1.96 * self.std_errors[i]))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0))
}

/// Initial `(F², Γ, floor)` from the band edges and the half-power crossing.
fn initial_guess(psd: &Psd) -> Result<[f64; 3]> {
    let f = &psd.frequencies_hz;
    let (f_lo, f_hi) = (f[0], f[f.len() - 1]);
    let pick = |keep: &dyn Fn(f64) -> bool| -> Vec<f64> {
        f.iter().zip(&psd.values).filter(|(x, _)| keep(**x)).map(|(_, s)| *s).collect()
    };
    let floor = median(pick(&|x| x >= f_hi / 10.0));
    let plateau = median(pick(&|x| x <= f_lo * 10.0));
    if !(plateau > floor && floor > 0.0) {
        return Err(Error::FitFailure(format!(
            "no Lorentzian excess above the floor (plateau {plateau:e}, floor {floor:e})"
        )));
    }
    let half = floor + 0.5 * (plateau - floor);
    let f_half = f
        .iter()
        .zip(&psd.values)
        .find(|(_, s)| **s < half)
        .map(|(x, _)| *x)
        .unwrap_or(f_lo);
    let gamma = PI * f_half;
    Ok([(plateau - floor) * gamma, gamma, floor])
}

/// Weighted least-squares fit of the Lorentzian-plus-floor model to a
/// Welch estimate, parametrized by `ln F²`, `ln Γ` and `ln floor`.
pub fn fit_lorentzian(psd: &Psd, known_fid: Option<&FidelityModel>, opts: &FitOptions) -> Result<LorentzianFit> {
    if psd.len() < 4 {
        return Err(Error::invalid("psd", format!("need at least 4 bins, got {}", psd.len())));
    }
    if psd.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::FitFailure("PSD contains non-positive or non-finite values".into()));
    }
    if let Some(f) = known_fid {
        f.validate()?;
    }
    let [a0, g0, c0] = initial_guess(psd)?;
    let dt = psd.dt_s;
    let bins: Vec<usize> = psd
        .frequencies_hz
        .iter()
        .map(|f| (f * psd.segment_len as f64 * dt).round() as usize)
        .collect();
    let k = psd.n_segments.max(1) as f64;
    let weight = k.sqrt();
    let log_offset = if opts.log_space && opts.log_bias_correction {
        digamma(k) - k.ln()
    } else {
        0.0
    };
    let log_data: Vec<f64> = psd.values.iter().map(|v| v.ln()).collect();

    let model_at = |q: &[f64], i: usize| -> f64 {
        let (amp, gamma, floor) = (q[0].exp(), q[1].exp(), q[2].exp());
        let mut shape = lorentzian(gamma, psd.frequencies_hz[i]);
        if opts.finite_segment_correction {
            shape += finite_segment_correction(gamma, dt, psd.segment_len, bins[i]);
        }
        amp * shape + floor
    };
    let residuals = |q: &[f64]| -> Option<DVector<f64>> {
        if q.iter().any(|v| !v.is_finite() || v.abs() > 700.0) {
            return None;
        }
        let mut r = DVector::zeros(psd.len());
        for i in 0..psd.len() {
            let m = model_at(q, i);
            if !(m > 0.0) {
                return None;
            }
            r[i] = if opts.log_space {
                weight * (m.ln() + log_offset - log_data[i])
            } else {
                weight * (m - psd.values[i]) / m
            };
        }
        Some(r)
    };
    let jacobian = |q: &[f64]| -> DMatrix<f64> {
        let base = residuals(q).expect("jacobian evaluated inside the domain");
        let mut jac = DMatrix::zeros(psd.len(), 3);
        for j in 0..3 {
            let h = 1e-6 * q[j].abs().max(1.0);
            let mut plus = q.to_vec();
            plus[j] += h;
            let mut minus = q.to_vec();
            minus[j] -= h;
            match (residuals(&plus), residuals(&minus)) {
                (Some(rp), Some(rm)) => jac.set_column(j, &((rp - rm) / (2.0 * h))),
                (Some(rp), None) => jac.set_column(j, &((rp - &base) / h)),
                (None, Some(rm)) => jac.set_column(j, &((&base - rm) / h)),
                (None, None) => {}
            }
        }
        jac
    };

    let q0 = [a0.ln(), g0.ln(), c0.ln()];
    let sol = levenberg_marquardt(residuals, jacobian, &q0, opts.lsq)
        .ok_or_else(|| Error::FitFailure("initial guess outside the model domain".into()))?;
    if !sol.converged {
        return Err(Error::FitNotConverged {
            iterations: sol.iterations,
            residual_norm: sol.residual_norm,
        });
    }
    let q = &sol.params;
    let (f_eff, gamma, floor) = ((0.5 * q[0]).exp(), q[1].exp(), q[2].exp());
    let (f_lo, f_hi) = (psd.frequencies_hz[0], psd.frequencies_hz[psd.len() - 1]);
    let corner = gamma / PI;
    if !(f_lo..=f_hi).contains(&corner) {
        return Err(Error::CornerOutsideBand {
            corner_hz: corner,
            low_hz: f_lo,
            high_hz: f_hi,
        });
    }
    let cov_q = sol.covariance.ok_or(Error::SingularCovariance)?;
    let d = Matrix3::from_diagonal(&nalgebra::Vector3::new(0.5 * f_eff, gamma, floor));
    let cov_q = Matrix3::from_fn(|i, j| cov_q[(i, j)]);
    let covariance = d * cov_q * d;
    let std_errors: [f64; 3] = std::array::from_fn(|i| covariance[(i, i)].max(0.0).sqrt());
    if std_errors[1] > gamma || std_errors[0] > 0.5 * f_eff {
        return Err(Error::FitFailure(format!(
            "Lorentzian not resolved above the floor (F_eff = {f_eff:.3} ± {:.3}, Γ = {gamma:.3e} ± {:.3e} 1/s)",
            std_errors[0], std_errors[1]
        )));
    }
    let f_eff_hat = f_eff.min(1.0);
    Ok(LorentzianFit {
        f_eff_hat,
        gamma_hat: gamma,
        floor_hat: floor,
        covariance,
        std_errors,
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
        n_points: psd.len(),
        f_m_hat: known_fid.map(|fid| mapping_fidelity_from_feff(f_eff_hat, fid)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f_eff: f64, gamma: f64, fid: &FidelityModel, dt: f64, n: usize) -> Psd {
        let frequencies_hz: Vec<f64> = (1..=n / 2).map(|k| k as f64 / (n as f64 * dt)).collect();
        let values = frequencies_hz.iter().map(|&f| model_psd(f_eff, gamma, fid, dt, f)).collect();
        Psd {
            frequencies_hz,
            values,
            dt_s: dt,
            n_segments: 1,
            segment_len: n,
        }
    }

    #[test]
    fn model_landmarks() {
        let fid = FidelityModel::paper();
        let g = 1e3 / 30.2;
        let dt = 4e-6;
        let floor = (1.0 - 0.94f64.powi(2) - (fid.f_e - fid.f_g).powi(2)) * dt;
        assert!((model_psd(0.94, g, &fid, dt, 0.0) - (0.94f64.powi(2) / g + floor)).abs() < 1e-15);
        assert!((lorentzian(g, g / PI) - 0.5 * lorentzian(g, 0.0)).abs() < 1e-15);
        let plateau = model_psd(0.934, g, &fid, dt, 0.0);
        assert!((plateau - 0.934f64.powi(2) * 0.0302).abs() < 1e-5);
    }

    #[test]
    fn amplitude_scales_with_feff_squared() {
        let fid = FidelityModel::paper();
        let (g, dt, f) = (20.0, 1e-5, 3.0);
        let lor = |fe: f64| model_psd(fe, g, &fid, dt, f) - (1.0 - fe * fe - (fid.f_e - fid.f_g).powi(2)) * dt;
        assert!((lor(0.5) / lor(0.9) - (0.5f64 / 0.9).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn exact_recovery_from_model_samples() {
        let fid = FidelityModel::paper();
        let psd = synthetic(0.94, 1e3 / 30.2, &fid, 4e-6, 1 << 16);
        let fit = fit_lorentzian(&psd, Some(&fid), &FitOptions::bare()).unwrap();
        assert!((fit.f_eff_hat / 0.94 - 1.0).abs() < 1e-6, "{}", fit.f_eff_hat);
        assert!((fit.tau_hat_ms() / 30.2 - 1.0).abs() < 1e-6, "{}", fit.tau_hat_ms());
        assert!((fit.f_m_hat.unwrap() - 0.94 / 0.946).abs() < 1e-5);
    }

    #[test]
    fn linear_space_also_recovers() {
        let fid = FidelityModel::perfect();
        let psd = synthetic(0.8, 50.0, &fid, 1e-5, 1 << 14);
        let opts = FitOptions {
            log_space: false,
            ..FitOptions::bare()
        };
        let fit = fit_lorentzian(&psd, None, &opts).unwrap();
        assert!((fit.f_eff_hat / 0.8 - 1.0).abs() < 1e-6);
        assert!((fit.gamma_hat / 50.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unresolvable_corner_is_reported() {
        use crate::parity::{generate_traces, TunnelingModel};
        // τ = 1 µs sampled every 100 µs: the trace is white.
        let model = TunnelingModel::from_tau_ms(1e-3).unwrap();
        for seed in 0..4 {
            let (_, m) = generate_traces(&model, Some(&FidelityModel::paper()), 100.0, 1 << 16, seed).unwrap();
            let psd = super::super::periodogram(&m.unwrap(), 4096, 0.5).unwrap();
            let err = fit_lorentzian(&psd, None, &FitOptions::default()).unwrap_err();
            assert!(err.is_numerical(), "{err}");
        }
    }

    #[test]
    fn mapping_from_feff() {
        let m = mapping_fidelity_from_feff(0.934, &FidelityModel::paper());
        assert!((m - 0.987315).abs() < 1e-6, "{m}");
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0) + 0.5772156649015329).abs() < 1e-10);
        assert!((digamma(10.0) - 2.251752589066721).abs() < 1e-10);
    }

    #[test]
    fn finite_segment_correction_matches_direct_sum() {
        let (g, dt, n) = (300.0f64, 1e-4f64, 64usize);
        let rho: f64 = (-2.0 * g * dt).exp();
        for bin in [1usize, 3, 17, 32] {
            let w = 2.0 * PI * bin as f64 / n as f64;
            // E|X_n|²/N for R(m) = ρ^|m|, minus the infinite-record value.
            let finite: f64 = (-(n as i64) + 1..n as i64)
                .map(|m| (1.0 - m.unsigned_abs() as f64 / n as f64) * rho.powi(m.abs() as i32) * (w * m as f64).cos())
                .sum();
            let infinite = (1.0 - rho * rho) / (1.0 - 2.0 * rho * w.cos() + rho * rho);
            let c = finite_segment_correction(g, dt, n, bin);
            assert!(((finite - infinite) * dt - c).abs() < 1e-12, "{bin}");
        }
    }
}
