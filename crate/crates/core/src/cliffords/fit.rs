use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::lsq::{levenberg_marquardt, LsqOptions};
use crate::{Error, Result};

/// Two-sided 95 % normal quantile used for confidence intervals.
const Z95: f64 = 1.959_963_984_540_054;

/// `A·p^m + B` fitted to RB survivals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    /// Standard errors of `(A, p, B)`; `None` when the covariance is unavailable.
    pub std_errors: Option<[f64; 3]>,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl DecayFit {
    /// 95 % confidence half-widths of `(A, p, B)`.
    pub fn confidence_intervals(&self) -> Option<[f64; 3]> {
        self.std_errors.map(|s| s.map(|v| Z95 * v))
    }

    pub fn p_std(&self) -> Option<f64> {
        self.std_errors.map(|s| s[1])
    }

    pub fn eval(&self, m: f64) -> f64 {
        self.a * self.p.powf(m) + self.b
    }
}

/// Least-squares fit of `A·p^m + B`.
///
/// Starts from `B = ½`, `A = y(m_min) − ½` and `p` from a log-linear
/// regression of `y − ½`. Depths may repeat (one point per sequence).
pub fn fit_decay(depths: &[f64], survivals: &[f64]) -> Result<DecayFit> {
    if depths.len() != survivals.len() {
        return Err(Error::DimensionMismatch {
            expected: depths.len(),
            actual: survivals.len(),
        });
    }
    let mut distinct: Vec<f64> = depths.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid("depths", "need at least 3 distinct depths"));
    }
    if depths.iter().chain(survivals).any(|v| !v.is_finite()) {
        return Err(Error::invalid("survivals", "non-finite value"));
    }

    let b0 = 0.5;
    let m_min = distinct[0];
    let first: Vec<f64> = depths
        .iter()
        .zip(survivals)
        .filter(|(m, _)| **m == m_min)
        .map(|(_, y)| *y)
        .collect();
    let y_first = first.iter().sum::<f64>() / first.len() as f64;
    let a0 = y_first - b0;

    let pts: Vec<(f64, f64)> = depths
        .iter()
        .zip(survivals)
        .filter(|(_, y)| (*y - b0) * a0.signum() > 1e-12)
        .map(|(m, y)| (*m, ((y - b0) * a0.signum()).ln()))
        .collect();
    let p0 = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 { (sxy / sxx).exp().clamp(1e-6, 1.0) } else { 0.99 }
    } else {
        0.99
    };

    let x = DVector::from_column_slice(depths);
    let y = DVector::from_column_slice(survivals);
    let residuals = |q: &[f64]| {
        let (a, p, b) = (q[0], q[1], q[2]);
        if !(p > 0.0) {
            return None;
        }
        Some(DVector::from_iterator(x.len(), x.iter().zip(y.iter()).map(|(m, y)| a * p.powf(*m) + b - y)))
    };
    let jacobian = |q: &[f64]| {
        let (a, p) = (q[0], q[1]);
        DMatrix::from_fn(x.len(), 3, |i, j| {
            let m = x[i];
            match j {
                0 => p.powf(m),
                1 => a * m * p.powf(m - 1.0),
                _ => 1.0,
            }
        })
    };
    let opts = LsqOptions {
        max_iterations: 1000,
        step_tolerance: 1e-15,
        cost_tolerance: 1e-20,
        ..LsqOptions::default()
    };
    let sol = levenberg_marquardt(residuals, jacobian, &[a0, p0, b0], opts)
        .ok_or_else(|| Error::FitFailure("initial guess outside the model domain".into()))?;
    if !sol.converged {
        return Err(Error::FitNotConverged {
            iterations: sol.iterations,
            residual_norm: sol.residual_norm,
        });
    }
    let p = sol.params[1];
    if !(p > 0.0 && p <= 1.0 + 1e-9) {
        return Err(Error::FitFailure(format!("decay parameter p = {p} outside (0, 1]")));
    }
    let std_errors = sol.std_errors().map(|s| [s[0], s[1], s[2]]);
    Ok(DecayFit {
        a: sol.params[0],
        p: p.min(1.0),
        b: sol.params[2],
        std_errors,
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
    })
}

/// Average gate fidelity `1 − (1 − p)/2` of a single-qubit RB decay.
pub fn rb_fidelity(p_ref: f64) -> Result<f64> {
    if !(p_ref > 0.0 && p_ref <= 1.0) {
        return Err(Error::invalid("p_ref", format!("must lie in (0, 1], got {p_ref}")));
    }
    Ok(1.0 - (1.0 - p_ref) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrbFidelity {
    pub fidelity: f64,
    /// `p_int > p_ref`: the interleaved decay is slower than the reference.
    pub unphysical: bool,
}

/// Interleaved gate fidelity `1 − (1 − p_int/p_ref)/2`.
pub fn irb_fidelity(p_int: f64, p_ref: f64) -> Result<IrbFidelity> {
    for (name, v) in [("p_int", p_int), ("p_ref", p_ref)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::invalid(name, format!("must lie in (0, 1], got {v}")));
        }
    }
    Ok(IrbFidelity {
        fidelity: 1.0 - (1.0 - p_int / p_ref) / 2.0,
        unphysical: p_int > p_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_model_recovery() {
        let depths: Vec<f64> = [1.0, 10.0, 50.0, 100.0, 200.0, 400.0].to_vec();
        let ys: Vec<f64> = depths.iter().map(|m| 0.5 * 0.998f64.powf(*m) + 0.5).collect();
        let fit = fit_decay(&depths, &ys).unwrap();
        assert!((fit.a - 0.5).abs() < 1e-9);
        assert!((fit.p - 0.998).abs() < 1e-9);
        assert!((fit.b - 0.5).abs() < 1e-9);
    }

    #[test]
    fn needs_three_depths() {
        assert!(fit_decay(&[1.0, 1.0, 5.0], &[0.9, 0.9, 0.8]).is_err());
        assert!(fit_decay(&[1.0, 5.0], &[0.9]).is_err());
    }

    #[test]
    fn fidelity_formulas() {
        assert!((rb_fidelity(0.9992).unwrap() - 0.9996).abs() < 1e-15);
        assert_eq!(irb_fidelity(0.997, 0.997).unwrap().fidelity, 1.0);
        let f = irb_fidelity(0.99, 0.98).unwrap();
        assert!(f.unphysical && f.fidelity > 1.0);
        assert!(irb_fidelity(0.0, 0.9).is_err());
    }
}
