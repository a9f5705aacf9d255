//! Small Levenberg–Marquardt solver used by the decay and Lorentzian fits.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsqOptions {
    pub max_iterations: usize,
    /// Relative step size below which the iteration stops.
    pub step_tolerance: f64,
    /// Relative cost decrease below which the iteration stops.
    pub cost_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_tolerance: 1e-12,
            cost_tolerance: 1e-16,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub params: Vec<f64>,
    /// `s²·(JᵀJ)⁻¹` with `s² = RSS/(n − p)`; `None` when `JᵀJ` is singular.
    pub covariance: Option<DMatrix<f64>>,
    /// Euclidean norm of the final residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LsqSolution {
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.covariance
            .as_ref()
            .map(|c| (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect())
    }
}

/// Minimizes `‖r(p)‖²`.
///
/// `residuals` returns `None` for parameter vectors outside the model's
/// domain; such trial steps are rejected. `jacobian` returns the `n × p`
/// matrix `∂r_i/∂p_j`.
pub fn levenberg_marquardt<R, J>(
    residuals: R,
    jacobian: J,
    p0: &[f64],
    opts: LsqOptions,
) -> Option<LsqSolution>
where
    R: Fn(&[f64]) -> Option<DVector<f64>>,
    J: Fn(&[f64]) -> DMatrix<f64>,
{
    let mut p = DVector::from_column_slice(p0);
    let mut r = residuals(p.as_slice())?;
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(p.as_slice());
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if cost == 0.0 || grad.amax() == 0.0 {
            converged = true;
            break;
        }

        let mut accepted = false;
        while lambda < 1e20 {
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &step;
            match residuals(trial.as_slice()) {
                Some(tr) if tr.norm_squared() < cost => {
                    let new_cost = tr.norm_squared();
                    let small_step =
                        step.norm() <= opts.step_tolerance * (p.norm() + opts.step_tolerance);
                    let small_gain = (cost - new_cost) <= opts.cost_tolerance * cost;
                    p = trial;
                    r = tr;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    if small_step || small_gain {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            // No downhill step exists at any damping: a (numerical) minimum.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let jac = jacobian(p.as_slice());
    let n = r.len();
    let k = p.len();
    let covariance = if n > k {
        let s2 = cost / (n - k) as f64;
        (jac.transpose() * &jac)
            .try_inverse()
            .filter(|c| c.iter().all(|v| v.is_finite()))
            .map(|c| c * s2)
    } else {
        None
    };

    Some(LsqSolution {
        params: p.as_slice().to_vec(),
        covariance,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_exactly() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * (-0.7 * x).exp()).collect();
        let res = |p: &[f64]| {
            Some(DVector::from_iterator(
                xs.len(),
                xs.iter()
                    .zip(&ys)
                    .map(|(x, y)| p[0] * (-p[1] * x).exp() - y),
            ))
        };
        let jac = |p: &[f64]| {
            DMatrix::from_fn(xs.len(), 2, |i, j| {
                let e = (-p[1] * xs[i]).exp();
                if j == 0 {
                    e
                } else {
                    -p[0] * xs[i] * e
                }
            })
        };
        let sol = levenberg_marquardt(res, jac, &[1.0, 0.2], LsqOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.params[0] - 2.0).abs() < 1e-10);
        assert!((sol.params[1] - 0.7).abs() < 1e-10);
    }
}
