use std::fmt::Write as _;

use serde::Serialize;

use crate::pulses::{ideal_phase_model, simulate_sequence, PulseSequence, SimOptions};
use crate::qdyn::{Parity, TransmonParams};
use crate::{Error, Result};

/// How a sweep point is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    /// Closed-form phase model (instantaneous rotations, no decoherence).
    Ideal,
    /// Full Lindblad simulation.
    Lindblad(SimOptions),
}

impl Evaluation {
    /// Excited-state population at the end of `seq` starting from `|0⟩`.
    pub fn excited_population(&self, params: &TransmonParams, seq: &PulseSequence, parity: Parity) -> Result<f64> {
        let p = match self {
            Evaluation::Ideal => ideal_phase_model(params, seq, parity, 0.0).excited_population(),
            Evaluation::Lindblad(opts) => simulate_sequence(params, seq, parity, opts)?
                .final_state
                .population(1),
        };
        Ok(p.clamp(0.0, 1.0))
    }
}

/// A one-dimensional calibration sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Name and unit of the swept quantity, e.g. `voltage_v`.
    pub axis_label: String,
    pub axis: Vec<f64>,
    pub population_even: Vec<f64>,
    pub population_odd: Vec<f64>,
    pub population_mean: Vec<f64>,
    /// Additional named columns written after the standard ones.
    pub extra: Vec<(String, Vec<f64>)>,
    /// Located extrema or crossings, in axis units.
    pub located: Vec<f64>,
}

impl SweepResult {
    pub(crate) fn new(axis_label: &str, axis: Vec<f64>, even: Vec<f64>, odd: Vec<f64>) -> Self {
        let mean = even.iter().zip(&odd).map(|(a, b)| 0.5 * (a + b)).collect();
        Self {
            axis_label: axis_label.to_string(),
            axis,
            population_even: even,
            population_odd: odd,
            population_mean: mean,
            extra: Vec::new(),
            located: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,population_even,population_odd,population_mean");
        for (name, _) in &self.extra {
            write!(out, ",{name}").unwrap();
        }
        out.push('\n');
        for i in 0..self.axis.len() {
            write!(
                out,
                "{:.9},{:.9},{:.9},{:.9}",
                self.axis[i], self.population_even[i], self.population_odd[i], self.population_mean[i]
            )
            .unwrap();
            for (_, col) in &self.extra {
                write!(out, ",{:.9}", col[i]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Checks that the grid has at least `min_len` strictly increasing finite values.
pub(crate) fn check_axis(name: &'static str, axis: &[f64], min_len: usize) -> Result<()> {
    if axis.len() < min_len {
        return Err(Error::invalid(name, format!("need at least {min_len} points, got {}", axis.len())));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(name, "values must be finite"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(name, "values must be strictly increasing"));
    }
    Ok(())
}

/// Vertex of the parabola through three neighbouring grid points.
fn quadratic_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d2 - d1) / (x[2] - x[0]);
    if curvature == 0.0 {
        return x[1];
    }
    let v = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curvature);
    v.clamp(x[0], x[2])
}

/// Interior local maxima (or minima), refined by a 3-point quadratic fit.
pub fn local_extrema(axis: &[f64], values: &[f64], maxima: bool) -> Vec<f64> {
    let s = if maxima { 1.0 } else { -1.0 };
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < values.len() {
        let (l, c) = (s * values[i - 1], s * values[i]);
        if c > l {
            // Extend across a flat top before comparing with the right side.
            let mut j = i;
            while j + 1 < values.len() && s * values[j + 1] == c {
                j += 1;
            }
            if j + 1 < values.len() && s * values[j + 1] < c {
                let k = (i + j) / 2;
                out.push(if i == j {
                    quadratic_vertex([axis[k - 1], axis[k], axis[k + 1]], [values[k - 1], values[k], values[k + 1]])
                } else {
                    0.5 * (axis[i] + axis[j])
                });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Zero crossings of `values`, by linear interpolation.
pub fn crossings(axis: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            out.push(axis[i]);
        } else if a * b < 0.0 {
            out.push(axis[i] + (axis[i + 1] - axis[i]) * a / (a - b));
        }
    }
    if values.last() == Some(&0.0) {
        out.push(axis[axis.len() - 1]);
    }
    out
}
