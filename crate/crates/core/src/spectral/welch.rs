use std::fmt::Write as _;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::parity::ParityTrace;
use crate::{Error, Result};

pub const DEFAULT_SEGMENT_LEN: usize = 1 << 16;
pub const DEFAULT_OVERLAP: f64 = 0.5;
pub const MIN_SEGMENT_LEN: usize = 16;

/// One-sided Welch estimate on the positive Fourier frequencies
/// `f_n = n/(N·dt)`, `n = 1..=N/2`.
///
/// Normalized so that white noise of variance σ² sits at `σ²·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub frequencies_hz: Vec<f64>,
    pub values: Vec<f64>,
    pub dt_s: f64,
    pub n_segments: usize,
    pub segment_len: usize,
}

impl Psd {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `mean(S)/dt`; equals the per-sample variance of a mean-free record.
    pub fn total_power(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64 / self.dt_s
    }

    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.dt_s
    }

    /// Per-bin weight used in fits and exports: the number of averaged segments.
    pub fn weights(&self) -> Vec<f64> {
        vec![self.n_segments as f64; self.len()]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("f_hz,s_value,weight\n");
        for (f, s) in self.frequencies_hz.iter().zip(&self.values) {
            writeln!(out, "{f:.9e},{s:.9e},{}", self.n_segments).unwrap();
        }
        out
    }
}

/// Segment start offsets for Welch averaging.
fn segment_starts(n: usize, segment_len: usize, overlap: f64) -> Vec<usize> {
    let step = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    (0..)
        .map(|k| k * step)
        .take_while(|s| s + segment_len <= n)
        .collect()
}

/// Welch periodogram with a rectangular window and per-segment mean removal.
pub fn periodogram(trace: &ParityTrace, segment_len: usize, overlap: f64) -> Result<Psd> {
    if segment_len < MIN_SEGMENT_LEN {
        return Err(Error::invalid(
            "segment_len",
            format!("must be at least {MIN_SEGMENT_LEN} samples, got {segment_len}"),
        ));
    }
    if segment_len > trace.len() {
        return Err(Error::invalid(
            "segment_len",
            format!("{segment_len} exceeds the trace length {}", trace.len()),
        ));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid("overlap", format!("must lie in [0, 1), got {overlap}")));
    }
    let x: Vec<f64> = trace.samples().iter().map(|&v| v as f64).collect();
    Ok(welch(&x, trace.dt_us() * 1e-6, segment_len, overlap))
}

/// Welch estimate of a real series sampled every `dt_s` seconds.
pub fn welch(x: &[f64], dt_s: f64, segment_len: usize, overlap: f64) -> Psd {
    let n = segment_len;
    let half = n / 2;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let starts = segment_starts(x.len(), n, overlap);

    let mut acc = vec![0.0; half];
    // Fixed-size batches keep the summation order independent of the pool.
    for batch in starts.chunks(16) {
        let powers: Vec<Vec<f64>> = batch
            .par_iter()
            .map(|&s| {
                let seg = &x[s..s + n];
                let mean = seg.iter().sum::<f64>() / n as f64;
                let mut buf: Vec<Complex<f64>> = seg.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
                fft.process(&mut buf);
                buf[1..=half].iter().map(|c| c.norm_sqr()).collect()
            })
            .collect();
        for p in &powers {
            acc.iter_mut().zip(p).for_each(|(a, v)| *a += v);
        }
    }
    let scale = dt_s / (n as f64 * starts.len() as f64);
    Psd {
        frequencies_hz: (1..=half).map(|k| k as f64 / (n as f64 * dt_s)).collect(),
        values: acc.into_iter().map(|v| v * scale).collect(),
        dt_s,
        n_segments: starts.len(),
        segment_len: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parity::TraceKind;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn segment_layout() {
        assert_eq!(segment_starts(100, 40, 0.5), vec![0, 20, 40, 60]);
        assert_eq!(segment_starts(100, 40, 0.0), vec![0, 40]);
        assert_eq!(segment_starts(40, 40, 0.5), vec![0]);
    }

    #[test]
    fn white_noise_sits_at_dt() {
        let mut rng = stream_rng(3, 0);
        let samples: Vec<i8> = (0..1 << 18).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let t = ParityTrace::new(samples, 4.0, TraceKind::Measured).unwrap();
        let psd = periodogram(&t, 1024, 0.5).unwrap();
        let level = psd.values.iter().sum::<f64>() / psd.len() as f64;
        assert!((level / 4e-6 - 1.0).abs() < 0.02, "{level}");
        assert!((psd.total_power() - 1.0).abs() < 0.02);
        assert!(psd.frequencies_hz.windows(2).all(|w| w[1] > w[0]));
        assert!((psd.frequencies_hz.last().unwrap() - psd.nyquist_hz()).abs() < 1e-9);
    }

    #[test]
    fn constant_trace_is_zero() {
        let t = ParityTrace::new(vec![1; 256], 1.0, TraceKind::Ideal).unwrap();
        let psd = periodogram(&t, 64, 0.5).unwrap();
        assert!(psd.values.iter().all(|&v| v.abs() < 1e-30));
    }

    #[test]
    fn rejects_bad_segments() {
        let t = ParityTrace::new(vec![1; 64], 1.0, TraceKind::Ideal).unwrap();
        assert!(periodogram(&t, 8, 0.5).is_err());
        assert!(periodogram(&t, 128, 0.5).is_err());
        assert!(periodogram(&t, 32, 1.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = ParityTrace::new(vec![1, -1].repeat(16), 1.0, TraceKind::Ideal).unwrap();
        let csv = periodogram(&t, 16, 0.0).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("f_hz,s_value,weight"));
        assert_eq!(lines.count(), 8);
    }
}
