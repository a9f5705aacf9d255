use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{FidelityModel, TunnelingModel};
use crate::qdyn::Parity;
use crate::rng::stream_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Ideal,
    Measured,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Ideal => "ideal",
            TraceKind::Measured => "measured",
        }
    }
}

/// Where a trace came from. All fields are optional so that externally
/// recorded traces can be loaded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub seed: Option<u64>,
    pub gamma_per_ms: Option<f64>,
    pub fidelity: Option<FidelityModel>,
}

/// Sampled ±1 parity record (−1 even, +1 odd) with spacing `dt_us`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityTrace {
    samples: Vec<i8>,
    dt_us: f64,
    kind: TraceKind,
    meta: TraceMeta,
}

impl ParityTrace {
    pub fn new(samples: Vec<i8>, dt_us: f64, kind: TraceKind) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "trace must contain at least one sample"));
        }
        if let Some(i) = samples.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::invalid("samples", format!("sample {i} is {}, expected ±1", samples[i])));
        }
        if !(dt_us.is_finite() && dt_us > 0.0) {
            return Err(Error::invalid("dt_us", format!("must be positive and finite, got {dt_us}")));
        }
        Ok(Self {
            samples,
            dt_us,
            kind,
            meta: TraceMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: TraceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn samples(&self) -> &[i8] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt_us(&self) -> f64 {
        self.dt_us
    }

    pub fn duration_us(&self) -> f64 {
        self.samples.len() as f64 * self.dt_us
    }

    pub fn kind(&self) -> TraceKind {
        self.kind
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().map(|&v| v as f64).sum::<f64>() / self.len() as f64
    }
}

/// Event times (µs) of a homogeneous Poisson process on `[0, duration_us)`.
pub fn sample_switch_times<R: Rng + ?Sized>(model: &TunnelingModel, duration_us: f64, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(model.rate_per_us()).expect("rate is positive");
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t >= duration_us {
            return times;
        }
        times.push(t);
    }
}

/// Sample `k` carries `initial·(−1)^{#events ≤ k·dt}`; `events` must be sorted.
pub fn ideal_trace(events: &[f64], dt_us: f64, n_samples: usize, initial: Parity) -> Result<ParityTrace> {
    if events.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("events", "event times must be sorted"));
    }
    let mut samples = Vec::with_capacity(n_samples);
    let mut parity = initial;
    let mut next = 0;
    for k in 0..n_samples {
        let t = k as f64 * dt_us;
        while next < events.len() && events[next] <= t {
            parity = parity.flipped();
            next += 1;
        }
        samples.push(parity.value());
    }
    ParityTrace::new(samples, dt_us, TraceKind::Ideal)
}

/// One measured symbol from two uniforms: the first decides whether the
/// mapping is correct, the second drives the readout.
fn measure_sample(value: i8, fid: &FidelityModel, u_map: f64, u_read: f64) -> i8 {
    let correct = u_map < 0.5 * (1.0 + fid.f_m);
    // Even parity lands on the excited state when mapped correctly.
    let excited = (value == -1) == correct;
    let reported_excited = if excited { u_read < fid.f_e } else { u_read >= fid.f_g };
    if reported_excited {
        -1
    } else {
        1
    }
}

/// Passes every sample independently through mapping and readout errors.
pub fn measure_trace<R: Rng + ?Sized>(ideal: &ParityTrace, fid: &FidelityModel, rng: &mut R) -> ParityTrace {
    let samples = ideal
        .samples
        .iter()
        .map(|&v| {
            let u_map: f64 = rng.random();
            let u_read: f64 = rng.random();
            measure_sample(v, fid, u_map, u_read)
        })
        .collect();
    let meta = TraceMeta {
        fidelity: Some(*fid),
        ..ideal.meta
    };
    ParityTrace {
        samples,
        dt_us: ideal.dt_us,
        kind: TraceKind::Measured,
        meta,
    }
}

/// Samples per independently seeded segment in [`generate_traces`].
pub const SEGMENT_SAMPLES: usize = 1 << 20;

/// Ideal and (optionally) measured traces of `n_samples` points.
///
/// The record is built from segments of [`SEGMENT_SAMPLES`] with their own
/// random streams, generated in parallel. Each segment starts from the
/// parity its predecessor ended in, so the concatenation is a single
/// stationary telegraph process. Tunneling events and readout noise use
/// separate streams: two calls with the same seed and different fidelities
/// see identical parity histories and identical uniforms.
pub fn generate_traces(
    model: &TunnelingModel,
    fid: Option<&FidelityModel>,
    dt_us: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(ParityTrace, Option<ParityTrace>)> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    if !(dt_us.is_finite() && dt_us > 0.0) {
        return Err(Error::invalid("dt_us", format!("must be positive and finite, got {dt_us}")));
    }
    if let Some(f) = fid {
        f.validate()?;
    }
    let n_segments = n_samples.div_ceil(SEGMENT_SAMPLES);
    let mut segments: Vec<(Vec<i8>, bool)> = (0..n_segments)
        .into_par_iter()
        .map(|s| {
            let len = SEGMENT_SAMPLES.min(n_samples - s * SEGMENT_SAMPLES);
            let mut rng = stream_rng(seed, 2 * s as u64);
            let events = sample_switch_times(model, len as f64 * dt_us, &mut rng);
            let rel = ideal_trace(&events, dt_us, len, Parity::Even).expect("sorted events");
            (rel.samples, events.len() % 2 == 1)
        })
        .collect();

    let mut parity = if stream_rng(seed, u64::MAX).random::<bool>() {
        Parity::Odd
    } else {
        Parity::Even
    };
    for (samples, flips) in segments.iter_mut() {
        if parity == Parity::Odd {
            samples.iter_mut().for_each(|v| *v = -*v);
        }
        if *flips {
            parity = parity.flipped();
        }
    }

    let meta = TraceMeta {
        seed: Some(seed),
        gamma_per_ms: Some(model.gamma_per_ms()),
        fidelity: None,
    };
    let measured = fid.map(|f| {
        let samples: Vec<i8> = segments
            .par_iter()
            .enumerate()
            .flat_map_iter(|(s, (ideal, _))| {
                let mut rng = stream_rng(seed, 2 * s as u64 + 1);
                ideal
                    .iter()
                    .map(|&v| {
                        let u_map: f64 = rng.random();
                        let u_read: f64 = rng.random();
                        measure_sample(v, f, u_map, u_read)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        ParityTrace {
            samples,
            dt_us,
            kind: TraceKind::Measured,
            meta: TraceMeta {
                fidelity: Some(*f),
                ..meta
            },
        }
    });
    let ideal = ParityTrace {
        samples: segments.into_iter().flat_map(|(s, _)| s).collect(),
        dt_us,
        kind: TraceKind::Ideal,
        meta,
    };
    Ok((ideal, measured))
}

/// `⟨x_k·x_{k+lag}⟩` over all available pairs.
pub fn empirical_autocorr(trace: &ParityTrace, lag: usize) -> Option<f64> {
    let n = trace.len().checked_sub(lag).filter(|&n| n > 0)?;
    let s = &trace.samples;
    let sum: i64 = (0..n).map(|k| (s[k] * s[k + lag]) as i64).sum();
    Some(sum as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocorrEstimate {
    pub lag: usize,
    pub mean: f64,
    /// Standard error of the mean over independent traces.
    pub std_error: f64,
}

/// Autocorrelation of measured traces averaged over seeds
/// `seed0..seed0 + n_traces`.
pub fn ensemble_autocorr(
    model: &TunnelingModel,
    fid: &FidelityModel,
    dt_us: f64,
    n_samples: usize,
    lags: &[usize],
    seed0: u64,
    n_traces: usize,
) -> Result<Vec<AutocorrEstimate>> {
    if n_traces < 2 {
        return Err(Error::invalid("n_traces", "need at least two traces for an error bar"));
    }
    if let Some(&lag) = lags.iter().find(|&&l| l >= n_samples) {
        return Err(Error::invalid("lags", format!("lag {lag} exceeds the trace length {n_samples}")));
    }
    let per_trace: Vec<Vec<f64>> = (0..n_traces as u64)
        .map(|i| {
            let (_, measured) = generate_traces(model, Some(fid), dt_us, n_samples, seed0 + i)?;
            let m = measured.expect("fidelity given");
            Ok(lags.iter().map(|&l| empirical_autocorr(&m, l).expect("lag checked")).collect())
        })
        .collect::<Result<_>>()?;
    let n = n_traces as f64;
    Ok(lags
        .iter()
        .enumerate()
        .map(|(j, &lag)| {
            let mean = per_trace.iter().map(|c| c[j]).sum::<f64>() / n;
            let var = per_trace.iter().map(|c| (c[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            AutocorrEstimate {
                lag,
                mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_events_is_constant() {
        let t = ideal_trace(&[], 4.0, 10, Parity::Odd).unwrap();
        assert!(t.samples().iter().all(|&v| v == 1));
    }

    #[test]
    fn single_event_flips_once() {
        let t = ideal_trace(&[10.5], 4.0, 6, Parity::Even).unwrap();
        assert_eq!(t.samples(), &[-1, -1, -1, 1, 1, 1]);
        let edge = ideal_trace(&[8.0], 4.0, 4, Parity::Even).unwrap();
        assert_eq!(edge.samples(), &[-1, -1, 1, 1]);
    }

    #[test]
    fn unsorted_events_rejected() {
        assert!(ideal_trace(&[2.0, 1.0], 1.0, 4, Parity::Even).is_err());
    }

    #[test]
    fn paper_event_count() {
        let model = TunnelingModel::paper();
        let mut rng = stream_rng(1, 0);
        let n = sample_switch_times(&model, 30e6, &mut rng).len() as f64;
        let expected = 30e6 / (30.2e3);
        assert!((n - expected).abs() < 4.0 * expected.sqrt(), "{n} vs {expected}");
        assert!(sample_switch_times(&model, 0.0, &mut rng).is_empty());
    }

    #[test]
    fn perfect_fidelity_measures_ideal() {
        let model = TunnelingModel::from_tau_ms(0.1).unwrap();
        let (ideal, measured) = generate_traces(&model, Some(&FidelityModel::perfect()), 4.0, 5000, 3).unwrap();
        assert_eq!(ideal.samples(), measured.unwrap().samples());
    }

    #[test]
    fn zero_mapping_fidelity_is_parity_blind() {
        let fid = FidelityModel::new(1.0, 1.0, 0.0).unwrap();
        let mut rng = stream_rng(5, 0);
        let even = ParityTrace::new(vec![-1; 40_000], 1.0, TraceKind::Ideal).unwrap();
        let odd = ParityTrace::new(vec![1; 40_000], 1.0, TraceKind::Ideal).unwrap();
        let me = measure_trace(&even, &fid, &mut rng).mean();
        let mo = measure_trace(&odd, &fid, &mut rng).mean();
        assert!(me.abs() < 0.03 && mo.abs() < 0.03, "{me} {mo}");
    }

    #[test]
    fn segment_handoff_matches_single_event_list() {
        let model = TunnelingModel::from_tau_ms(0.2).unwrap();
        let n = SEGMENT_SAMPLES + 5000;
        let dt = 1.0;
        let (ideal, _) = generate_traces(&model, None, dt, n, 11).unwrap();

        let first_len = SEGMENT_SAMPLES as f64 * dt;
        let mut events = sample_switch_times(&model, first_len, &mut stream_rng(11, 0));
        let tail = sample_switch_times(&model, 5000.0 * dt, &mut stream_rng(11, 2));
        events.extend(tail.iter().map(|t| t + first_len));
        let initial = if stream_rng(11, u64::MAX).random::<bool>() {
            Parity::Odd
        } else {
            Parity::Even
        };
        let oracle = ideal_trace(&events, dt, n, initial).unwrap();
        assert_eq!(ideal.samples(), oracle.samples());
    }

    #[test]
    fn same_seed_shares_history_across_fidelities() {
        let model = TunnelingModel::from_tau_ms(0.05).unwrap();
        let a = FidelityModel::new(0.99, 0.95, 0.99).unwrap();
        let b = FidelityModel::new(0.99, 0.95, 0.90).unwrap();
        let (ia, ma) = generate_traces(&model, Some(&a), 4.0, 20_000, 9).unwrap();
        let (ib, mb) = generate_traces(&model, Some(&b), 4.0, 20_000, 9).unwrap();
        assert_eq!(ia, ib);
        let (ma, mb) = (ma.unwrap(), mb.unwrap());
        let differ = ma.samples().iter().zip(mb.samples()).filter(|(x, y)| x != y).count();
        // Only samples whose mapping uniform falls between the two thresholds change.
        assert!((differ as f64) < 0.08 * 20_000.0, "{differ}");
    }
}
