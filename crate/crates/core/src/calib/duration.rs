use rayon::prelude::*;

use super::sweep::{check_axis, crossings, local_extrema, Evaluation, SweepResult};
use crate::cliffords::{
    clifford_group, physical_gate_channels, process_channel, run_rb, Channel, ChannelModel, InterleavedGate,
    RbConfig,
};
use crate::pulses::{compile_echo_cpm, compile_pseudo_z, FinalGate, GateSettings, MicrowavePulse, SimOptions};
use crate::qdyn::{Parity, TransmonParams};
use crate::{Error, Result};

/// Sweeps the flat duration of the EchoCPM gate pulses with final X/2 and
/// −X/2 and locates where the two parity-averaged traces cross (`δ = π`).
///
/// The standard columns hold the X/2 traces; the −X/2 traces follow as
/// `minus_x2_even`, `minus_x2_odd` and `minus_x2_mean`.
pub fn calibrate_duration(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
    flats_ns: &[f64],
    eval: &Evaluation,
) -> Result<SweepResult> {
    check_axis("durations", flats_ns, 2)?;
    let points: Vec<[f64; 4]> = flats_ns
        .par_iter()
        .map(|&flat| {
            let g = gate.with_flat(flat);
            let x = compile_echo_cpm(params, &g, mw, FinalGate::X2)?;
            let mx = compile_echo_cpm(params, &g, mw, FinalGate::MinusX2)?;
            Ok([
                eval.excited_population(params, &x, Parity::Even)?,
                eval.excited_population(params, &x, Parity::Odd)?,
                eval.excited_population(params, &mx, Parity::Even)?,
                eval.excited_population(params, &mx, Parity::Odd)?,
            ])
        })
        .collect::<Result<_>>()?;
    let col = |k: usize| points.iter().map(|p| p[k]).collect::<Vec<f64>>();
    let mut sweep = SweepResult::new("flat_ns", flats_ns.to_vec(), col(0), col(1));
    let minus = SweepResult::new("flat_ns", flats_ns.to_vec(), col(2), col(3));
    let diff: Vec<f64> = sweep
        .population_mean
        .iter()
        .zip(&minus.population_mean)
        .map(|(a, b)| a - b)
        .collect();
    sweep.located = crossings(flats_ns, &diff);
    sweep.extra = vec![
        ("minus_x2_even".into(), minus.population_even),
        ("minus_x2_odd".into(), minus.population_odd),
        ("minus_x2_mean".into(), minus.population_mean),
    ];
    if sweep.located.is_empty() {
        return Err(Error::NoCrossing);
    }
    Ok(sweep)
}

/// Settings of the interleaved-RB duration scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrbScan {
    pub depth: usize,
    pub sequences: usize,
    pub seed: u64,
    pub sim: SimOptions,
}

impl Default for IrbScan {
    fn default() -> Self {
        Self {
            depth: 50,
            sequences: 50,
            seed: 0,
            sim: SimOptions::default(),
        }
    }
}

/// Interleaved-RB sequence fidelity at a fixed depth with pseudo-Z
/// interleaved, per flat duration. The per-parity columns interleave the
/// even- or odd-parity pseudo-Z process; the mean column uses their average.
/// All durations share the same random sequences. The located optimum is
/// the maximum of the 3-point smoothed mean curve.
pub fn optimize_duration_irb(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
    flats_ns: &[f64],
    scan: &IrbScan,
) -> Result<SweepResult> {
    check_axis("durations", flats_ns, 3)?;
    if scan.depth == 0 {
        return Err(Error::invalid("depth", "must be positive"));
    }
    let group = clifford_group();
    let model = ChannelModel::PerGate(physical_gate_channels(params, mw, &scan.sim)?);
    let config = RbConfig {
        depths: vec![scan.depth],
        sequences_per_depth: scan.sequences,
        seed: scan.seed,
        interleaved: Some(InterleavedGate::PseudoZ),
        shots: None,
    };
    let survival = |c: &Channel| -> Result<f64> { Ok(run_rb(&group, &config, &model, Some(c))?.depths[0].mean()) };

    let mut even = Vec::with_capacity(flats_ns.len());
    let mut odd = Vec::with_capacity(flats_ns.len());
    let mut mean = Vec::with_capacity(flats_ns.len());
    for &flat in flats_ns {
        let seq = compile_pseudo_z(params, &gate.with_flat(flat), mw)?;
        let (ce, co) = rayon::join(
            || process_channel(params, &seq, Parity::Even, &scan.sim),
            || process_channel(params, &seq, Parity::Odd, &scan.sim),
        );
        let (ce, co) = (ce?, co?);
        even.push(survival(&ce)?);
        odd.push(survival(&co)?);
        mean.push(survival(&Channel::mixture(&[(0.5, ce), (0.5, co)]))?);
    }
    let mut sweep = SweepResult::new("flat_ns", flats_ns.to_vec(), even, odd);
    sweep.population_mean = mean;
    let smoothed = smooth3(&sweep.population_mean);
    sweep.located = local_extrema(flats_ns, &smoothed, true);
    if sweep.located.is_empty() {
        return Err(Error::NoExtremum);
    }
    if sweep.located.len() > 1 {
        let best = sweep
            .located
            .iter()
            .copied()
            .max_by(|a, b| interpolate(flats_ns, &smoothed, *a).total_cmp(&interpolate(flats_ns, &smoothed, *b)))
            .expect("non-empty");
        sweep.located = vec![best];
    }
    sweep.extra = vec![("smoothed_mean".into(), smoothed)];
    Ok(sweep)
}

/// Centered 3-point moving average; end points average with their one neighbour.
fn smooth3(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(v.len() - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let i = x.partition_point(|v| *v <= at).clamp(1, x.len() - 1);
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + t * (y[i] - y[i - 1])
}
