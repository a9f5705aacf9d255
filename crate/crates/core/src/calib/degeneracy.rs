use rayon::prelude::*;
use serde::Serialize;

use super::sweep::{check_axis, local_extrema, Evaluation, SweepResult};
use crate::pulses::{compile_charge_monitor, GateConversion, MicrowavePulse};
use crate::qdyn::{Parity, TransmonParams};
use crate::{Error, Result};

/// Default free-evolution delay of the charge monitor.
pub const MONITOR_DELAY_NS: f64 = 800.0;

/// Sweeps the gate voltage through the charge monitor and locates the
/// population maxima (degeneracy points), reported in volts.
///
/// The grid must span at least half a charge period (0.5 in `n_g`), the
/// period of the parity-averaged signal.
pub fn find_degeneracy(
    params: &TransmonParams,
    mw: &MicrowavePulse,
    conversion: &GateConversion,
    voltages: &[f64],
    delay_ns: f64,
    eval: &Evaluation,
) -> Result<SweepResult> {
    check_axis("voltages", voltages, 3)?;
    let span = (conversion.ng_at(voltages[voltages.len() - 1]) - conversion.ng_at(voltages[0])).abs();
    if span < 0.5 {
        return Err(Error::invalid(
            "voltages",
            format!("grid spans {span:.3} in n_g; at least 0.5 is needed"),
        ));
    }
    let base = compile_charge_monitor(params, mw, delay_ns)?;
    let points: Vec<(f64, f64)> = voltages
        .par_iter()
        .map(|&v| {
            let seq = base.with_ng0(conversion.ng_at(v));
            Ok((
                eval.excited_population(params, &seq, Parity::Even)?,
                eval.excited_population(params, &seq, Parity::Odd)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (even, odd) = points.into_iter().unzip();
    let mut sweep = SweepResult::new("voltage_v", voltages.to_vec(), even, odd);
    sweep.located = local_extrema(&sweep.axis, &sweep.population_mean, true);
    if sweep.located.is_empty() {
        return Err(Error::NoExtremum);
    }
    Ok(sweep)
}

/// Pre/post degeneracy check that rejects runs whose offset charge drifted
/// by more than `threshold_v` (expressed as gate voltage).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftFilter {
    pub threshold_v: f64,
}

impl Default for DriftFilter {
    fn default() -> Self {
        Self { threshold_v: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftCheck {
    pub pre_v: f64,
    pub post_v: f64,
    pub accepted: bool,
}

impl DriftFilter {
    pub fn accept(&self, pre_v: f64, post_v: f64) -> bool {
        (post_v - pre_v).abs() <= self.threshold_v
    }

    /// Locates the degeneracy point before and after an injected offset
    /// drift of `drift_v` and applies the threshold to the shift of the
    /// maximum nearest the grid centre.
    pub fn check_run(
        &self,
        params: &TransmonParams,
        mw: &MicrowavePulse,
        conversion: &GateConversion,
        voltages: &[f64],
        drift_v: f64,
        eval: &Evaluation,
    ) -> Result<DriftCheck> {
        let centre = 0.5 * (voltages[0] + voltages[voltages.len() - 1]);
        let pre = find_degeneracy(params, mw, conversion, voltages, MONITOR_DELAY_NS, eval)?;
        let pre_v = nearest(&pre.located, centre);
        let drifted = GateConversion {
            ng_at_zero_volts: conversion.ng_at_zero_volts - conversion.charge_for_volts(drift_v),
            ..*conversion
        };
        let post = find_degeneracy(params, mw, &drifted, voltages, MONITOR_DELAY_NS, eval)?;
        let post_v = nearest(&post.located, pre_v);
        Ok(DriftCheck {
            pre_v,
            post_v,
            accepted: self.accept(pre_v, post_v),
        })
    }
}

fn nearest(values: &[f64], target: f64) -> f64 {
    values
        .iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .expect("non-empty")
}
