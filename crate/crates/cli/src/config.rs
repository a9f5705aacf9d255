//! Run configuration.
//!
//! A TOML file with optional sections; every missing key takes its
//! `paper-device` default and unknown keys are rejected.

use std::path::PathBuf;

use qpd_core::cliffords::InterleavedGate;
use qpd_core::parity::{FidelityModel, TunnelingModel};
use qpd_core::pulses::{GateConversion, GateSettings, MicrowavePulse, SimOptions};
use qpd_core::qdyn::{dispersion_ladder, DephasingSource, TransmonParams, DEFAULT_DT_NS};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const PROFILE: &str = "paper-device";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub profile: String,
    pub seed: u64,
    pub device: DeviceSection,
    pub pulses: PulseSection,
    pub simulation: SimulationSection,
    pub rb: RbSection,
    pub trace: TraceSection,
    pub calibrate: CalibrateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: PROFILE.into(),
            seed: 0,
            device: DeviceSection::default(),
            pulses: PulseSection::default(),
            simulation: SimulationSection::default(),
            rb: RbSection::default(),
            trace: TraceSection::default(),
            calibrate: CalibrateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub f01_ghz: f64,
    pub anharmonicity_ghz: f64,
    /// Magnitude of the 0–1 charge dispersion.
    pub epsilon10_mhz: f64,
    /// Sign of `ε10`.
    pub dispersion_sign: f64,
    pub levels: usize,
    pub t1_us: f64,
    pub t2_echo_us: f64,
    pub t2_ramsey_us: f64,
}

impl Default for DeviceSection {
    fn default() -> Self {
        let p = TransmonParams::paper_device();
        Self {
            f01_ghz: p.f01_ghz,
            anharmonicity_ghz: p.anharmonicity_ghz,
            epsilon10_mhz: TransmonParams::PAPER_EPSILON10_MHZ,
            dispersion_sign: -1.0,
            levels: p.levels(),
            t1_us: p.t1_us,
            t2_echo_us: p.t2_echo_us,
            t2_ramsey_us: p.t2_ramsey_us,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSection {
    pub mw_duration_ns: f64,
    pub mw_buffer_ns: f64,
    pub drag_coefficient: f64,
    /// Gate pulse amplitude on the gate line.
    pub gate_amplitude_v: f64,
    /// Gate-line volts per unit offset charge (2e).
    pub volts_per_charge: f64,
    /// Flat-top duration `T` of each gate displacement.
    pub gate_duration_ns: f64,
    pub gate_sigma_ns: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            mw_duration_ns: 20.0,
            mw_buffer_ns: 5.0,
            drag_coefficient: 0.5,
            gate_amplitude_v: GateConversion::PAPER_AMPLITUDE_V,
            volts_per_charge: GateConversion::paper().volts_per_charge,
            gate_duration_ns: GateSettings::PAPER_FLAT_NS,
            gate_sigma_ns: GateSettings::PAPER_SIGMA_NS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoherence {
    Echo,
    Ramsey,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub dt_ns: f64,
    pub decoherence: Decoherence,
    pub detuning_ghz: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            dt_ns: DEFAULT_DT_NS,
            decoherence: Decoherence::Echo,
            detuning_ghz: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RbNoise {
    /// Gate channels from Lindblad simulation of the compiled pulses.
    Pulse,
    Depolarizing,
    Ideal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbSection {
    pub depths: Vec<usize>,
    pub sequences_per_depth: usize,
    pub shots: Option<u64>,
    pub noise: RbNoise,
    /// Depolarizing parameter per Clifford (or per interleaved gate).
    pub depolarizing_p: f64,
    pub interleaved: Vec<InterleavedGate>,
}

impl Default for RbSection {
    fn default() -> Self {
        Self {
            depths: vec![1, 10, 25, 50, 100, 200, 400, 700, 1000],
            sequences_per_depth: 50,
            shots: None,
            noise: RbNoise::Pulse,
            depolarizing_p: 0.9992,
            interleaved: vec![InterleavedGate::X2, InterleavedGate::Y2, InterleavedGate::PseudoZ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub tau_ms: f64,
    pub f_g: f64,
    pub f_e: f64,
    pub f_m: f64,
    pub dt_us: f64,
    pub duration_s: f64,
    pub format: FileFormat,
    pub segment_len: usize,
    pub overlap: f64,
    /// Trace file analysed by `psd` instead of a freshly generated one.
    pub input: Option<PathBuf>,
}

impl Default for TraceSection {
    fn default() -> Self {
        let f = FidelityModel::paper();
        Self {
            tau_ms: 30.2,
            f_g: f.f_g,
            f_e: f.f_e,
            f_m: f.f_m,
            dt_us: 4.0,
            duration_s: 30.0,
            format: FileFormat::Binary,
            segment_len: qpd_core::spectral::DEFAULT_SEGMENT_LEN,
            overlap: qpd_core::spectral::DEFAULT_OVERLAP,
            input: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvaluationKind {
    Ideal,
    Lindblad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateSection {
    pub evaluation: EvaluationKind,
    pub voltage_min_v: f64,
    pub voltage_max_v: f64,
    pub voltage_points: usize,
    pub delay_ns: f64,
    /// Injected offset drift for the degeneracy pre/post check.
    pub drift_v: Option<f64>,
    pub drift_threshold_v: f64,
    pub duration_min_ns: f64,
    pub duration_max_ns: f64,
    pub duration_points: usize,
    pub irb_depth: usize,
    pub irb_sequences: usize,
    pub irb_points: usize,
    pub quasi_static_noise: bool,
    /// Quasi-static noise width set by this `T2*`; the device Ramsey `T2` by default.
    pub t2_star_us: Option<f64>,
    pub quadrature_nodes: usize,
    pub comparison_runs: usize,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        Self {
            evaluation: EvaluationKind::Lindblad,
            voltage_min_v: 0.0,
            voltage_max_v: GateConversion::paper().volts_per_charge,
            voltage_points: 81,
            delay_ns: 800.0,
            drift_v: None,
            drift_threshold_v: 0.1,
            duration_min_ns: 200.0,
            duration_max_ns: 230.0,
            duration_points: 31,
            irb_depth: 50,
            irb_sequences: 50,
            irb_points: 7,
            quasi_static_noise: true,
            t2_star_us: None,
            quadrature_nodes: 16,
            comparison_runs: 5,
        }
    }
}

/// Core inputs built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: TransmonParams,
    pub mw: MicrowavePulse,
    pub gate: GateSettings,
    pub conversion: GateConversion,
    pub sim: SimOptions,
    pub tunneling: TunnelingModel,
    pub fidelity: FidelityModel,
}

fn field(name: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{name}: {}", reason.into()))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field(name, format!("must be positive and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(field(name, format!("must be at least {min}, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every section and builds the core inputs.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if self.profile != PROFILE {
            return Err(field("profile", format!("unknown profile `{}`; only `{PROFILE}` exists", self.profile)));
        }
        let d = &self.device;
        if d.dispersion_sign != 1.0 && d.dispersion_sign != -1.0 {
            return Err(field("device.dispersion_sign", "must be 1 or -1"));
        }
        if !(d.epsilon10_mhz.is_finite() && d.epsilon10_mhz >= 0.0) {
            return Err(field("device.epsilon10_mhz", "must be a non-negative magnitude"));
        }
        let params = TransmonParams {
            f01_ghz: d.f01_ghz,
            anharmonicity_ghz: d.anharmonicity_ghz,
            epsilon_mhz: dispersion_ladder(d.epsilon10_mhz, d.dispersion_sign, d.levels),
            t1_us: d.t1_us,
            t2_echo_us: d.t2_echo_us,
            t2_ramsey_us: d.t2_ramsey_us,
        };
        params.validate().map_err(|e| field("device", e.to_string()))?;

        let p = &self.pulses;
        positive("pulses.volts_per_charge", p.volts_per_charge)?;
        positive("pulses.gate_duration_ns", p.gate_duration_ns)?;
        positive("pulses.gate_sigma_ns", p.gate_sigma_ns)?;
        if !p.gate_amplitude_v.is_finite() {
            return Err(field("pulses.gate_amplitude_v", "must be finite"));
        }
        let conversion = GateConversion {
            volts_per_charge: p.volts_per_charge,
            ng_at_zero_volts: 0.0,
        };
        let gate = GateSettings::new(conversion.charge_for_volts(p.gate_amplitude_v), p.gate_duration_ns, p.gate_sigma_ns);
        gate.validate().map_err(|e| field("pulses", e.to_string()))?;
        let mw = MicrowavePulse {
            duration_ns: p.mw_duration_ns,
            buffer_ns: p.mw_buffer_ns,
            drag_coefficient: p.drag_coefficient,
            ..MicrowavePulse::paper_template(&params)
        };
        let mw = MicrowavePulse {
            amplitude: mw.amplitude_for(std::f64::consts::PI),
            ..mw
        };
        mw.validate().map_err(|e| field("pulses", e.to_string()))?;

        let s = &self.simulation;
        positive("simulation.dt_ns", s.dt_ns)?;
        if s.dt_ns > 1.0 {
            return Err(field("simulation.dt_ns", "steps above 1 ns do not resolve the drive"));
        }
        if !s.detuning_ghz.is_finite() {
            return Err(field("simulation.detuning_ghz", "must be finite"));
        }
        let sim = SimOptions {
            dt_ns: s.dt_ns,
            decoherence: match s.decoherence {
                Decoherence::Echo => Some(DephasingSource::Echo),
                Decoherence::Ramsey => Some(DephasingSource::Ramsey),
                Decoherence::None => None,
            },
            detuning_ghz: s.detuning_ghz,
        };

        let r = &self.rb;
        if r.depths.len() < 3 {
            return Err(field("rb.depths", "need at least three depths"));
        }
        at_least("rb.sequences_per_depth", r.sequences_per_depth, 1)?;
        if r.shots == Some(0) {
            return Err(field("rb.shots", "must be positive when given"));
        }
        if !(r.depolarizing_p > 0.0 && r.depolarizing_p <= 1.0) {
            return Err(field("rb.depolarizing_p", format!("must lie in (0, 1], got {}", r.depolarizing_p)));
        }

        let t = &self.trace;
        let tunneling = TunnelingModel::from_tau_ms(t.tau_ms).map_err(|e| field("trace.tau_ms", e.to_string()))?;
        let fidelity = FidelityModel::new(t.f_g, t.f_e, t.f_m).map_err(|e| field("trace", e.to_string()))?;
        positive("trace.dt_us", t.dt_us)?;
        positive("trace.duration_s", t.duration_s)?;
        if self.n_samples() < 1 {
            return Err(field("trace.duration_s", "shorter than one sample"));
        }
        at_least("trace.segment_len", t.segment_len, qpd_core::spectral::MIN_SEGMENT_LEN)?;
        if !(0.0..1.0).contains(&t.overlap) {
            return Err(field("trace.overlap", format!("must lie in [0, 1), got {}", t.overlap)));
        }

        let c = &self.calibrate;
        if !(c.voltage_max_v > c.voltage_min_v) {
            return Err(field("calibrate.voltage_max_v", "must exceed voltage_min_v"));
        }
        at_least("calibrate.voltage_points", c.voltage_points, 3)?;
        if !(c.delay_ns >= 0.0) {
            return Err(field("calibrate.delay_ns", "must be non-negative"));
        }
        positive("calibrate.drift_threshold_v", c.drift_threshold_v)?;
        if let Some(v) = c.drift_v {
            if !v.is_finite() {
                return Err(field("calibrate.drift_v", "must be finite"));
            }
        }
        positive("calibrate.duration_min_ns", c.duration_min_ns)?;
        if !(c.duration_max_ns > c.duration_min_ns) {
            return Err(field("calibrate.duration_max_ns", "must exceed duration_min_ns"));
        }
        at_least("calibrate.duration_points", c.duration_points, 2)?;
        at_least("calibrate.irb_depth", c.irb_depth, 1)?;
        at_least("calibrate.irb_sequences", c.irb_sequences, 1)?;
        at_least("calibrate.irb_points", c.irb_points, 3)?;
        if let Some(t2) = c.t2_star_us {
            positive("calibrate.t2_star_us", t2)?;
        }
        at_least("calibrate.quadrature_nodes", c.quadrature_nodes, 1)?;
        at_least("calibrate.comparison_runs", c.comparison_runs, 1)?;

        Ok(Resolved {
            params,
            mw,
            gate,
            conversion,
            sim,
            tunneling,
            fidelity,
        })
    }

    pub fn n_samples(&self) -> usize {
        (self.trace.duration_s * 1e6 / self.trace.dt_us).round() as usize
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_paper_device() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        let r = c.resolve().unwrap();
        assert_eq!(r.params, TransmonParams::paper_device());
        assert!((r.gate.amplitude - GateSettings::PAPER_AMPLITUDE).abs() < 1e-12);
        assert_eq!(r.mw, MicrowavePulse::paper_template(&r.params));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("colour = 1").is_err());
        assert!(RunConfig::from_toml("[device]\nt3_us = 1.0").is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut c = RunConfig::default();
        c.seed = 17;
        c.rb.shots = Some(100);
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn field_level_messages() {
        let c = RunConfig::from_toml("[trace]\nf_g = 1.5").unwrap();
        let msg = c.resolve().unwrap_err().to_string();
        assert!(msg.contains("trace") && msg.contains("f_g"), "{msg}");
        let c = RunConfig::from_toml("[device]\nt2_echo_us = 500.0").unwrap();
        assert!(c.resolve().unwrap_err().to_string().contains("t2_echo_us"));
    }
}
