//! One function per subcommand. Each writes its CSVs and returns the
//! JSON report; the caller adds the config snapshot.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qpd_core::calib::{
    calibrate_duration, find_degeneracy, optimize_duration_irb, prepare_ramsey_echo, DriftFilter, Evaluation,
    IrbScan, QuasiStaticNoise, SweepResult, TraceSettings,
};
use qpd_core::cliffords::{
    clifford_group, fit_decay, irb_fidelity, physical_gate_channels, pseudo_z_channel, rb_fidelity, run_rb, Channel,
    ChannelModel, DecayFit, InterleavedGate, RbConfig, RbResult,
};
use qpd_core::parity::{
    analytic_autocorr, empirical_autocorr, generate_traces, load_trace, save_trace, ParityTrace, TraceFormat,
};
use qpd_core::pulses::{
    compile_echo_cpm, mapping_fidelity, theoretical_duration_ns, FinalGate, PhysicalGate,
};
use qpd_core::spectral::{finite_segment_correction, fit_lorentzian, lorentzian, periodogram, FitOptions, Psd};
use serde_json::{json, Value};

use crate::config::{linspace, EvaluationKind, FileFormat, RbNoise, Resolved, RunConfig};
use crate::error::CliError;

/// Output directory of one run.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

fn evaluation(cfg: &RunConfig, r: &Resolved) -> Evaluation {
    match cfg.calibrate.evaluation {
        EvaluationKind::Ideal => Evaluation::Ideal,
        EvaluationKind::Lindblad => Evaluation::Lindblad(r.sim),
    }
}

pub fn mapping_sim(cfg: &RunConfig, r: &Resolved, out: &mut Output) -> Result<Value, CliError> {
    let seq = compile_echo_cpm(&r.params, &r.gate, &r.mw, FinalGate::Y2)?;
    let report = mapping_fidelity(&r.params, &seq, &r.sim)?;
    out.write("sequence.csv", seq.to_csv())?;
    out.write("checkpoints.csv", report.checkpoints_csv())?;
    let mut csv = String::from("parity,target_level,fidelity,leakage,ideal_overlap\n");
    for o in &report.outcomes {
        writeln!(
            csv,
            "{},{},{:.12},{:.12e},{:.12}",
            o.parity.name(),
            o.target_level,
            o.fidelity,
            o.leakage,
            o.ideal_overlap
        )
        .unwrap();
    }
    out.write("mapping.csv", csv)?;
    let per_parity: Vec<Value> = report
        .outcomes
        .iter()
        .map(|o| {
            json!({
                "parity": o.parity.name(),
                "target_level": o.target_level,
                "fidelity": o.fidelity,
                "leakage": o.leakage,
                "ideal_overlap": o.ideal_overlap,
            })
        })
        .collect();
    Ok(json!({
        "command": "mapping-sim",
        "seed": cfg.seed,
        "sequence_duration_ns": seq.total_duration_ns(),
        "average_mapping_fidelity": report.average,
        "parities": per_parity,
    }))
}

struct RbSetup {
    model: ChannelModel,
    gates: Option<std::collections::HashMap<PhysicalGate, Channel>>,
}

fn rb_setup(cfg: &RunConfig, r: &Resolved) -> Result<RbSetup, CliError> {
    Ok(match cfg.rb.noise {
        RbNoise::Ideal => RbSetup {
            model: ChannelModel::Ideal,
            gates: None,
        },
        RbNoise::Depolarizing => RbSetup {
            model: ChannelModel::Depolarizing(cfg.rb.depolarizing_p),
            gates: None,
        },
        RbNoise::Pulse => {
            let map = physical_gate_channels(&r.params, &r.mw, &r.sim)?;
            RbSetup {
                model: ChannelModel::PerGate(map.clone()),
                gates: Some(map),
            }
        }
    })
}

fn rb_config(cfg: &RunConfig, interleaved: Option<InterleavedGate>) -> RbConfig {
    RbConfig {
        depths: cfg.rb.depths.clone(),
        sequences_per_depth: cfg.rb.sequences_per_depth,
        seed: cfg.seed,
        interleaved,
        shots: cfg.rb.shots,
    }
}

/// Fit of an RB curve. A curve flat at unit survival (ideal channels) has
/// no decay to fit and is reported as `p = 1`.
fn fit_curve(result: &RbResult) -> Result<DecayFit, CliError> {
    let (x, y) = result.points();
    if y.iter().all(|&s| (s - 1.0).abs() < 1e-12) {
        return Ok(DecayFit {
            a: 0.5,
            p: 1.0,
            b: 0.5,
            std_errors: Some([0.0; 3]),
            residual_norm: 0.0,
            iterations: 0,
        });
    }
    Ok(fit_decay(&x, &y)?)
}

fn file_stem(g: InterleavedGate) -> &'static str {
    match g {
        InterleavedGate::X2 => "x2",
        InterleavedGate::Y2 => "y2",
        InterleavedGate::PseudoZ => "pseudo_z",
    }
}

fn reference(cfg: &RunConfig, setup: &RbSetup, out: &mut Output) -> Result<(DecayFit, Value), CliError> {
    let group = clifford_group();
    let result = run_rb(&group, &rb_config(cfg, None), &setup.model, None)?;
    out.write("rb_reference.csv", result.to_csv())?;
    let fit = fit_curve(&result)?;
    let fidelity = rb_fidelity(fit.p)?;
    Ok((fit, json!({ "fit": fit, "average_clifford_fidelity": fidelity })))
}

pub fn rb(cfg: &RunConfig, r: &Resolved, out: &mut Output) -> Result<Value, CliError> {
    let setup = rb_setup(cfg, r)?;
    let (_, reference) = reference(cfg, &setup, out)?;
    Ok(json!({
        "command": "rb",
        "seed": cfg.seed,
        "noise": cfg.rb.noise,
        "reference": reference,
    }))
}

pub fn irb(cfg: &RunConfig, r: &Resolved, out: &mut Output) -> Result<Value, CliError> {
    if cfg.rb.interleaved.is_empty() {
        return Err(CliError::Config("rb.interleaved: no gate to interleave".into()));
    }
    let setup = rb_setup(cfg, r)?;
    let (ref_fit, reference) = reference(cfg, &setup, out)?;
    let group = clifford_group();
    let mut gates = Vec::new();
    for &g in &cfg.rb.interleaved {
        let channel = match (&setup.gates, g) {
            (Some(_), InterleavedGate::PseudoZ) => Some(pseudo_z_channel(&r.params, &r.gate, &r.mw, &r.sim)?),
            (Some(map), InterleavedGate::X2) => Some(map[&PhysicalGate::X2].clone()),
            (Some(map), InterleavedGate::Y2) => Some(map[&PhysicalGate::Y2].clone()),
            (None, _) if cfg.rb.noise == RbNoise::Depolarizing => {
                Some(Channel::unitary(&g.unitary()).then(&Channel::depolarizing(cfg.rb.depolarizing_p)))
            }
            (None, _) => None,
        };
        let result = run_rb(&group, &rb_config(cfg, Some(g)), &setup.model, channel.as_ref())?;
        out.write(&format!("irb_{}.csv", file_stem(g)), result.to_csv())?;
        let fit = fit_curve(&result)?;
        let fidelity = irb_fidelity(fit.p, ref_fit.p)?;
        gates.push(json!({
            "gate": g,
            "fit": fit,
            "gate_fidelity": fidelity.fidelity,
            "unphysical": fidelity.unphysical,
        }));
    }
    Ok(json!({
        "command": "irb",
        "seed": cfg.seed,
        "noise": cfg.rb.noise,
        "reference": reference,
        "interleaved": gates,
    }))
}

fn trace_format(f: FileFormat) -> (TraceFormat, &'static str) {
    match f {
        FileFormat::Csv => (TraceFormat::Csv, "csv"),
        FileFormat::Binary => (TraceFormat::Binary, "bin"),
    }
}

fn generate(cfg: &RunConfig, r: &Resolved) -> Result<(ParityTrace, ParityTrace), CliError> {
    let (ideal, measured) = generate_traces(&r.tunneling, Some(&r.fidelity), cfg.trace.dt_us, cfg.n_samples(), cfg.seed)?;
    Ok((ideal, measured.expect("fidelity given")))
}

pub fn trace(cfg: &RunConfig, r: &Resolved, out: &mut Output) -> Result<Value, CliError> {
    let (ideal, measured) = generate(cfg, r)?;
    let (format, ext) = trace_format(cfg.trace.format);
    let mut names = Vec::new();
    for (label, t) in [("ideal", &ideal), ("measured", &measured)] {
        let name = format!("trace_{label}.{ext}");
        let path = out.path(&name);
        save_trace(t, &path, format)?;
        names.push(name);
    }
    let switches = ideal.samples().windows(2).filter(|w| w[0] != w[1]).count();
    let lags: Vec<Value> = [1usize, 10, 100]
        .iter()
        .filter_map(|&lag| {
            let c = empirical_autocorr(&measured, lag)?;
            Some(json!({
                "lag": lag,
                "empirical": c,
                "analytic": analytic_autocorr(&r.fidelity, &r.tunneling, lag as f64 * cfg.trace.dt_us),
            }))
        })
        .collect();
    Ok(json!({
        "command": "trace",
        "seed": cfg.seed,
        "files": names,
        "n_samples": measured.len(),
        "dt_us": cfg.trace.dt_us,
        "sample_transitions": switches,
        "expected_switches": r.tunneling.rate_per_us() * measured.duration_us(),
        "f_eff": r.fidelity.effective_fidelity(),
        "measured_mean": measured.mean(),
        "autocorrelation": lags,
    }))
}

fn fit_residuals_csv(psd: &Psd, f_eff: f64, gamma: f64, floor: f64) -> String {
    let mut csv = String::from("f_hz,s_value,model,log_residual\n");
    for (i, (f, s)) in psd.frequencies_hz.iter().zip(&psd.values).enumerate() {
        let shape = lorentzian(gamma, *f) + finite_segment_correction(gamma, psd.dt_s, psd.segment_len, i + 1);
        let model = f_eff * f_eff * shape + floor;
        writeln!(csv, "{f:.9e},{s:.9e},{model:.9e},{:.9e}", (s / model).ln()).unwrap();
    }
    csv
}

pub fn psd(cfg: &RunConfig, r: &Resolved, input: Option<&Path>, out: &mut Output) -> Result<Value, CliError> {
    let input = input.or(cfg.trace.input.as_deref());
    let (trace, source) = match input {
        Some(path) => (load_trace(path)?, path.display().to_string()),
        None => (generate(cfg, r)?.1, "generated".to_string()),
    };
    let fid = trace.meta().fidelity.unwrap_or(r.fidelity);
    let psd = periodogram(&trace, cfg.trace.segment_len.min(trace.len()), cfg.trace.overlap)?;
    out.write("psd.csv", psd.to_csv())?;
    let fit = fit_lorentzian(&psd, Some(&fid), &FitOptions::default())?;
    out.write("psd_fit.csv", fit_residuals_csv(&psd, fit.f_eff_hat, fit.gamma_hat, fit.floor_hat))?;
    let ci = fit.confidence_intervals();
    Ok(json!({
        "command": "psd",
        "seed": cfg.seed,
        "source": source,
        "n_samples": trace.len(),
        "n_segments": psd.n_segments,
        "segment_len": psd.segment_len,
        "f_eff_hat": fit.f_eff_hat,
        "f_eff_std": fit.std_errors[0],
        "f_eff_ci95": [ci[0].0, ci[0].1],
        "gamma_hat_per_s": fit.gamma_hat,
        "gamma_ci95": [ci[1].0, ci[1].1],
        "tau_hat_ms": fit.tau_hat_ms(),
        "tau_std_ms": fit.tau_std_ms(),
        "floor_hat": fit.floor_hat,
        "f_m_hat": fit.f_m_hat,
        "corner_hz": fit.corner_hz(),
        "residual_norm": fit.residual_norm,
        "iterations": fit.iterations,
        "f_eff_expected": fid.effective_fidelity(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Calibration {
    Degeneracy,
    Duration,
    IrbDuration,
    RamseyVsEcho,
}

fn sweep_json(s: &SweepResult) -> Value {
    json!({ "axis": s.axis_label, "points": s.axis.len(), "located": s.located })
}

pub fn calibrate(cfg: &RunConfig, r: &Resolved, which: Calibration, out: &mut Output) -> Result<Value, CliError> {
    let c = &cfg.calibrate;
    let mut report = match which {
        Calibration::Degeneracy => {
            let voltages = linspace(c.voltage_min_v, c.voltage_max_v, c.voltage_points);
            let eval = evaluation(cfg, r);
            let sweep = find_degeneracy(&r.params, &r.mw, &r.conversion, &voltages, c.delay_ns, &eval)?;
            out.write("degeneracy.csv", sweep.to_csv())?;
            let ng: Vec<f64> = sweep.located.iter().map(|&v| r.conversion.ng_at(v)).collect();
            let mut report = json!({ "sweep": sweep_json(&sweep), "located_ng": ng });
            if let Some(drift_v) = c.drift_v {
                let filter = DriftFilter {
                    threshold_v: c.drift_threshold_v,
                };
                let check = filter.check_run(&r.params, &r.mw, &r.conversion, &voltages, drift_v, &eval)?;
                report["drift_check"] = json!({ "drift_v": drift_v, "threshold_v": filter.threshold_v, "result": check });
            }
            report
        }
        Calibration::Duration => {
            let flats = linspace(c.duration_min_ns, c.duration_max_ns, c.duration_points);
            let sweep = calibrate_duration(&r.params, &r.gate, &r.mw, &flats, &evaluation(cfg, r))?;
            out.write("duration.csv", sweep.to_csv())?;
            json!({
                "sweep": sweep_json(&sweep),
                "theoretical_duration_ns": theoretical_duration_ns(&r.params),
            })
        }
        Calibration::IrbDuration => {
            let flats = linspace(c.duration_min_ns, c.duration_max_ns, c.irb_points);
            let scan = IrbScan {
                depth: c.irb_depth,
                sequences: c.irb_sequences,
                seed: cfg.seed,
                sim: r.sim,
            };
            let sweep = optimize_duration_irb(&r.params, &r.gate, &r.mw, &flats, &scan)?;
            out.write("irb_duration.csv", sweep.to_csv())?;
            json!({ "sweep": sweep_json(&sweep), "depth": c.irb_depth, "sequences": c.irb_sequences })
        }
        Calibration::RamseyVsEcho => ramsey_vs_echo(cfg, r, out)?,
    };
    report["command"] = json!("calibrate");
    report["which"] = json!(clap::ValueEnum::to_possible_value(&which).expect("no skipped variants").get_name());
    report["seed"] = json!(cfg.seed);
    Ok(report)
}

fn ramsey_vs_echo(cfg: &RunConfig, r: &Resolved, out: &mut Output) -> Result<Value, CliError> {
    let c = &cfg.calibrate;
    let noise = if c.quasi_static_noise {
        Some(QuasiStaticNoise::from_t2_star_us(c.t2_star_us.unwrap_or(r.params.t2_ramsey_us))?)
    } else {
        None
    };
    let setup = prepare_ramsey_echo(&r.params, &r.gate, &r.mw, noise.as_ref(), c.quadrature_nodes, &r.sim)?;
    let traces = TraceSettings {
        tunneling: r.tunneling,
        f_g: r.fidelity.f_g,
        f_e: r.fidelity.f_e,
        dt_us: cfg.trace.dt_us,
        n_samples: cfg.n_samples(),
        segment_len: cfg.trace.segment_len,
        overlap: cfg.trace.overlap,
    };
    let mut csv = String::from("run,seed,f_eff_ramsey,f_eff_ramsey_std,f_eff_echo,f_eff_echo_std,tau_ramsey_ms,tau_echo_ms\n");
    let mut echo_wins = 0;
    for k in 0..c.comparison_runs {
        let seed = cfg.seed.wrapping_add(k as u64);
        let run = setup.run(&traces, seed)?;
        if run.f_eff_echo() > run.f_eff_ramsey() {
            echo_wins += 1;
        }
        writeln!(
            csv,
            "{k},{seed},{:.9},{:.9},{:.9},{:.9},{:.6},{:.6}",
            run.ramsey.f_eff_hat,
            run.ramsey.std_errors[0],
            run.echo.f_eff_hat,
            run.echo.std_errors[0],
            run.ramsey.tau_hat_ms(),
            run.echo.tau_hat_ms()
        )
        .unwrap();
    }
    out.write("ramsey_vs_echo.csv", csv)?;
    Ok(json!({
        "setup": setup,
        "f_eff_ramsey_expected": traces.fidelity(setup.f_m_ramsey)?.effective_fidelity(),
        "f_eff_echo_expected": traces.fidelity(setup.f_m_echo)?.effective_fidelity(),
        "runs": c.comparison_runs,
        "echo_wins": echo_wins,
    }))
}
