use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::parity::{generate_traces, FidelityModel, TunnelingModel};
use crate::pulses::{
    compile_echo_cpm, compile_ramsey_cpm, flat_for_phase, mapping_fidelity, FinalGate, GateSettings, MicrowavePulse,
    PulseSequence, SimOptions,
};
use crate::qdyn::TransmonParams;
use crate::spectral::{fit_lorentzian, periodogram, FitOptions, LorentzianFit, DEFAULT_OVERLAP, DEFAULT_SEGMENT_LEN};
use crate::{Error, Result};

/// Shot-to-shot static qubit detuning, Gaussian with standard deviation
/// `sigma_ghz` and constant within each shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiStaticNoise {
    pub sigma_ghz: f64,
}

impl QuasiStaticNoise {
    pub fn new(sigma_ghz: f64) -> Result<Self> {
        if !(sigma_ghz.is_finite() && sigma_ghz >= 0.0) {
            return Err(Error::invalid("sigma_ghz", format!("must be non-negative, got {sigma_ghz}")));
        }
        Ok(Self { sigma_ghz })
    }

    /// Width whose Gaussian Ramsey decay `exp(−(t/T2*)²)` has the given `T2*`.
    pub fn from_t2_star_us(t2_star_us: f64) -> Result<Self> {
        if !(t2_star_us.is_finite() && t2_star_us > 0.0) {
            return Err(Error::invalid("t2_star_us", format!("must be positive, got {t2_star_us}")));
        }
        Self::new(2f64.sqrt() / (2.0 * PI * t2_star_us * 1e3))
    }
}

/// Nodes and weights for `E[f(Z)]`, `Z ~ N(0, 1)`, exact for polynomials of
/// degree below `2n`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one node");
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k] * 2f64.sqrt(), eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Average mapping fidelity of `seq` over the quasi-static detuning
/// distribution.
pub fn averaged_mapping_fidelity(
    params: &TransmonParams,
    seq: &PulseSequence,
    noise: Option<&QuasiStaticNoise>,
    nodes: usize,
    sim: &SimOptions,
) -> Result<f64> {
    let (z, w) = match noise {
        Some(n) if n.sigma_ghz > 0.0 => gauss_hermite(nodes.max(1)),
        _ => (vec![0.0], vec![1.0]),
    };
    let sigma = noise.map_or(0.0, |n| n.sigma_ghz);
    let values: Vec<f64> = z
        .par_iter()
        .map(|&zi| {
            let opts = SimOptions {
                detuning_ghz: sim.detuning_ghz + sigma * zi,
                ..*sim
            };
            Ok(mapping_fidelity(params, seq, &opts)?.average)
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().zip(&w).map(|(v, wi)| v * wi).sum())
}

/// Trace, periodogram and fit settings shared by both protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSettings {
    pub tunneling: TunnelingModel,
    pub f_g: f64,
    pub f_e: f64,
    pub dt_us: f64,
    pub n_samples: usize,
    pub segment_len: usize,
    pub overlap: f64,
}

impl TraceSettings {
    /// τ = 30.2 ms, paper readout fidelities, 30 s at 4 µs.
    pub fn paper() -> Self {
        Self {
            tunneling: TunnelingModel::paper(),
            f_g: 0.995,
            f_e: 0.951,
            dt_us: 4.0,
            n_samples: 7_500_000,
            segment_len: DEFAULT_SEGMENT_LEN,
            overlap: DEFAULT_OVERLAP,
        }
    }

    pub fn fidelity(&self, f_m: f64) -> Result<FidelityModel> {
        FidelityModel::new(self.f_g, self.f_e, f_m)
    }
}

/// Mapping fidelities of the two protocols, computed once per noise setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RamseyEchoSetup {
    pub ramsey_flat_ns: f64,
    pub echo_flat_ns: f64,
    pub sigma_ghz: f64,
    pub f_m_ramsey: f64,
    pub f_m_echo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamseyEchoRun {
    pub seed: u64,
    pub ramsey: LorentzianFit,
    pub echo: LorentzianFit,
}

impl RamseyEchoRun {
    pub fn f_eff_ramsey(&self) -> f64 {
        self.ramsey.f_eff_hat
    }

    pub fn f_eff_echo(&self) -> f64 {
        self.echo.f_eff_hat
    }
}

/// Builds both mapping sequences at the displacement amplitude of `gate`
/// (the Ramsey flat duration is solved for `δ = π`, the echo uses `gate`
/// as given) and averages their mapping fidelities over the noise.
/// Markovian decoherence follows `sim` for both protocols.
pub fn prepare_ramsey_echo(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
    noise: Option<&QuasiStaticNoise>,
    nodes: usize,
    sim: &SimOptions,
) -> Result<RamseyEchoSetup> {
    let ramsey_flat_ns = flat_for_phase(params, gate, PI, |g| compile_ramsey_cpm(params, g, mw, FinalGate::Y2))?;
    let ramsey = compile_ramsey_cpm(params, &gate.with_flat(ramsey_flat_ns), mw, FinalGate::Y2)?;
    let echo = compile_echo_cpm(params, gate, mw, FinalGate::Y2)?;
    let (r, e) = rayon::join(
        || averaged_mapping_fidelity(params, &ramsey, noise, nodes, sim),
        || averaged_mapping_fidelity(params, &echo, noise, nodes, sim),
    );
    Ok(RamseyEchoSetup {
        ramsey_flat_ns,
        echo_flat_ns: gate.flat_ns,
        sigma_ghz: noise.map_or(0.0, |n| n.sigma_ghz),
        f_m_ramsey: r?,
        f_m_echo: e?,
    })
}

impl RamseyEchoSetup {
    /// Generates one measured trace per protocol from the same seed (same
    /// tunneling history and readout uniforms), and fits both spectra.
    pub fn run(&self, traces: &TraceSettings, seed: u64) -> Result<RamseyEchoRun> {
        let fit = |f_m: f64| -> Result<LorentzianFit> {
            let fid = traces.fidelity(f_m)?;
            let (_, measured) = generate_traces(&traces.tunneling, Some(&fid), traces.dt_us, traces.n_samples, seed)?;
            let psd = periodogram(&measured.expect("fidelity given"), traces.segment_len, traces.overlap)?;
            fit_lorentzian(&psd, Some(&fid), &FitOptions::default())
        };
        Ok(RamseyEchoRun {
            seed,
            ramsey: fit(self.f_m_ramsey)?,
            echo: fit(self.f_m_echo)?,
        })
    }
}

/// Full chain for one seed: mapping fidelities, traces, spectra and fits.
pub fn compare_ramsey_echo(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
    noise: Option<&QuasiStaticNoise>,
    traces: &TraceSettings,
    seed: u64,
) -> Result<(RamseyEchoSetup, RamseyEchoRun)> {
    let setup = prepare_ramsey_echo(params, gate, mw, noise, 16, &SimOptions::default())?;
    let run = setup.run(traces, seed)?;
    Ok((setup, run))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_hermite_moments() {
        let (z, w) = gauss_hermite(8);
        let m = |k: i32| z.iter().zip(&w).map(|(x, wi)| wi * x.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-12);
        assert!(m(1).abs() < 1e-12);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn noise_width_from_t2_star() {
        let n = QuasiStaticNoise::from_t2_star_us(8.7).unwrap();
        // Ramsey decay exp(−(2πσt)²/2) reaches 1/e at T2*.
        let t = 8700.0;
        assert!(((2.0 * PI * n.sigma_ghz * t).powi(2) / 2.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn echo_is_insensitive_to_static_noise() {
        let p = TransmonParams::paper_device();
        let mw = MicrowavePulse::paper_template(&p);
        let gate = GateSettings::paper();
        let noise = QuasiStaticNoise::from_t2_star_us(p.t2_ramsey_us).unwrap();
        let sim = SimOptions::coherent();
        let quiet = prepare_ramsey_echo(&p, &gate, &mw, None, 8, &sim).unwrap();
        let noisy = prepare_ramsey_echo(&p, &gate, &mw, Some(&noise), 8, &sim).unwrap();
        assert!((quiet.f_m_echo - noisy.f_m_echo).abs() < 2e-4, "{quiet:?} {noisy:?}");
        assert!(noisy.f_m_ramsey < quiet.f_m_ramsey - 5e-4, "{quiet:?} {noisy:?}");
        assert!((quiet.f_m_ramsey - quiet.f_m_echo).abs() < 1e-3);
    }
}
