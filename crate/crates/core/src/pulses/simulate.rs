use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Vector2;

use super::envelopes::{MicrowavePulse, PhysicalGate};
use super::phase_model::{ideal_phase_model, mapping_targets};
use super::sequence::{compile_single_gate, PulseSequence};
use crate::linalg::{equatorial_rotation, CMatrix, CVector, C64, ONE, ZERO};
use crate::qdyn::{
    charge_modulation, collapse_operators, level_energies, DensityMatrix, DephasingSource,
    LindbladIntegrator, Parity, TimeDependentHamiltonian, TransmonParams, DEFAULT_DT_NS,
};
use crate::{Error, Result};

/// Options for a full pulse-level simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub dt_ns: f64,
    /// Coherence time feeding the dephasing operator; `None` disables decoherence.
    pub decoherence: Option<DephasingSource>,
    /// Static qubit detuning (GHz) added on top of the sequence.
    pub detuning_ghz: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt_ns: DEFAULT_DT_NS,
            decoherence: Some(DephasingSource::Echo),
            detuning_ghz: 0.0,
        }
    }
}

impl SimOptions {
    pub fn coherent() -> Self {
        Self {
            decoherence: None,
            ..Self::default()
        }
    }
}

/// `H(t)` of a compiled sequence in the frame rotating at the drive frequency:
/// static ladder, parity-dependent dispersion through `n_g(t)`, and the
/// drive `½(Ω a† + Ω* a)`.
pub struct SequenceHamiltonian<'a> {
    seq: &'a PulseSequence,
    parity: Parity,
    base: Vec<f64>,
    dispersion: Vec<f64>,
    ladder: Vec<f64>,
}

impl<'a> SequenceHamiltonian<'a> {
    pub fn new(params: &TransmonParams, seq: &'a PulseSequence, parity: Parity, detuning_ghz: f64) -> Self {
        let base = level_energies(params, seq.frame_ghz)
            .into_iter()
            .enumerate()
            .map(|(k, e)| e + 2.0 * PI * k as f64 * detuning_ghz)
            .collect();
        let dispersion = params.epsilon_mhz.iter().map(|e| -PI * e * 1e-3).collect();
        let ladder = (1..params.levels()).map(|k| 0.5 * (k as f64).sqrt()).collect();
        Self {
            seq,
            parity,
            base,
            dispersion,
            ladder,
        }
    }
}

impl TimeDependentHamiltonian for SequenceHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.base.len()
    }

    fn fill(&self, t_ns: f64, out: &mut CMatrix) {
        out.fill(ZERO);
        let c = charge_modulation(self.seq.ng_at(t_ns), self.parity);
        for (k, (e, d)) in self.base.iter().zip(&self.dispersion).enumerate() {
            out[(k, k)] = C64::new(e + d * c, 0.0);
        }
        let omega = self.seq.drive_at(t_ns);
        if omega != ZERO {
            for (k, s) in self.ladder.iter().enumerate() {
                out[(k + 1, k)] = omega * *s;
                out[(k, k + 1)] = omega.conj() * *s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub label: String,
    pub time_ns: f64,
    /// Bloch vector of the qubit block.
    pub bloch: [f64; 3],
    pub populations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub parity: Parity,
    pub final_state: DensityMatrix,
    /// Initial state, then one entry after every segment.
    pub checkpoints: Vec<Checkpoint>,
}

fn checkpoint(label: String, time_ns: f64, rho: &DensityMatrix) -> Checkpoint {
    Checkpoint {
        label,
        time_ns,
        bloch: rho.bloch_vector(),
        populations: (0..rho.dim()).map(|k| rho.population(k)).collect(),
    }
}

fn segment_label(i: usize, seq: &PulseSequence) -> String {
    use super::sequence::SegmentKind;
    match &seq.segments()[i].kind {
        SegmentKind::Microwave { gate, .. } => gate.label().to_string(),
        SegmentKind::Gate(sq) if sq.amplitude >= 0.0 => "gate+".to_string(),
        SegmentKind::Gate(_) => "gate-".to_string(),
        SegmentKind::Idle => "idle".to_string(),
    }
}

/// Evolves `rho0` through `seq` for one parity.
pub fn simulate_from(
    params: &TransmonParams,
    seq: &PulseSequence,
    parity: Parity,
    rho0: &DensityMatrix,
    opts: &SimOptions,
) -> Result<SimulationResult> {
    if params.levels() < 2 {
        return Err(Error::invalid("levels", "need at least 2 levels"));
    }
    if rho0.dim() != params.levels() {
        return Err(Error::DimensionMismatch {
            expected: params.levels(),
            actual: rho0.dim(),
        });
    }
    let collapse = match opts.decoherence {
        Some(source) => collapse_operators(params, source)?,
        None => Vec::new(),
    };
    let h = SequenceHamiltonian::new(params, seq, parity, opts.detuning_ghz);
    let mut integrator = LindbladIntegrator::new(params.levels(), &collapse)?;
    let mut rho = rho0.matrix().clone();
    let mut checkpoints = vec![checkpoint("S1".to_string(), 0.0, rho0)];
    for (i, s) in seq.segments().iter().enumerate() {
        integrator.evolve(&h, &mut rho, s.start_ns, s.end_ns(), opts.dt_ns)?;
        let state = DensityMatrix::from_matrix(rho.clone())?;
        state.check(1e-8, 1e-6, 1e-6).map_err(|_| Error::IntegrationFailure {
            time_ns: s.end_ns(),
            drift: (state.trace() - 1.0)
                .abs()
                .max(-state.min_eigenvalue())
                .max(state.hermiticity_error()),
        })?;
        checkpoints.push(checkpoint(
            format!("S{} after {}", i + 2, segment_label(i, seq)),
            s.end_ns(),
            &state,
        ));
    }
    Ok(SimulationResult {
        parity,
        final_state: DensityMatrix::from_matrix(rho)?,
        checkpoints,
    })
}

/// Evolves `|0⟩⟨0|` through `seq` for one parity.
pub fn simulate_sequence(
    params: &TransmonParams,
    seq: &PulseSequence,
    parity: Parity,
    opts: &SimOptions,
) -> Result<SimulationResult> {
    simulate_from(params, seq, parity, &DensityMatrix::basis(params.levels(), 0), opts)
}

#[derive(Debug, Clone)]
pub struct ParityOutcome {
    pub parity: Parity,
    /// Qubit level this parity should be mapped to.
    pub target_level: usize,
    pub fidelity: f64,
    /// Population outside the qubit subspace at the end.
    pub leakage: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Bloch checkpoints of the ideal phase model, aligned with `checkpoints`.
    pub ideal_checkpoints: Vec<[f64; 3]>,
    /// `⟨ψ_ideal|ρ|ψ_ideal⟩` for the closed-form final state.
    pub ideal_overlap: f64,
}

#[derive(Debug, Clone)]
pub struct MappingReport {
    pub outcomes: Vec<ParityOutcome>,
    /// Mean over parities of the target-level population.
    pub average: f64,
}

impl MappingReport {
    /// `parity,index,label,time_ns,x,y,z,ideal_x,ideal_y,ideal_z`.
    pub fn checkpoints_csv(&self) -> String {
        let mut out = String::from("parity,index,label,time_ns,x,y,z,ideal_x,ideal_y,ideal_z\n");
        for o in &self.outcomes {
            for (i, (c, ideal)) in o.checkpoints.iter().zip(&o.ideal_checkpoints).enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
                    o.parity.name(),
                    i + 1,
                    c.label,
                    c.time_ns,
                    c.bloch[0],
                    c.bloch[1],
                    c.bloch[2],
                    ideal[0],
                    ideal[1],
                    ideal[2]
                );
            }
        }
        out
    }
}

fn embed(psi: &Vector2<C64>, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[0] = psi[0];
    v[1] = psi[1];
    v
}

/// Simulates `seq` for both parities and scores each against the pole the
/// ideal phase model assigns to it.
pub fn mapping_fidelity(
    params: &TransmonParams,
    seq: &PulseSequence,
    opts: &SimOptions,
) -> Result<MappingReport> {
    let targets = mapping_targets(params, seq);
    let run = |parity: Parity, target_level: usize| -> Result<ParityOutcome> {
        let sim = simulate_sequence(params, seq, parity, opts)?;
        let ideal = ideal_phase_model(params, seq, parity, opts.detuning_ghz);
        let rho = &sim.final_state;
        let psi = embed(&ideal.state, rho.dim());
        let ideal_overlap = crate::qdyn::state_fidelity(rho, &psi)?;
        Ok(ParityOutcome {
            parity,
            target_level,
            fidelity: rho.population(target_level).clamp(0.0, 1.0),
            leakage: (2..rho.dim()).map(|k| rho.population(k)).sum(),
            checkpoints: sim.checkpoints,
            ideal_checkpoints: ideal.checkpoints,
            ideal_overlap,
        })
    };
    let (even, odd) = rayon::join(|| run(Parity::Even, targets[0]), || run(Parity::Odd, targets[1]));
    let outcomes = vec![even?, odd?];
    let average = outcomes.iter().map(|o| o.fidelity).sum::<f64>() / 2.0;
    Ok(MappingReport { outcomes, average })
}

/// Average state fidelity of a single microwave gate over the six cardinal
/// qubit states, against the ideal rotation (leakage counts as error).
pub fn gate_fidelity(
    params: &TransmonParams,
    mw: &MicrowavePulse,
    gate: PhysicalGate,
    opts: &SimOptions,
) -> Result<f64> {
    let seq = compile_single_gate(params, mw, gate)?;
    let pulse = mw.for_gate(gate);
    let u = equatorial_rotation(pulse.rotation_angle(), pulse.phase);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let inputs = [
        Vector2::new(ONE, ZERO),
        Vector2::new(ZERO, ONE),
        Vector2::new(C64::new(h, 0.0), C64::new(h, 0.0)),
        Vector2::new(C64::new(h, 0.0), C64::new(-h, 0.0)),
        Vector2::new(C64::new(h, 0.0), C64::new(0.0, h)),
        Vector2::new(C64::new(h, 0.0), C64::new(0.0, -h)),
    ];
    let dim = params.levels();
    let mut total = 0.0;
    for psi in inputs {
        let rho0 = DensityMatrix::from_pure(&embed(&psi, dim));
        let sim = simulate_from(params, &seq, Parity::Even, &rho0, opts)?;
        total += crate::qdyn::state_fidelity(&sim.final_state, &embed(&(u * psi), dim))?;
    }
    Ok(total / inputs.len() as f64)
}

/// Golden-section search for the DRAG coefficient in `[lo, hi]` maximizing
/// the X-gate fidelity. Returns `(coefficient, fidelity)`.
pub fn calibrate_drag(
    params: &TransmonParams,
    mw: &MicrowavePulse,
    (lo, hi): (f64, f64),
    opts: &SimOptions,
) -> Result<(f64, f64)> {
    if !(hi > lo) {
        return Err(Error::invalid("drag range", "upper bound must exceed lower bound"));
    }
    let score = |beta: f64| -> Result<f64> {
        let pulse = MicrowavePulse {
            drag_coefficient: beta,
            ..*mw
        };
        gate_fidelity(params, &pulse, PhysicalGate::X, opts)
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = score(c)?;
    let mut fd = score(d)?;
    while b - a > 1e-4 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = score(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = score(d)?;
        }
    }
    let beta = 0.5 * (a + b);
    Ok((beta, score(beta)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermiticity_error;
    use crate::pulses::envelopes::GateSettings;
    use crate::pulses::sequence::{compile_echo_cpm, FinalGate};

    fn setup() -> (TransmonParams, GateSettings, MicrowavePulse) {
        let p = TransmonParams::paper_device();
        let mw = MicrowavePulse::paper_template(&p);
        (p, GateSettings::paper(), mw)
    }

    #[test]
    fn hamiltonian_is_hermitian_along_the_sequence() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g, &mw, FinalGate::Y2).unwrap();
        let h = SequenceHamiltonian::new(&p, &seq, Parity::Odd, 0.0);
        let mut m = CMatrix::zeros(3, 3);
        let mut t = 0.0;
        while t < seq.total_duration_ns() {
            h.fill(t, &mut m);
            assert!(hermiticity_error(&m) < 1e-10);
            t += 3.7;
        }
    }

    #[test]
    fn x_gate_is_accurate_with_drag() {
        let (p, _, mw) = setup();
        let f = gate_fidelity(&p, &mw, PhysicalGate::X, &SimOptions::coherent()).unwrap();
        assert!(f > 0.9999, "fidelity {f}");
        let two = p.with_levels(2);
        let f2 = gate_fidelity(&two, &MicrowavePulse { drag_coefficient: 0.0, ..mw }, PhysicalGate::X, &SimOptions::coherent()).unwrap();
        assert!(f2 > 1.0 - 1e-9, "two-level fidelity {f2}");
    }

    #[test]
    fn coherent_echo_matches_phase_model() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g, &mw, FinalGate::Y2).unwrap();
        let report = mapping_fidelity(&p, &seq, &SimOptions::coherent()).unwrap();
        for o in &report.outcomes {
            assert!(o.ideal_overlap >= 0.999, "{:?} overlap {}", o.parity, o.ideal_overlap);
            assert_eq!(o.checkpoints.len(), 6);
        }
        assert!(report.average >= 0.999, "average {}", report.average);
    }

    #[test]
    fn zero_displacement_gives_half() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g.with_amplitude(0.0), &mw, FinalGate::Y2).unwrap();
        let report = mapping_fidelity(&p, &seq, &SimOptions::coherent()).unwrap();
        assert!((report.average - 0.5).abs() < 1e-3, "average {}", report.average);
    }

    #[test]
    fn checkpoint_csv_layout() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g, &mw, FinalGate::Y2).unwrap();
        let report = mapping_fidelity(&p, &seq, &SimOptions::coherent()).unwrap();
        let csv = report.checkpoints_csv();
        assert_eq!(csv.lines().count(), 1 + 12);
        assert!(csv.lines().nth(1).unwrap().starts_with("even,1,S1,0,"));
    }
}
