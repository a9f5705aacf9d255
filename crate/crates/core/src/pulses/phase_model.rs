use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use super::envelopes::{GateSettings, MicrowavePulse, PhysicalGate};
use super::sequence::{compile_echo_cpm, FinalGate, PulseSequence, SegmentKind};
use crate::linalg::{bloch_of, equatorial_rotation, C64, ONE, ZERO};
use crate::qdyn::{parity_frequency, Parity, TransmonParams};
use crate::{Error, Result};

/// Largest Simpson step (ns) used for phase integrals.
const PHASE_STEP_NS: f64 = 0.02;

/// Composite Simpson rule with an even number of intervals no wider than `max_h`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, max_h: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut n = ((b - a) / max_h).ceil() as usize;
    n = n.max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Phase `2π∫(f_P(n_g(t)) − f_frame + δf) dt` accumulated by the excited state
/// between `t0` and `t1` (rad).
pub fn parity_phase(
    params: &TransmonParams,
    seq: &PulseSequence,
    parity: Parity,
    detuning_ghz: f64,
    t0: f64,
    t1: f64,
) -> f64 {
    let offset = detuning_ghz - seq.frame_ghz;
    2.0 * PI
        * simpson(
            |t| parity_frequency(params, seq.ng_at(t), parity) + offset,
            t0,
            t1,
            PHASE_STEP_NS,
        )
}

/// Time intervals that each see a single free-precession phase: idle and gate
/// segments whole, microwave segments split at their centre (where the
/// ideal rotation is applied).
fn free_intervals(seq: &PulseSequence) -> Vec<(f64, f64, Option<PhysicalGate>)> {
    let mut out = Vec::new();
    for s in seq.segments() {
        match &s.kind {
            SegmentKind::Microwave { gate, .. } => {
                let mid = s.start_ns + s.duration_ns / 2.0;
                out.push((s.start_ns, mid, None));
                out.push((mid, s.end_ns(), Some(*gate)));
            }
            _ => out.push((s.start_ns, s.end_ns(), None)),
        }
    }
    out
}

/// Bloch-vector trajectory predicted with ideal, instantaneous rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealTrajectory {
    pub parity: Parity,
    /// Final qubit state vector in the rotating frame.
    pub state: Vector2<C64>,
    /// Bloch vectors: the initial state, then one after every segment.
    pub checkpoints: Vec<[f64; 3]>,
}

impl IdealTrajectory {
    pub fn final_bloch(&self) -> [f64; 3] {
        *self.checkpoints.last().expect("initial checkpoint always present")
    }

    pub fn excited_population(&self) -> f64 {
        self.state[1].norm_sqr()
    }
}

fn bloch_of_state(psi: &Vector2<C64>) -> [f64; 3] {
    let rho: Matrix2<C64> = psi * psi.adjoint();
    bloch_of(&rho)
}

fn phase_gate(phi: f64) -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, C64::from_polar(1.0, -phi))
}

/// Closed-form evolution of `|0⟩` through `seq` for one parity.
///
/// Microwave pulses are ideal rotations at their centre; every other stretch
/// of time contributes a z rotation by [`parity_phase`]. `detuning_ghz` is a
/// static qubit-frequency offset (quasi-static noise).
pub fn ideal_phase_model(
    params: &TransmonParams,
    seq: &PulseSequence,
    parity: Parity,
    detuning_ghz: f64,
) -> IdealTrajectory {
    let mut psi = Vector2::new(ONE, ZERO);
    let mut checkpoints = vec![bloch_of_state(&psi)];
    for s in seq.segments() {
        match &s.kind {
            SegmentKind::Microwave { pulse, .. } => {
                let mid = s.start_ns + s.duration_ns / 2.0;
                let before = parity_phase(params, seq, parity, detuning_ghz, s.start_ns, mid);
                let after = parity_phase(params, seq, parity, detuning_ghz, mid, s.end_ns());
                let rotation = equatorial_rotation(pulse.rotation_angle(), pulse.phase);
                psi = phase_gate(after) * rotation * phase_gate(before) * psi;
            }
            _ => {
                let phi = parity_phase(params, seq, parity, detuning_ghz, s.start_ns, s.end_ns());
                psi = phase_gate(phi) * psi;
            }
        }
        checkpoints.push(bloch_of_state(&psi));
    }
    IdealTrajectory {
        parity,
        state: psi,
        checkpoints,
    }
}

/// Qubit level (0 or 1) each parity should end in, `[even, odd]`.
///
/// The parity whose ideal final state has the larger ground-state population
/// is assigned `|0⟩`; on a tie even parity maps to `|1⟩`.
pub fn mapping_targets(params: &TransmonParams, seq: &PulseSequence) -> [usize; 2] {
    let z_even = ideal_phase_model(params, seq, Parity::Even, 0.0).final_bloch()[2];
    let z_odd = ideal_phase_model(params, seq, Parity::Odd, 0.0).final_bloch()[2];
    if z_even - z_odd > 1e-12 {
        [0, 1]
    } else {
        [1, 0]
    }
}

fn is_pi_pulse(gate: PhysicalGate) -> bool {
    matches!(gate, PhysicalGate::X | PhysicalGate::Y)
}

/// `|2π∫ s(t)(f_e − f_o) dt|`, the parity phase difference that survives the
/// echo; `s` flips sign at the centre of every π pulse. Opening and
/// closing microwave pulses bound the integral at their centres.
pub fn refocused_phase_difference(params: &TransmonParams, seq: &PulseSequence) -> f64 {
    let mut intervals = free_intervals(seq);
    // Phase accrued before the opening pulse or after the closing pulse does
    // not reach the measured projection.
    let is_mw = |s: Option<&super::sequence::Segment>| {
        matches!(s.map(|s| &s.kind), Some(SegmentKind::Microwave { .. }))
    };
    if is_mw(seq.segments().last()) {
        intervals.pop();
    }
    if is_mw(seq.segments().first()) {
        intervals.remove(0);
    }
    let mut sign = 1.0;
    let mut total = 0.0;
    for (a, b, second_half_of) in intervals {
        if let Some(g) = second_half_of {
            if is_pi_pulse(g) {
                sign = -sign;
            }
        }
        let d = simpson(
            |t| {
                let ng = seq.ng_at(t);
                parity_frequency(params, ng, Parity::Even) - parity_frequency(params, ng, Parity::Odd)
            },
            a,
            b,
            PHASE_STEP_NS,
        );
        total += sign * d;
    }
    (2.0 * PI * total).abs()
}

/// Echo parity phase difference `δ` of an EchoCPM built from `gate` and `mw`.
pub fn echo_phase_difference(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
) -> Result<f64> {
    let seq = compile_echo_cpm(params, gate, mw, FinalGate::X2)?;
    Ok(refocused_phase_difference(params, &seq))
}

/// `1/(4|ε10|)` in ns: the hard-edged flat duration giving `δ = π` when each
/// displacement reaches the charge sweet point.
pub fn theoretical_duration_ns(params: &TransmonParams) -> f64 {
    1.0 / (4.0 * params.epsilon10_mhz().abs() * 1e-3)
}

fn bisect(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoCrossing);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Displacement amplitude in `(0, 0.25]` for which the EchoCPM reaches
/// `δ = target` with the flat duration of `gate`.
pub fn displacement_for_phase(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
    target: f64,
) -> Result<f64> {
    bisect(
        |a| Ok(echo_phase_difference(params, &gate.with_amplitude(a), mw)? - target),
        0.0,
        0.25,
        1e-10,
    )
}

/// Flat duration (ns) for which the sequence built by `compile` reaches a
/// refocused parity phase difference of `target`.
pub fn flat_for_phase(
    params: &TransmonParams,
    gate: &GateSettings,
    target: f64,
    compile: impl Fn(&GateSettings) -> Result<PulseSequence>,
) -> Result<f64> {
    let delta = |flat: f64| -> Result<f64> {
        let seq = compile(&gate.with_flat(flat))?;
        Ok(refocused_phase_difference(params, &seq) - target)
    };
    let lo = 1e-3;
    let mut hi = 100.0;
    while delta(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoCrossing);
        }
    }
    bisect(delta, lo, hi, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::sequence::{compile_ramsey_cpm, compile_charge_monitor};

    fn setup() -> (TransmonParams, GateSettings, MicrowavePulse) {
        let p = TransmonParams::paper_device();
        let mw = MicrowavePulse::paper_template(&p);
        (p, GateSettings::paper(), mw)
    }

    fn hard_edge(amplitude: f64, flat: f64) -> GateSettings {
        GateSettings {
            edge_ns: 0.0,
            ..GateSettings::new(amplitude, flat, 1e-4)
        }
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 3.0, 0.7);
        assert!((v - (81.0 / 4.0 - 9.0 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn theoretical_duration_value() {
        let (p, _, _) = setup();
        assert!((theoretical_duration_ns(&p) - 209.731_543_6).abs() < 1e-6);
    }

    #[test]
    fn default_amplitude_gives_pi_at_217_ns() {
        let (p, g, mw) = setup();
        let delta = echo_phase_difference(&p, &g, &mw).unwrap();
        assert!((delta - PI).abs() < 1e-5, "delta = {delta}");
    }

    #[test]
    fn hard_edge_sweet_point_duration() {
        let (p, _, mw) = setup();
        let flat = flat_for_phase(&p, &hard_edge(0.25, 200.0), PI, |g| {
            compile_echo_cpm(&p, g, &mw, FinalGate::X2)
        })
        .unwrap();
        assert!((flat - theoretical_duration_ns(&p)).abs() < 0.05, "flat = {flat}");
    }

    #[test]
    fn equatorial_checkpoints_and_poles() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g, &mw, FinalGate::Y2).unwrap();
        let even = ideal_phase_model(&p, &seq, Parity::Even, 0.0);
        let odd = ideal_phase_model(&p, &seq, Parity::Odd, 0.0);
        assert_eq!(even.checkpoints.len(), 6);
        for traj in [&even, &odd] {
            for s in &traj.checkpoints[1..5] {
                assert!(s[2].abs() < 1e-12, "{s:?}");
            }
        }
        let (ze, zo) = (even.final_bloch()[2], odd.final_bloch()[2]);
        assert!(ze.abs() > 1.0 - 1e-9 && zo.abs() > 1.0 - 1e-9);
        assert!((ze + zo).abs() < 1e-12);
        let targets = mapping_targets(&p, &seq);
        assert_ne!(targets[0], targets[1]);
    }

    #[test]
    fn zero_displacement_is_parity_blind() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g.with_amplitude(0.0), &mw, FinalGate::Y2).unwrap();
        let even = ideal_phase_model(&p, &seq, Parity::Even, 0.0);
        let odd = ideal_phase_model(&p, &seq, Parity::Odd, 0.0);
        for (a, b) in even.final_bloch().iter().zip(odd.final_bloch()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(mapping_targets(&p, &seq), [1, 0]);
    }

    #[test]
    fn final_x2_and_minus_x2_are_complementary() {
        let (p, g, mw) = setup();
        for flat in [150.0, 205.0, 240.0] {
            let g = g.with_flat(flat);
            let x = compile_echo_cpm(&p, &g, &mw, FinalGate::X2).unwrap();
            let mx = compile_echo_cpm(&p, &g, &mw, FinalGate::MinusX2).unwrap();
            let pe = ideal_phase_model(&p, &x, Parity::Even, 0.0).excited_population();
            let po = ideal_phase_model(&p, &mx, Parity::Odd, 0.0).excited_population();
            assert!((pe + po - 1.0).abs() < 1e-12);
            let delta = echo_phase_difference(&p, &g, &mw).unwrap();
            assert!((pe - (1.0 - (delta / 2.0).cos()) / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn echo_cancels_static_detuning() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g, &mw, FinalGate::Y2).unwrap();
        let z0 = ideal_phase_model(&p, &seq, Parity::Even, 0.0).final_bloch()[2];
        let z1 = ideal_phase_model(&p, &seq, Parity::Even, 3e-4).final_bloch()[2];
        assert!((z0 - z1).abs() < 1e-9);
    }

    #[test]
    fn ramsey_contrast_follows_detuning() {
        let (p, g, mw) = setup();
        let flat = flat_for_phase(&p, &g, PI, |g| compile_ramsey_cpm(&p, g, &mw, FinalGate::Y2)).unwrap();
        let seq = compile_ramsey_cpm(&p, &g.with_flat(flat), &mw, FinalGate::Y2).unwrap();
        let z = |df| {
            let e = ideal_phase_model(&p, &seq, Parity::Even, df).final_bloch()[2];
            let o = ideal_phase_model(&p, &seq, Parity::Odd, df).final_bloch()[2];
            (e - o).abs() / 2.0
        };
        assert!((z(0.0) - 1.0).abs() < 1e-9);
        // Free evolution between the two π/2 centres.
        let t_free = seq.total_duration_ns() - 30.0;
        for df in [1e-4, 2.5e-4] {
            let expected = (2.0 * PI * df * t_free).cos().abs();
            assert!((z(df) - expected).abs() < 1e-9, "{} vs {expected}", z(df));
        }
    }

    #[test]
    fn charge_monitor_fringe() {
        let (p, _, mw) = setup();
        let base = compile_charge_monitor(&p, &mw, 800.0).unwrap();
        let pop = |ng: f64| {
            let seq = base.with_ng0(ng);
            Parity::BOTH
                .iter()
                .map(|&par| ideal_phase_model(&p, &seq, par, 0.0).excited_population())
                .sum::<f64>()
                / 2.0
        };
        assert!((pop(0.25) - 1.0).abs() < 1e-12);
        let phi = PI * 1.192e-3 * 830.0;
        assert!((pop(0.5) - (1.0 + phi.cos()) / 2.0).abs() < 1e-9);
        assert!(pop(0.5) < 0.01);
        let zero = compile_charge_monitor(&p, &mw, 0.0).unwrap().with_ng0(0.1);
        assert!((ideal_phase_model(&p, &zero, Parity::Odd, 0.0).excited_population() - 1.0).abs() < 1e-2);
    }
}
