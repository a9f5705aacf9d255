use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::envelopes::{
    drag_envelope, smoothed_square_value, GatePulseNetZero, GateSettings, MicrowavePulse,
    PhysicalGate, SmoothedSquare,
};
use crate::linalg::C64;
use crate::qdyn::TransmonParams;
use crate::{Error, Result};

/// Final rotation of a charge-parity mapping sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinalGate {
    Y2,
    X2,
    MinusX2,
}

impl FinalGate {
    pub fn gate(self) -> PhysicalGate {
        match self {
            FinalGate::Y2 => PhysicalGate::Y2,
            FinalGate::X2 => PhysicalGate::X2,
            FinalGate::MinusX2 => PhysicalGate::MinusX2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind {
    Microwave {
        gate: PhysicalGate,
        pulse: MicrowavePulse,
    },
    Gate(SmoothedSquare),
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start_ns: f64,
    pub duration_ns: f64,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn end_ns(&self) -> f64 {
        self.start_ns + self.duration_ns
    }

    fn kind_label(&self) -> &'static str {
        match self.kind {
            SegmentKind::Microwave { .. } => "mw",
            SegmentKind::Gate(_) => "gate",
            SegmentKind::Idle => "idle",
        }
    }

    fn params_label(&self) -> String {
        match &self.kind {
            SegmentKind::Microwave { gate, pulse } => format!(
                "gate={};angle={:.6};phase={:.6};amplitude={:.6};drag={};freq_ghz={}",
                gate.label(),
                pulse.rotation_angle(),
                pulse.phase,
                pulse.amplitude,
                pulse.drag_coefficient,
                pulse.drive_frequency_ghz
            ),
            SegmentKind::Gate(sq) => format!(
                "t0={};flat={};sigma={};amplitude={:.7}",
                sq.t0_ns, sq.flat_ns, sq.sigma_ns, sq.amplitude
            ),
            SegmentKind::Idle => String::new(),
        }
    }
}

/// Gapless timeline of microwave, gate and idle segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub name: String,
    /// Baseline offset charge.
    pub ng0: f64,
    /// Frequency of the rotating frame (the drive frequency), GHz.
    pub frame_ghz: f64,
    segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn new(name: impl Into<String>, ng0: f64, frame_ghz: f64, segments: Vec<Segment>) -> Result<Self> {
        let mut t = 0.0;
        for (i, s) in segments.iter().enumerate() {
            if !(s.duration_ns >= 0.0) {
                return Err(Error::InvalidSequence(format!(
                    "segment {i} has negative duration {}",
                    s.duration_ns
                )));
            }
            let gap = s.start_ns - t;
            if gap < -1e-9 {
                return Err(Error::InvalidSequence(format!(
                    "segment {i} starts at {} ns, overlapping the previous segment ending at {t} ns",
                    s.start_ns
                )));
            }
            if gap > 1e-9 {
                return Err(Error::InvalidSequence(format!(
                    "gap of {gap} ns before segment {i}"
                )));
            }
            t = s.end_ns();
        }
        Ok(Self {
            name: name.into(),
            ng0,
            frame_ghz,
            segments,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.segments.last().map_or(0.0, Segment::end_ns)
    }

    /// Same timeline evaluated at a different baseline offset charge.
    pub fn with_ng0(&self, ng0: f64) -> Self {
        Self { ng0, ..self.clone() }
    }

    pub fn gate_displacements(&self) -> impl Iterator<Item = &SmoothedSquare> {
        self.segments.iter().filter_map(|s| match &s.kind {
            SegmentKind::Gate(sq) => Some(sq),
            _ => None,
        })
    }

    /// Offset charge at `t`, including edge tails spilling into neighbours.
    pub fn ng_at(&self, t: f64) -> f64 {
        self.ng0
            + self
                .gate_displacements()
                .map(|sq| smoothed_square_value(sq, t))
                .sum::<f64>()
    }

    /// Complex microwave drive (rad/ns) at `t`.
    pub fn drive_at(&self, t: f64) -> C64 {
        for s in &self.segments {
            if let SegmentKind::Microwave { pulse, .. } = &s.kind {
                if t > s.start_ns && t < s.end_ns() {
                    return drag_envelope(pulse, t - s.start_ns);
                }
            }
        }
        C64::new(0.0, 0.0)
    }

    /// `∫(n_g(t) − n_g0) dt` from closed-form areas.
    pub fn displacement_integral(&self) -> f64 {
        self.gate_displacements().map(SmoothedSquare::area).sum()
    }

    /// The two gate displacements as a net-zero pair, when there are exactly two.
    pub fn net_zero_pulse(&self) -> Option<GatePulseNetZero> {
        let gates: Vec<_> = self.gate_displacements().collect();
        match gates.as_slice() {
            [a, b] if (a.amplitude + b.amplitude).abs() <= 1e-12 * a.amplitude.abs().max(1.0) => {
                Some(GatePulseNetZero {
                    ng0: self.ng0,
                    first: **a,
                    second: **b,
                })
            }
            _ => None,
        }
    }

    /// Plain-text timeline: `t_start_ns,t_end_ns,kind,params`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_start_ns,t_end_ns,kind,params\n");
        for s in &self.segments {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                s.start_ns,
                s.end_ns(),
                s.kind_label(),
                s.params_label()
            );
        }
        out
    }
}

struct Builder {
    t: f64,
    segments: Vec<Segment>,
}

impl Builder {
    fn new() -> Self {
        Self {
            t: 0.0,
            segments: Vec::new(),
        }
    }

    fn mw(&mut self, template: &MicrowavePulse, gate: PhysicalGate) -> &mut Self {
        let pulse = template.for_gate(gate);
        let duration_ns = pulse.span_ns();
        self.push(duration_ns, SegmentKind::Microwave { gate, pulse })
    }

    fn gate(&mut self, settings: &GateSettings, sign: f64) -> &mut Self {
        let sq = settings.placed(self.t, sign);
        self.push(settings.span_ns(), SegmentKind::Gate(sq))
    }

    fn idle(&mut self, duration_ns: f64) -> &mut Self {
        if duration_ns > 0.0 {
            self.push(duration_ns, SegmentKind::Idle);
        }
        self
    }

    fn push(&mut self, duration_ns: f64, kind: SegmentKind) -> &mut Self {
        self.segments.push(Segment {
            start_ns: self.t,
            duration_ns,
            kind,
        });
        self.t += duration_ns;
        self
    }

    fn finish(&mut self, name: &str, ng0: f64, mw: &MicrowavePulse) -> Result<PulseSequence> {
        PulseSequence::new(name, ng0, mw.drive_frequency_ghz, std::mem::take(&mut self.segments))
    }
}

fn check_inputs(params: &TransmonParams, gate: Option<&GateSettings>, mw: &MicrowavePulse) -> Result<()> {
    if params.levels() < 2 {
        return Err(Error::invalid("levels", "need at least 2 levels"));
    }
    mw.validate()?;
    if let Some(g) = gate {
        g.validate()?;
    }
    Ok(())
}

/// X/2 — gate(+A) — X — gate(−A) — final gate.
pub fn compile_echo_cpm(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
    final_gate: FinalGate,
) -> Result<PulseSequence> {
    check_inputs(params, Some(gate), mw)?;
    Builder::new()
        .mw(mw, PhysicalGate::X2)
        .gate(gate, 1.0)
        .mw(mw, PhysicalGate::X)
        .gate(gate, -1.0)
        .mw(mw, final_gate.gate())
        .finish("echo-cpm", gate.ng0, mw)
}

/// X/2 — gate(+A) — final gate, without refocusing.
///
/// With symmetric parity phases the final rotation must be about y to map
/// the two branches onto opposite poles; [`FinalGate::Y2`] is the usual choice.
pub fn compile_ramsey_cpm(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
    final_gate: FinalGate,
) -> Result<PulseSequence> {
    check_inputs(params, Some(gate), mw)?;
    Builder::new()
        .mw(mw, PhysicalGate::X2)
        .gate(gate, 1.0)
        .mw(mw, final_gate.gate())
        .finish("ramsey-cpm", gate.ng0, mw)
}

/// X/2 — idle(delay) — X/2 at the drive frequency, for offset-charge monitoring.
/// The probed offset charge is set with [`PulseSequence::with_ng0`].
pub fn compile_charge_monitor(
    params: &TransmonParams,
    mw: &MicrowavePulse,
    delay_ns: f64,
) -> Result<PulseSequence> {
    check_inputs(params, None, mw)?;
    if !(delay_ns >= 0.0) {
        return Err(Error::invalid("delay_ns", format!("must be non-negative, got {delay_ns}")));
    }
    Builder::new()
        .mw(mw, PhysicalGate::X2)
        .idle(delay_ns)
        .mw(mw, PhysicalGate::X2)
        .finish("charge-monitor", super::DEGENERACY_NG, mw)
}

/// Two echo phase-accumulation blocks of opposite gate sign:
/// gate(+A) — X — gate(−A) — gate(−A) — X — gate(+A).
pub fn compile_pseudo_z(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
) -> Result<PulseSequence> {
    check_inputs(params, Some(gate), mw)?;
    Builder::new()
        .gate(gate, 1.0)
        .mw(mw, PhysicalGate::X)
        .gate(gate, -1.0)
        .gate(gate, -1.0)
        .mw(mw, PhysicalGate::X)
        .gate(gate, 1.0)
        .finish("pseudo-z", gate.ng0, mw)
}

/// A single microwave gate in its own span.
pub fn compile_single_gate(
    params: &TransmonParams,
    mw: &MicrowavePulse,
    gate: PhysicalGate,
) -> Result<PulseSequence> {
    check_inputs(params, None, mw)?;
    Builder::new()
        .mw(mw, gate)
        .finish(gate.label(), super::DEGENERACY_NG, mw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (TransmonParams, GateSettings, MicrowavePulse) {
        let p = TransmonParams::paper_device();
        let mw = MicrowavePulse::paper_template(&p);
        (p, GateSettings::paper(), mw)
    }

    #[test]
    fn echo_cpm_duration() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g, &mw, FinalGate::Y2).unwrap();
        assert!((seq.total_duration_ns() - (3.0 * 30.0 + 2.0 * 237.0)).abs() < 1e-9);
        assert_eq!(seq.segments().len(), 5);
    }

    #[test]
    fn echo_cpm_is_net_zero() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g, &mw, FinalGate::X2).unwrap();
        let pair = seq.net_zero_pulse().unwrap();
        assert_eq!(pair.displacement_integral(), 0.0);
        assert_eq!(seq.displacement_integral(), 0.0);
        // Plateau of the first displacement and baseline at the ends.
        assert!((seq.ng_at(30.0 + 118.5) - (0.25 + g.amplitude)).abs() < 1e-9);
        assert!((seq.ng_at(30.0 + 237.0 + 30.0 + 118.5) - (0.25 - g.amplitude)).abs() < 1e-9);
        assert!((seq.ng_at(0.0) - 0.25).abs() < 1e-6);
    }

    #[test]
    fn pseudo_z_is_net_zero() {
        let (p, g, mw) = setup();
        let seq = compile_pseudo_z(&p, &g, &mw).unwrap();
        assert_eq!(seq.displacement_integral(), 0.0);
        assert!((seq.total_duration_ns() - (4.0 * 237.0 + 60.0)).abs() < 1e-9);
    }

    #[test]
    fn overlapping_segments_rejected() {
        let seg = |start, duration_ns| Segment {
            start_ns: start,
            duration_ns,
            kind: SegmentKind::Idle,
        };
        assert!(PulseSequence::new("x", 0.25, 3.5, vec![seg(0.0, 10.0), seg(5.0, 10.0)]).is_err());
        assert!(PulseSequence::new("x", 0.25, 3.5, vec![seg(0.0, 10.0), seg(12.0, 10.0)]).is_err());
        assert!(PulseSequence::new("x", 0.25, 3.5, vec![seg(0.0, 10.0), seg(10.0, 10.0)]).is_ok());
    }

    #[test]
    fn charge_monitor_layout() {
        let (p, _, mw) = setup();
        let seq = compile_charge_monitor(&p, &mw, 800.0).unwrap();
        assert!((seq.total_duration_ns() - 860.0).abs() < 1e-9);
        let zero = compile_charge_monitor(&p, &mw, 0.0).unwrap();
        assert_eq!(zero.segments().len(), 2);
        assert!(compile_charge_monitor(&p, &mw, -1.0).is_err());
    }

    #[test]
    fn csv_dump_has_one_row_per_segment() {
        let (p, g, mw) = setup();
        let seq = compile_echo_cpm(&p, &g, &mw, FinalGate::Y2).unwrap();
        let csv = seq.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t_start_ns,t_end_ns,kind,params");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,30,mw,gate=X/2"));
        assert!(lines[2].contains(",gate,"));
        assert!(lines[5].contains("gate=Y/2"));
    }
}
