use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::linalg::C64;
use crate::qdyn::{parity_frequency, Parity, TransmonParams};
use crate::{Error, Result};

/// Offset charge (units of 2e) at which the two parity branches are degenerate.
pub const DEGENERACY_NG: f64 = 0.25;

/// Named single-qubit rotations available as microwave pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhysicalGate {
    /// Idle slot of a gate's duration.
    I,
    X,
    Y,
    X2,
    MinusX2,
    Y2,
    MinusY2,
}

impl PhysicalGate {
    pub const ALL: [PhysicalGate; 7] = [
        PhysicalGate::X2,
        PhysicalGate::MinusX2,
        PhysicalGate::Y2,
        PhysicalGate::MinusY2,
        PhysicalGate::X,
        PhysicalGate::Y,
        PhysicalGate::I,
    ];

    /// The non-trivial rotations.
    pub const ROTATIONS: [PhysicalGate; 6] = [
        PhysicalGate::X2,
        PhysicalGate::MinusX2,
        PhysicalGate::Y2,
        PhysicalGate::MinusY2,
        PhysicalGate::X,
        PhysicalGate::Y,
    ];

    /// Rotation angle and equatorial axis azimuth.
    pub fn rotation(self) -> (f64, f64) {
        match self {
            PhysicalGate::I => (0.0, 0.0),
            PhysicalGate::X => (PI, 0.0),
            PhysicalGate::Y => (PI, PI / 2.0),
            PhysicalGate::X2 => (PI / 2.0, 0.0),
            PhysicalGate::MinusX2 => (PI / 2.0, PI),
            PhysicalGate::Y2 => (PI / 2.0, PI / 2.0),
            PhysicalGate::MinusY2 => (PI / 2.0, -PI / 2.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PhysicalGate::I => "I",
            PhysicalGate::X => "X",
            PhysicalGate::Y => "Y",
            PhysicalGate::X2 => "X/2",
            PhysicalGate::MinusX2 => "-X/2",
            PhysicalGate::Y2 => "Y/2",
            PhysicalGate::MinusY2 => "-Y/2",
        }
    }
}

/// Cosine-envelope microwave pulse with a DRAG quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrowavePulse {
    pub duration_ns: f64,
    /// Idle padding on each side of the envelope.
    pub buffer_ns: f64,
    /// Peak Rabi rate (rad/ns) of the in-phase envelope.
    pub amplitude: f64,
    /// Rotation axis azimuth (rad).
    pub phase: f64,
    pub drag_coefficient: f64,
    /// Anharmonicity (GHz) normalizing the DRAG quadrature.
    pub anharmonicity_ghz: f64,
    pub drive_frequency_ghz: f64,
}

impl MicrowavePulse {
    /// 20-ns pulse with 5-ns buffers at the degeneracy-point frequency,
    /// calibrated as an X gate, DRAG coefficient 0.5.
    pub fn paper_template(params: &TransmonParams) -> Self {
        let mut p = Self {
            duration_ns: 20.0,
            buffer_ns: 5.0,
            amplitude: 0.0,
            phase: 0.0,
            drag_coefficient: 0.5,
            anharmonicity_ghz: params.anharmonicity_ghz,
            drive_frequency_ghz: parity_frequency(params, DEGENERACY_NG, Parity::Even),
        };
        p.amplitude = p.amplitude_for(PI);
        p
    }

    /// Peak amplitude for which `∫Ω dt = angle`.
    pub fn amplitude_for(&self, angle: f64) -> f64 {
        2.0 * angle / self.duration_ns
    }

    /// Same pulse shape retargeted to a rotation.
    pub fn with_rotation(&self, angle: f64, phase: f64) -> Self {
        Self {
            amplitude: self.amplitude_for(angle),
            phase,
            ..*self
        }
    }

    pub fn for_gate(&self, gate: PhysicalGate) -> Self {
        let (angle, phase) = gate.rotation();
        self.with_rotation(angle, phase)
    }

    /// `∫Ω dt` of the in-phase envelope.
    pub fn rotation_angle(&self) -> f64 {
        0.5 * self.amplitude * self.duration_ns
    }

    pub fn span_ns(&self) -> f64 {
        self.duration_ns + 2.0 * self.buffer_ns
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_ns > 0.0) {
            return Err(Error::invalid("mw.duration_ns", "must be positive"));
        }
        if !(self.buffer_ns >= 0.0) {
            return Err(Error::invalid("mw.buffer_ns", "must be non-negative"));
        }
        if !(self.anharmonicity_ghz > 0.0) && self.drag_coefficient != 0.0 {
            return Err(Error::invalid(
                "mw.anharmonicity_ghz",
                "DRAG needs a positive anharmonicity",
            ));
        }
        Ok(())
    }
}

/// Complex drive amplitude (rad/ns) at time `t` measured from the start of
/// the pulse span (buffers included).
///
/// In-phase part `(A/2)(1 − cos(2π t'/τ))`, quadrature
/// `(β/2πη)·dΩ/dt`, both rotated by the pulse phase; zero in the buffers.
pub fn drag_envelope(p: &MicrowavePulse, t: f64) -> C64 {
    let local = t - p.buffer_ns;
    if local <= 0.0 || local >= p.duration_ns {
        return C64::new(0.0, 0.0);
    }
    let w = 2.0 * PI / p.duration_ns;
    let in_phase = 0.5 * p.amplitude * (1.0 - (w * local).cos());
    let slope = 0.5 * p.amplitude * w * (w * local).sin();
    let quadrature = if p.drag_coefficient == 0.0 {
        0.0
    } else {
        p.drag_coefficient / (2.0 * PI * p.anharmonicity_ghz) * slope
    };
    C64::new(in_phase, quadrature) * C64::from_polar(1.0, p.phase)
}

/// Erf-edged square displacement of the offset charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedSquare {
    /// Center of the rising edge (ns).
    pub t0_ns: f64,
    /// Flat-top duration between the edge centers (ns).
    pub flat_ns: f64,
    pub sigma_ns: f64,
    /// Offset-charge displacement (units of 2e).
    pub amplitude: f64,
}

impl SmoothedSquare {
    pub fn validate(&self) -> Result<()> {
        if !(self.flat_ns > 0.0) {
            return Err(Error::invalid("gate.flat_ns", "must be positive"));
        }
        if !(self.sigma_ns > 0.0) {
            return Err(Error::invalid("gate.sigma_ns", "must be positive"));
        }
        Ok(())
    }

    /// `∫ value dt = A·T`.
    pub fn area(&self) -> f64 {
        self.amplitude * self.flat_ns
    }
}

/// `(A/2)[erf((t−t0)/(√2σ)) − erf((t−t0−T)/(√2σ))]`.
pub fn smoothed_square_value(p: &SmoothedSquare, t: f64) -> f64 {
    let s = SQRT_2 * p.sigma_ns;
    0.5 * p.amplitude * (libm::erf((t - p.t0_ns) / s) - libm::erf((t - p.t0_ns - p.flat_ns) / s))
}

/// Two equal and opposite smoothed squares on top of a baseline offset charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatePulseNetZero {
    pub ng0: f64,
    pub first: SmoothedSquare,
    pub second: SmoothedSquare,
}

impl GatePulseNetZero {
    pub fn new(ng0: f64, amplitude: f64, t1_ns: f64, t2_ns: f64, flat_ns: f64, sigma_ns: f64) -> Self {
        let first = SmoothedSquare {
            t0_ns: t1_ns,
            flat_ns,
            sigma_ns,
            amplitude,
        };
        Self {
            ng0,
            first,
            second: SmoothedSquare {
                t0_ns: t2_ns,
                amplitude: -amplitude,
                ..first
            },
        }
    }

    /// `∫(n_g(t) − n_g0) dt` from the closed-form areas.
    pub fn displacement_integral(&self) -> f64 {
        self.first.area() + self.second.area()
    }
}

pub fn ng_of_t(g: &GatePulseNetZero, t: f64) -> f64 {
    g.ng0 + smoothed_square_value(&g.first, t) + smoothed_square_value(&g.second, t)
}

/// Shape and placement rules for gate displacements inside a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSettings {
    /// Baseline offset charge (the degeneracy point in normal operation).
    pub ng0: f64,
    /// Displacement amplitude (units of 2e).
    pub amplitude: f64,
    pub flat_ns: f64,
    pub sigma_ns: f64,
    /// Padding before and after the flat top inside the segment; `2σ` by default.
    pub edge_ns: f64,
}

impl GateSettings {
    /// Displacement inferred from the 217-ns working point: with σ = 5 ns this
    /// amplitude accumulates a parity phase difference of exactly π.
    pub const PAPER_AMPLITUDE: f64 = 0.201_880_8;
    pub const PAPER_FLAT_NS: f64 = 217.0;
    pub const PAPER_SIGMA_NS: f64 = 5.0;

    pub fn paper() -> Self {
        Self::new(Self::PAPER_AMPLITUDE, Self::PAPER_FLAT_NS, Self::PAPER_SIGMA_NS)
    }

    pub fn new(amplitude: f64, flat_ns: f64, sigma_ns: f64) -> Self {
        Self {
            ng0: DEGENERACY_NG,
            amplitude,
            flat_ns,
            sigma_ns,
            edge_ns: 2.0 * sigma_ns,
        }
    }

    pub fn with_flat(self, flat_ns: f64) -> Self {
        Self { flat_ns, ..self }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    /// Segment length `T + 2·edge` (237 ns for the paper settings).
    pub fn span_ns(&self) -> f64 {
        self.flat_ns + 2.0 * self.edge_ns
    }

    /// The displacement placed in a segment starting at `start_ns`.
    pub fn placed(&self, start_ns: f64, sign: f64) -> SmoothedSquare {
        SmoothedSquare {
            t0_ns: start_ns + self.edge_ns,
            flat_ns: self.flat_ns,
            sigma_ns: self.sigma_ns,
            amplitude: sign * self.amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.placed(0.0, 1.0).validate()?;
        if !(self.edge_ns >= 0.0) {
            return Err(Error::invalid("gate.edge_ns", "must be non-negative"));
        }
        if !self.amplitude.is_finite() || !self.ng0.is_finite() {
            return Err(Error::invalid("gate.amplitude", "must be finite"));
        }
        Ok(())
    }
}

/// Conversion between gate-line voltage and offset charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConversion {
    /// Volts per unit offset charge (2e).
    pub volts_per_charge: f64,
    /// Offset charge at zero applied voltage.
    pub ng_at_zero_volts: f64,
}

impl GateConversion {
    pub const PAPER_AMPLITUDE_V: f64 = 0.67;

    /// 0.67 V corresponds to [`GateSettings::PAPER_AMPLITUDE`].
    pub fn paper() -> Self {
        Self {
            volts_per_charge: Self::PAPER_AMPLITUDE_V / GateSettings::PAPER_AMPLITUDE,
            ng_at_zero_volts: 0.0,
        }
    }

    pub fn charge_for_volts(&self, volts: f64) -> f64 {
        volts / self.volts_per_charge
    }

    pub fn ng_at(&self, volts: f64) -> f64 {
        self.ng_at_zero_volts + self.charge_for_volts(volts)
    }

    pub fn volts_at(&self, ng: f64) -> f64 {
        (ng - self.ng_at_zero_volts) * self.volts_per_charge
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> SmoothedSquare {
        SmoothedSquare {
            t0_ns: 10.0,
            flat_ns: 217.0,
            sigma_ns: 5.0,
            amplitude: 0.25,
        }
    }

    #[test]
    fn flat_top_reaches_amplitude() {
        let p = square();
        let mid = smoothed_square_value(&p, p.t0_ns + p.flat_ns / 2.0);
        assert!((mid - p.amplitude).abs() < 1e-6 * p.amplitude);
    }

    #[test]
    fn vanishes_far_away() {
        let p = square();
        assert!(smoothed_square_value(&p, -1e4).abs() < 1e-15);
        assert!(smoothed_square_value(&p, 1e4).abs() < 1e-15);
    }

    #[test]
    fn symmetric_about_center() {
        let p = square();
        for x in [-12.0, -3.0, 0.0, 4.5, 30.0] {
            let a = smoothed_square_value(&p, p.t0_ns + x);
            let b = smoothed_square_value(&p, p.t0_ns + p.flat_ns - x);
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn net_zero_baseline_and_plateau() {
        let g = GatePulseNetZero::new(0.25, 0.25, 20.0, 300.0, 217.0, 5.0);
        assert_eq!(ng_of_t(&g, -500.0), 0.25);
        assert!((ng_of_t(&g, 20.0 + 108.5) - 0.5).abs() < 1e-9);
        assert!((ng_of_t(&g, 300.0 + 108.5) - 0.0).abs() < 1e-9);
        assert_eq!(g.displacement_integral(), 0.0);
    }

    #[test]
    fn net_zero_integral_numerically() {
        let g = GatePulseNetZero::new(0.25, 0.25, 20.0, 300.0, 217.0, 5.0);
        let (a, b, n) = (-100.0, 700.0, 160_000);
        let h = (b - a) / n as f64;
        let sum: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * (ng_of_t(&g, a + i as f64 * h) - g.ng0)
            })
            .sum::<f64>()
            * h;
        assert!(sum.abs() < 1e-9 * 0.25 * 217.0);
    }

    #[test]
    fn drag_envelope_edges_and_quadrature() {
        let params = TransmonParams::paper_device();
        let mut p = MicrowavePulse::paper_template(&params);
        assert_eq!(drag_envelope(&p, 0.0), C64::new(0.0, 0.0));
        assert_eq!(drag_envelope(&p, p.buffer_ns), C64::new(0.0, 0.0));
        assert_eq!(drag_envelope(&p, p.buffer_ns + p.duration_ns), C64::new(0.0, 0.0));
        assert!(drag_envelope(&p, p.buffer_ns + 1e-9).norm() < 1e-10);
        assert!(drag_envelope(&p, 12.0).im.abs() > 0.0);
        p.drag_coefficient = 0.0;
        for t in [6.0, 10.0, 15.0, 24.0] {
            assert_eq!(drag_envelope(&p, t).im, 0.0);
        }
    }

    #[test]
    fn envelope_area_is_rotation_angle() {
        let params = TransmonParams::paper_device();
        let p = MicrowavePulse::paper_template(&params);
        let n = 30_000;
        let h = p.span_ns() / n as f64;
        let area: f64 = (0..n).map(|i| drag_envelope(&p, (i as f64 + 0.5) * h).re).sum::<f64>() * h;
        assert!((area - PI).abs() < 1e-6);
        assert!((p.rotation_angle() - PI).abs() < 1e-15);
        // The DRAG quadrature is a derivative and integrates to zero.
        let q: f64 = (0..n).map(|i| drag_envelope(&p, (i as f64 + 0.5) * h).im).sum::<f64>() * h;
        assert!(q.abs() < 1e-9);
    }

    #[test]
    fn gate_settings_span() {
        assert_eq!(GateSettings::paper().span_ns(), 237.0);
    }

    #[test]
    fn conversion_round_trip() {
        let c = GateConversion::paper();
        assert!((c.charge_for_volts(0.67) - GateSettings::PAPER_AMPLITUDE).abs() < 1e-12);
        assert!((c.volts_at(c.ng_at(0.3)) - 0.3).abs() < 1e-12);
    }
}
