use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{Matrix2, Vector4};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::Channel;
use super::group::{gate_unitary, CliffordGroup};
use crate::linalg::{pauli_z, C64};
use crate::pulses::PhysicalGate;
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Target gate inserted after every random Clifford.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterleavedGate {
    X2,
    Y2,
    PseudoZ,
}

impl InterleavedGate {
    pub fn unitary(self) -> Matrix2<C64> {
        match self {
            InterleavedGate::X2 => gate_unitary(PhysicalGate::X2),
            InterleavedGate::Y2 => gate_unitary(PhysicalGate::Y2),
            InterleavedGate::PseudoZ => pauli_z(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InterleavedGate::X2 => "X/2",
            InterleavedGate::Y2 => "Y/2",
            InterleavedGate::PseudoZ => "pseudo-Z",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    pub depths: Vec<usize>,
    pub sequences_per_depth: usize,
    pub seed: u64,
    pub interleaved: Option<InterleavedGate>,
    /// Binomial shots per sequence; `None` uses exact probabilities.
    pub shots: Option<u64>,
}

impl RbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() {
            return Err(Error::invalid("depths", "at least one depth is required"));
        }
        if self.depths[0] == 0 {
            return Err(Error::invalid("depths", "depths must be positive"));
        }
        if self.depths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("depths", "depths must be strictly increasing"));
        }
        if self.sequences_per_depth == 0 {
            return Err(Error::invalid("sequences_per_depth", "must be at least 1"));
        }
        if self.shots == Some(0) {
            return Err(Error::invalid("shots", "must be at least 1"));
        }
        Ok(())
    }
}

/// Noise model supplying the channel of every Clifford.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Ideal,
    /// Depolarizing with parameter `p` after every Clifford.
    Depolarizing(f64),
    /// Each Clifford is the composition of its physical gates' channels.
    PerGate(HashMap<PhysicalGate, Channel>),
}

impl ChannelModel {
    /// Unitary gates followed by depolarizing noise `p` each.
    pub fn per_gate_depolarizing(p: f64) -> Self {
        ChannelModel::PerGate(
            PhysicalGate::ALL
                .iter()
                .map(|&g| (g, Channel::unitary(&gate_unitary(g)).then(&Channel::depolarizing(p))))
                .collect(),
        )
    }

    /// Unitary gates followed by relaxation and dephasing over `duration_ns`.
    pub fn per_gate_damping(duration_ns: f64, t1_us: f64, t2_us: f64) -> Self {
        let noise = Channel::damping(duration_ns, t1_us, t2_us);
        ChannelModel::PerGate(
            PhysicalGate::ALL
                .iter()
                .map(|&g| (g, Channel::unitary(&gate_unitary(g)).then(&noise)))
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChannelModel::Ideal => Ok(()),
            ChannelModel::Depolarizing(p) => Channel::depolarizing(*p).check_cptp(1e-9),
            ChannelModel::PerGate(map) => {
                for g in PhysicalGate::ALL {
                    map.get(&g)
                        .ok_or_else(|| Error::invalid("channel model", format!("no channel for {}", g.label())))?
                        .check_cptp(1e-9)?;
                }
                Ok(())
            }
        }
    }

    /// Channels of all 24 Cliffords.
    pub fn clifford_channels(&self, group: &CliffordGroup) -> Vec<Channel> {
        group
            .elements()
            .iter()
            .map(|e| {
                let ideal = Channel::unitary(&e.unitary);
                match self {
                    ChannelModel::Ideal => ideal,
                    ChannelModel::Depolarizing(p) => ideal.then(&Channel::depolarizing(*p)),
                    ChannelModel::PerGate(map) => e
                        .decomposition
                        .iter()
                        .fold(Channel::identity(), |acc, g| acc.then(&map[g])),
                }
            })
            .collect()
    }
}

/// Random Cliffords (time order) and the recovery element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbSequence {
    pub elements: Vec<usize>,
    /// Clifford index of the interleaved gate, if any.
    pub interleaved: Option<usize>,
    pub recovery: usize,
}

impl RbSequence {
    /// Ideal net operation, which is the identity by construction.
    pub fn net_element(&self, group: &CliffordGroup) -> usize {
        let mut acc = group.identity();
        for &c in &self.elements {
            acc = group.mul(c, acc);
            if let Some(i) = self.interleaved {
                acc = group.mul(i, acc);
            }
        }
        group.mul(self.recovery, acc)
    }
}

/// Draws `m` uniform Cliffords and the element inverting their product
/// (with `interleaved` inserted after each when given).
pub fn random_rb_sequence<R: Rng + ?Sized>(
    group: &CliffordGroup,
    m: usize,
    interleaved: Option<usize>,
    rng: &mut R,
) -> Result<RbSequence> {
    if m == 0 {
        return Err(Error::invalid("m", "sequence length must be at least 1"));
    }
    let elements: Vec<usize> = (0..m).map(|_| rng.random_range(0..CliffordGroup::ORDER)).collect();
    let mut seq = RbSequence {
        elements,
        interleaved,
        recovery: group.identity(),
    };
    seq.recovery = group.inverse(seq.net_element(group));
    Ok(seq)
}

/// Probability of returning to `|0⟩`.
pub fn simulate_sequence(
    seq: &RbSequence,
    clifford_channels: &[Channel],
    interleaved_channel: Option<&Channel>,
) -> f64 {
    let mut r = Vector4::new(1.0, 0.0, 0.0, 1.0);
    for &c in &seq.elements {
        r = clifford_channels[c].apply(&r);
        if let Some(ch) = interleaved_channel {
            r = ch.apply(&r);
        }
    }
    r = clifford_channels[seq.recovery].apply(&r);
    (0.5 * (r[0] + r[3])).clamp(0.0, 1.0)
}

/// Survival statistics at one depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthResult {
    pub depth: usize,
    pub survivals: Vec<f64>,
}

impl DepthResult {
    pub fn mean(&self) -> f64 {
        self.survivals.iter().sum::<f64>() / self.survivals.len() as f64
    }

    /// Sample standard deviation across sequences.
    pub fn std(&self) -> f64 {
        let n = self.survivals.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.survivals.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbResult {
    pub interleaved: Option<InterleavedGate>,
    pub depths: Vec<DepthResult>,
}

impl RbResult {
    /// Flattened `(depth, survival)` pairs for fitting.
    pub fn points(&self) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for d in &self.depths {
            for s in &d.survivals {
                x.push(d.depth as f64);
                y.push(*s);
            }
        }
        (x, y)
    }

    /// `depth,mean_survival,std,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,mean_survival,std,n\n");
        for d in &self.depths {
            let _ = writeln!(out, "{},{:.12},{:.12},{}", d.depth, d.mean(), d.std(), d.survivals.len());
        }
        out
    }
}

/// Runs (interleaved) RB. Sequence `k` at depth index `i` draws from stream
/// `i·n + k` of the master seed, so results do not depend on thread count.
pub fn run_rb(
    group: &CliffordGroup,
    config: &RbConfig,
    model: &ChannelModel,
    interleaved_channel: Option<&Channel>,
) -> Result<RbResult> {
    config.validate()?;
    model.validate()?;
    let interleaved_index = match config.interleaved {
        Some(g) => Some(group.find(&g.unitary()).ok_or_else(|| {
            Error::invalid("interleaved", format!("{} is not a Clifford", g.name()))
        })?),
        None => None,
    };
    let fallback;
    let interleaved_channel = match (config.interleaved, interleaved_channel) {
        (None, _) => None,
        (Some(_), Some(c)) => {
            c.check_cptp(1e-9)?;
            Some(c)
        }
        (Some(g), None) => {
            fallback = Channel::unitary(&g.unitary());
            Some(&fallback)
        }
    };
    let channels = model.clifford_channels(group);
    let n = config.sequences_per_depth;
    let depths = config
        .depths
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let survivals = (0..n)
                .into_par_iter()
                .map(|k| {
                    let mut rng = stream_rng(config.seed, (i * n + k) as u64);
                    let seq = random_rb_sequence(group, m, interleaved_index, &mut rng)?;
                    let p = simulate_sequence(&seq, &channels, interleaved_channel);
                    Ok(match config.shots {
                        Some(shots) => {
                            let b = Binomial::new(shots, p).map_err(|e| Error::invalid("shots", e.to_string()))?;
                            b.sample(&mut rng) as f64 / shots as f64
                        }
                        None => p,
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(DepthResult { depth: m, survivals })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RbResult {
        interleaved: config.interleaved,
        depths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(interleaved: Option<InterleavedGate>) -> RbConfig {
        RbConfig {
            depths: vec![1, 5, 20, 50],
            sequences_per_depth: 8,
            seed: 7,
            interleaved,
            shots: None,
        }
    }

    #[test]
    fn sequences_invert_to_identity() {
        let g = CliffordGroup::new();
        let mut rng = stream_rng(3, 0);
        for m in [1, 2, 17, 100] {
            for inter in [None, Some(5)] {
                let seq = random_rb_sequence(&g, m, inter, &mut rng).unwrap();
                assert_eq!(seq.net_element(&g), 0);
                let mut u = Matrix2::identity();
                for &c in &seq.elements {
                    u = g.get(c).unitary * u;
                    if let Some(i) = inter {
                        u = g.get(i).unitary * u;
                    }
                }
                u = g.get(seq.recovery).unitary * u;
                assert!(super::super::group::unitary_distance(&u, &Matrix2::identity()) < 1e-10);
            }
        }
        let one = random_rb_sequence(&g, 1, None, &mut rng).unwrap();
        assert_eq!(one.recovery, g.inverse(one.elements[0]));
        assert!(random_rb_sequence(&g, 0, None, &mut rng).is_err());
    }

    #[test]
    fn seeded_sequences_are_reproducible() {
        let g = CliffordGroup::new();
        let a = random_rb_sequence(&g, 30, None, &mut stream_rng(11, 4)).unwrap();
        let b = random_rb_sequence(&g, 30, None, &mut stream_rng(11, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ideal_survival_is_one() {
        let g = CliffordGroup::new();
        for inter in [None, Some(InterleavedGate::PseudoZ), Some(InterleavedGate::X2)] {
            let r = run_rb(&g, &config(inter), &ChannelModel::Ideal, None).unwrap();
            for d in &r.depths {
                for s in &d.survivals {
                    assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn depolarizing_closed_form() {
        let g = CliffordGroup::new();
        let p = 0.99;
        let r = run_rb(&g, &config(None), &ChannelModel::Depolarizing(p), None).unwrap();
        for d in &r.depths {
            // The recovery Clifford is noisy as well.
            let expected = 0.5 + 0.5 * p.powi(d.depth as i32 + 1);
            for s in &d.survivals {
                assert!((s - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let g = CliffordGroup::new();
        let mut c = config(None);
        c.depths = vec![5, 5];
        assert!(run_rb(&g, &c, &ChannelModel::Ideal, None).is_err());
        let mut c = config(None);
        c.sequences_per_depth = 0;
        assert!(c.validate().is_err());
        assert!(run_rb(&g, &config(None), &ChannelModel::Depolarizing(1.5), None).is_err());
    }

    #[test]
    fn csv_has_one_row_per_depth() {
        let g = CliffordGroup::new();
        let r = run_rb(&g, &config(None), &ChannelModel::Depolarizing(0.99), None).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("depth,mean_survival,std,n\n1,"));
    }
}
