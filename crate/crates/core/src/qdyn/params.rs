use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Charge parity of the island. Even is `−1`, odd is `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Even, Parity::Odd];

    pub fn value(self) -> i8 {
        match self {
            Parity::Even => -1,
            Parity::Odd => 1,
        }
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Parity::Even),
            1 => Some(Parity::Odd),
            _ => None,
        }
    }

    /// One tunneling event.
    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Which coherence time feeds the pure-dephasing rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DephasingSource {
    Echo,
    Ramsey,
}

/// Device constants of the offset-charge-tunable transmon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    /// Qubit transition frequency (GHz).
    pub f01_ghz: f64,
    /// Anharmonicity magnitude (GHz); `f12 = f01 − η`.
    pub anharmonicity_ghz: f64,
    /// Per-level charge-dispersion amplitudes `ε_k` (MHz); one per level.
    pub epsilon_mhz: Vec<f64>,
    pub t1_us: f64,
    pub t2_echo_us: f64,
    pub t2_ramsey_us: f64,
}

impl TransmonParams {
    pub const PAPER_F01_GHZ: f64 = 3.51589;
    pub const PAPER_ANHARMONICITY_GHZ: f64 = 0.33;
    pub const PAPER_EPSILON10_MHZ: f64 = 1.192;

    /// Table-I device at `n_g = 0.5`, three levels, `ε10 = −1.192 MHz`.
    pub fn paper_device() -> Self {
        Self {
            f01_ghz: Self::PAPER_F01_GHZ,
            anharmonicity_ghz: Self::PAPER_ANHARMONICITY_GHZ,
            epsilon_mhz: dispersion_ladder(Self::PAPER_EPSILON10_MHZ, -1.0, 3),
            t1_us: 80.0,
            t2_echo_us: 47.0,
            t2_ramsey_us: 8.7,
        }
    }

    /// Effectively decoherence-free copy (infinite `T1`, `T2`).
    pub fn without_decoherence(&self) -> Self {
        Self {
            t1_us: f64::INFINITY,
            t2_echo_us: f64::INFINITY,
            t2_ramsey_us: f64::INFINITY,
            ..self.clone()
        }
    }

    /// Copy truncated or padded (with `ε_k = 0`) to `levels`.
    pub fn with_levels(&self, levels: usize) -> Self {
        let mut epsilon_mhz = self.epsilon_mhz.clone();
        epsilon_mhz.resize(levels, 0.0);
        Self {
            epsilon_mhz,
            ..self.clone()
        }
    }

    pub fn levels(&self) -> usize {
        self.epsilon_mhz.len()
    }

    /// Signed `ε10 = ε1 − ε0` (MHz).
    pub fn epsilon10_mhz(&self) -> f64 {
        match self.epsilon_mhz.as_slice() {
            [e0, e1, ..] => e1 - e0,
            _ => 0.0,
        }
    }

    pub fn t2_us(&self, source: DephasingSource) -> f64 {
        match source {
            DephasingSource::Echo => self.t2_echo_us,
            DephasingSource::Ramsey => self.t2_ramsey_us,
        }
    }

    /// Checks the full set of device invariants.
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        positive("f01_ghz", self.f01_ghz)?;
        positive("anharmonicity_ghz", self.anharmonicity_ghz)?;
        positive("t1_us", self.t1_us)?;
        positive("t2_echo_us", self.t2_echo_us)?;
        positive("t2_ramsey_us", self.t2_ramsey_us)?;
        if self.levels() < 3 {
            return Err(Error::invalid(
                "levels",
                format!("need at least 3 levels to represent leakage, got {}", self.levels()),
            ));
        }
        if let Some(bad) = self.epsilon_mhz.iter().find(|e| !e.is_finite()) {
            return Err(Error::invalid("epsilon_mhz", format!("non-finite entry {bad}")));
        }
        if self.t2_echo_us > 2.0 * self.t1_us {
            return Err(Error::invalid(
                "t2_echo_us",
                format!("T2 = {} µs exceeds 2·T1 = {} µs", self.t2_echo_us, 2.0 * self.t1_us),
            ));
        }
        if self.t2_ramsey_us > self.t2_echo_us {
            return Err(Error::invalid(
                "t2_ramsey_us",
                format!(
                    "Ramsey T2 = {} µs exceeds echo T2 = {} µs",
                    self.t2_ramsey_us, self.t2_echo_us
                ),
            ));
        }
        Ok(())
    }
}

/// `ε_k` list with `ε0 = 0`, `ε1 = sign·|ε10|` and higher levels zero.
pub fn dispersion_ladder(epsilon10_mhz: f64, sign: f64, levels: usize) -> Vec<f64> {
    let mut eps = vec![0.0; levels.max(2)];
    eps[1] = sign.signum() * epsilon10_mhz.abs();
    eps.truncate(levels);
    eps
}
