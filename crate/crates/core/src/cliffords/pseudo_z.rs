use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::Serialize;

use super::group::unitary_distance;
use crate::linalg::{equatorial_rotation, pauli_z, rz, C64};
use crate::qdyn::Parity;
use crate::{Error, Result};

/// Sign of the accumulated phase for each parity (`+δ` even, `−δ` odd).
fn parity_sign(parity: Parity) -> f64 {
    match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    }
}

/// `R_Z(sδ/4)·R_X(π)·R_Z(−sδ/4)`.
pub fn echo_pa(delta: f64, parity: Parity) -> Matrix2<C64> {
    let s = parity_sign(parity);
    rz(s * delta / 4.0) * equatorial_rotation(PI, 0.0) * rz(-s * delta / 4.0)
}

/// The opposite-gate-sign block `R_Z(−sδ/4)·R_X(π)·R_Z(sδ/4)`.
pub fn echo_pa_prime(delta: f64, parity: Parity) -> Matrix2<C64> {
    echo_pa(-delta, parity)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PseudoZCertificate {
    /// Phase-aligned Frobenius distance of each parity's composition to Z,
    /// `[even, odd]`.
    pub distance_to_z: [f64; 2],
    /// Distance between the even and odd compositions.
    pub parity_distance: f64,
    #[serde(skip)]
    pub composed: [Matrix2<C64>; 2],
}

impl PseudoZCertificate {
    pub fn max_distance(&self) -> f64 {
        self.distance_to_z[0].max(self.distance_to_z[1])
    }

    /// Errors when either parity deviates from Z by more than `tolerance`.
    pub fn require(&self, tolerance: f64) -> Result<()> {
        let distance = self.max_distance();
        if distance > tolerance {
            return Err(Error::PseudoZDeviation { distance, tolerance });
        }
        Ok(())
    }
}

/// Composes the matrix product `echoPA·echoPA′` per parity (inputs ordered
/// `[even, odd]`, so `echoPA′` acts first) and measures how far each result
/// is from Z.
pub fn pseudo_z(echo_pa: &[Matrix2<C64>; 2], echo_pa_prime: &[Matrix2<C64>; 2]) -> PseudoZCertificate {
    let composed = [echo_pa[0] * echo_pa_prime[0], echo_pa[1] * echo_pa_prime[1]];
    let z = pauli_z();
    PseudoZCertificate {
        distance_to_z: [unitary_distance(&composed[0], &z), unitary_distance(&composed[1], &z)],
        parity_distance: unitary_distance(&composed[0], &composed[1]),
        composed,
    }
}

/// Certificate for ideal echo blocks with parity phase difference `delta`.
pub fn ideal_pseudo_z(delta: f64) -> PseudoZCertificate {
    pseudo_z(
        &[echo_pa(delta, Parity::Even), echo_pa(delta, Parity::Odd)],
        &[echo_pa_prime(delta, Parity::Even), echo_pa_prime(delta, Parity::Odd)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_gives_z_for_both_parities() {
        let c = ideal_pseudo_z(PI);
        assert!(c.max_distance() < 1e-10);
        assert!(c.parity_distance < 1e-10);
        c.require(1e-10).unwrap();
    }

    #[test]
    fn zero_gives_identity() {
        let c = ideal_pseudo_z(0.0);
        for u in &c.composed {
            assert!(unitary_distance(u, &Matrix2::identity()) < 1e-12);
        }
        assert!(c.require(1e-3).is_err());
    }

    #[test]
    fn quarter_turn_is_parity_dependent() {
        let c = ideal_pseudo_z(PI / 2.0);
        assert!(unitary_distance(&c.composed[0], &rz(PI / 2.0)) < 1e-12);
        assert!(unitary_distance(&c.composed[1], &rz(-PI / 2.0)) < 1e-12);
        assert!(c.parity_distance > 0.1);
    }

    #[test]
    fn general_delta_is_rz() {
        for d in [0.3, 1.7, 2.9, 4.0] {
            let c = ideal_pseudo_z(d);
            assert!(unitary_distance(&c.composed[0], &rz(d)) < 1e-12);
            assert!(unitary_distance(&c.composed[1], &rz(-d)) < 1e-12);
        }
    }
}
