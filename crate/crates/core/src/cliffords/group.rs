use std::collections::VecDeque;

use nalgebra::Matrix2;

use crate::linalg::{equatorial_rotation, phase_aligned_distance, to_dynamic, C64};
use crate::pulses::PhysicalGate;

/// Generators used to build decompositions, in tie-breaking order.
const GENERATORS: [PhysicalGate; 6] = PhysicalGate::ROTATIONS;

pub fn gate_unitary(gate: PhysicalGate) -> Matrix2<C64> {
    let (angle, phase) = gate.rotation();
    equatorial_rotation(angle, phase)
}

/// Distance between two single-qubit unitaries modulo global phase.
pub fn unitary_distance(u: &Matrix2<C64>, v: &Matrix2<C64>) -> f64 {
    phase_aligned_distance(&to_dynamic(u), &to_dynamic(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordElement {
    pub index: usize,
    pub unitary: Matrix2<C64>,
    /// Physical gates in time order; the identity is a single idle slot.
    pub decomposition: Vec<PhysicalGate>,
}

impl CliffordElement {
    /// Product of the decomposition (last gate leftmost).
    pub fn composed(&self) -> Matrix2<C64> {
        self.decomposition
            .iter()
            .fold(Matrix2::identity(), |acc, g| gate_unitary(*g) * acc)
    }
}

/// The 24 single-qubit Cliffords with minimal-length decompositions over
/// `{±X/2, ±Y/2, X, Y}` (the identity is one idle slot) and a precomputed
/// multiplication table.
#[derive(Debug, Clone)]
pub struct CliffordGroup {
    elements: Vec<CliffordElement>,
    /// `table[a][b]` is the index of `U_a·U_b`.
    table: Vec<[usize; 24]>,
    inverse: [usize; 24],
}

impl CliffordGroup {
    pub const ORDER: usize = 24;

    pub fn new() -> Self {
        let mut elements: Vec<CliffordElement> = vec![CliffordElement {
            index: 0,
            unitary: Matrix2::identity(),
            decomposition: Vec::new(),
        }];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in GENERATORS {
                let u = gate_unitary(g) * elements[i].unitary;
                if elements.iter().any(|e| unitary_distance(&e.unitary, &u) < 1e-8) {
                    continue;
                }
                let mut decomposition = elements[i].decomposition.clone();
                decomposition.push(g);
                let index = elements.len();
                elements.push(CliffordElement {
                    index,
                    unitary: u,
                    decomposition,
                });
                queue.push_back(index);
            }
        }
        assert_eq!(elements.len(), Self::ORDER, "Clifford closure failed");
        elements[0].decomposition.push(PhysicalGate::I);

        let find = |u: &Matrix2<C64>| {
            elements
                .iter()
                .position(|e| unitary_distance(&e.unitary, u) < 1e-8)
                .expect("product outside the group")
        };
        let table: Vec<[usize; 24]> = elements
            .iter()
            .map(|a| {
                let mut row = [0usize; 24];
                for (b, slot) in elements.iter().zip(row.iter_mut()) {
                    *slot = find(&(a.unitary * b.unitary));
                }
                row
            })
            .collect();
        let mut inverse = [0usize; 24];
        for (a, inv) in inverse.iter_mut().enumerate() {
            *inv = (0..24).find(|&b| table[a][b] == 0).expect("every element has an inverse");
        }
        Self {
            elements,
            table,
            inverse,
        }
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn get(&self, index: usize) -> &CliffordElement {
        &self.elements[index]
    }

    pub fn identity(&self) -> usize {
        0
    }

    /// Index of `U_a·U_b` (`b` applied first).
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Index of the element equal to `u` up to global phase.
    pub fn find(&self, u: &Matrix2<C64>) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| unitary_distance(&e.unitary, u) < 1e-8)
    }

    pub fn average_gate_count(&self) -> f64 {
        let total: usize = self.elements.iter().map(|e| e.decomposition.len()).sum();
        total as f64 / Self::ORDER as f64
    }
}

impl Default for CliffordGroup {
    fn default() -> Self {
        Self::new()
    }
}

/// The precomputed group.
pub fn clifford_group() -> CliffordGroup {
    CliffordGroup::new()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli_z;

    #[test]
    fn closure_identity_and_inverses() {
        let g = clifford_group();
        assert!(unitary_distance(&g.get(0).unitary, &Matrix2::identity()) < 1e-12);
        for a in 0..24 {
            assert_eq!(g.mul(a, 0), a);
            assert_eq!(g.mul(0, a), a);
            assert_eq!(g.mul(a, g.inverse(a)), 0);
            assert_eq!(g.mul(g.inverse(a), a), 0);
            for b in 0..24 {
                let u = g.get(a).unitary * g.get(b).unitary;
                assert!(unitary_distance(&u, &g.get(g.mul(a, b)).unitary) < 1e-10);
            }
        }
    }

    #[test]
    fn decompositions_match_unitaries() {
        let g = clifford_group();
        for e in g.elements() {
            assert!(unitary_distance(&e.composed(), &e.unitary) < 1e-10);
        }
    }

    #[test]
    fn average_length() {
        assert_eq!(clifford_group().average_gate_count(), 1.875);
    }

    #[test]
    fn z_is_a_clifford() {
        let g = clifford_group();
        let z = g.find(&pauli_z()).unwrap();
        assert_eq!(g.get(z).decomposition.len(), 2);
    }
}
