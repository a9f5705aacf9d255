use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::linalg::{hermitian_eigen, pauli_x, pauli_y, pauli_z, C64, CMatrix, ZERO};
use crate::{Error, Result};

fn paulis() -> [Matrix2<C64>; 4] {
    [Matrix2::identity(), pauli_x(), pauli_y(), pauli_z()]
}

/// Single-qubit channel as a Pauli transfer matrix,
/// `R_ij = ½·Tr(P_i·E(P_j))` with `P = (I, X, Y, Z)`.
///
/// Acts on `(1, x, y, z)`; trace-decreasing maps (leakage out of the qubit)
/// are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel(pub Matrix4<f64>);

impl Channel {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    /// `ρ ↦ UρU†`.
    pub fn unitary(u: &Matrix2<C64>) -> Self {
        Self::from_map(|m| u * m * u.adjoint())
    }

    /// `diag(1, p, p, p)`.
    pub fn depolarizing(p: f64) -> Self {
        Self(Matrix4::from_diagonal(&Vector4::new(1.0, p, p, p)))
    }

    /// Relaxation and dephasing over `duration_ns` (coherences decay as
    /// `e^{−t/T2}`, populations relax towards `|0⟩` as `e^{−t/T1}`).
    pub fn damping(duration_ns: f64, t1_us: f64, t2_us: f64) -> Self {
        let t = duration_ns * 1e-3;
        let keep = (-t / t1_us).exp();
        let coh = (-t / t2_us).exp();
        let mut m = Matrix4::zeros();
        m[(0, 0)] = 1.0;
        m[(1, 1)] = coh;
        m[(2, 2)] = coh;
        m[(3, 3)] = keep;
        m[(3, 0)] = 1.0 - keep;
        Self(m)
    }

    /// PTM of a linear map given on 2×2 operators.
    pub fn from_map(map: impl Fn(&Matrix2<C64>) -> Matrix2<C64>) -> Self {
        let p = paulis();
        let mut m = Matrix4::zeros();
        for j in 0..4 {
            let out = map(&p[j]);
            for i in 0..4 {
                m[(i, j)] = 0.5 * (p[i] * out).trace().re;
            }
        }
        Self(m)
    }

    /// PTM from the images of `|0⟩⟨0|`, `|1⟩⟨1|`, `|+⟩⟨+|` and `|+i⟩⟨+i|`.
    pub fn from_basis_outputs(outputs: &[Matrix2<C64>; 4]) -> Self {
        let [r0, r1, rp, rpi] = outputs;
        let images = [r0 + r1, rp * C64::new(2.0, 0.0) - r0 - r1, rpi * C64::new(2.0, 0.0) - r0 - r1, r0 - r1];
        let p = paulis();
        let mut m = Matrix4::zeros();
        for (j, out) in images.iter().enumerate() {
            for i in 0..4 {
                m[(i, j)] = 0.5 * (p[i] * out).trace().re;
            }
        }
        Self(m)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Channel) -> Channel {
        Channel(next.0 * self.0)
    }

    /// Uniform mixture `Σ w_k E_k`.
    pub fn mixture(parts: &[(f64, Channel)]) -> Channel {
        Channel(parts.iter().fold(Matrix4::zeros(), |acc, (w, c)| acc + c.0 * *w))
    }

    pub fn apply(&self, r: &Vector4<f64>) -> Vector4<f64> {
        self.0 * r
    }

    /// Image of an operator written in the Pauli basis.
    fn image(&self, op: &Matrix2<C64>) -> Matrix2<C64> {
        let p = paulis();
        let coeff: Vec<f64> = (0..4).map(|j| 0.5 * (p[j] * op).trace().re).collect();
        let coeff_im: Vec<f64> = (0..4).map(|j| 0.5 * (p[j] * op).trace().im).collect();
        let mut out = Matrix2::zeros();
        for i in 0..4 {
            let mut c = C64::new(0.0, 0.0);
            for j in 0..4 {
                c += C64::new(coeff[j], coeff_im[j]) * self.0[(i, j)];
            }
            out += p[i] * c;
        }
        out
    }

    /// Choi matrix `Σ_ab |a⟩⟨b| ⊗ E(|a⟩⟨b|)`.
    pub fn choi(&self) -> CMatrix {
        let mut j = CMatrix::from_element(4, 4, ZERO);
        for a in 0..2 {
            for b in 0..2 {
                let mut unit = Matrix2::zeros();
                unit[(a, b)] = C64::new(1.0, 0.0);
                let img = self.image(&unit);
                for r in 0..2 {
                    for c in 0..2 {
                        j[(2 * a + r, 2 * b + c)] = img[(r, c)];
                    }
                }
            }
        }
        j
    }

    /// Complete positivity and trace non-increase, within `tol`.
    pub fn check_cptp(&self, tol: f64) -> Result<()> {
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonCptp("non-finite transfer matrix".into()));
        }
        let choi = self.choi();
        let herm = (&choi + choi.adjoint()) * C64::new(0.5, 0.0);
        let (values, _) = hermitian_eigen(&herm);
        if values[0] < -tol {
            return Err(Error::NonCptp(format!("Choi matrix has eigenvalue {:e}", values[0])));
        }
        // Partial trace over the output must not exceed the identity.
        let mut reduced = CMatrix::from_element(2, 2, ZERO);
        for a in 0..2 {
            for b in 0..2 {
                reduced[(a, b)] = choi[(2 * a, 2 * b)] + choi[(2 * a + 1, 2 * b + 1)];
            }
        }
        let (values, _) = hermitian_eigen(&((&reduced + reduced.adjoint()) * C64::new(0.5, 0.0)));
        if values[1] > 1.0 + tol {
            return Err(Error::NonCptp(format!("channel increases trace (eigenvalue {})", values[1])));
        }
        Ok(())
    }

    /// Average gate fidelity to the unitary `u`: `(Tr(R_u^T R)/2 + 1)/3`.
    pub fn average_fidelity(&self, u: &Matrix2<C64>) -> f64 {
        let ideal = Channel::unitary(u);
        ((ideal.0.transpose() * self.0).trace() / 2.0 + 1.0) / 3.0
    }
}
