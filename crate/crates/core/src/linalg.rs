//! Dense complex matrix helpers shared by the simulator and the Clifford code.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Lowering operator `a` truncated to `dim` levels.
pub fn lowering(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Number operator `a†a` truncated to `dim` levels.
pub fn number(dim: usize) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_fn(dim, |k, _| C64::new(k as f64, 0.0)))
}

pub fn diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| C64::new(v, 0.0)),
    ))
}

/// Largest entry of `|M − M†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// `exp(−i·H·t)` for Hermitian `H`, via its eigendecomposition.
pub fn propagator(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let phases = CVector::from_iterator(
        values.len(),
        values.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    );
    &vectors * CMatrix::from_diagonal(&phases) * vectors.adjoint()
}

/// Frobenius distance between `u` and `v` after removing the best global phase.
pub fn phase_aligned_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let overlap = (v.adjoint() * u).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    (u - v * phase).norm()
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Matrix2<C64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// Rotation by `angle` about the equatorial axis at azimuth `phase`
/// (`phase = 0` is x, `π/2` is y): `exp(−i·angle/2·(cos φ·X + sin φ·Y))`.
pub fn equatorial_rotation(angle: f64, phase: f64) -> Matrix2<C64> {
    let (s, c) = (angle / 2.0).sin_cos();
    let off = -I * s;
    Matrix2::new(
        C64::new(c, 0.0),
        off * C64::from_polar(1.0, -phase),
        off * C64::from_polar(1.0, phase),
        C64::new(c, 0.0),
    )
}

/// `R_Z(angle) = exp(−i·angle/2·Z)`.
pub fn rz(angle: f64) -> Matrix2<C64> {
    Matrix2::new(
        C64::from_polar(1.0, -angle / 2.0),
        ZERO,
        ZERO,
        C64::from_polar(1.0, angle / 2.0),
    )
}

pub fn to_dynamic(m: &Matrix2<C64>) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

/// Bloch vector of the 2×2 density matrix `rho`.
pub fn bloch_of(rho: &Matrix2<C64>) -> [f64; 3] {
    [
        2.0 * rho[(0, 1)].re,
        -2.0 * rho[(0, 1)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}
