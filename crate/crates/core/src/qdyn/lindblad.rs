use nalgebra::Matrix2;

use super::{DephasingSource, TransmonParams};
use crate::linalg::{
    hermiticity_error, lowering, min_eigenvalue, number, CMatrix, CVector, C64, I, ONE, ZERO,
};
use crate::{Error, Result};

/// Default integration step (ns) in the drive frame.
pub const DEFAULT_DT_NS: f64 = 0.02;

/// Largest trace drift accepted before an evolution is reported as failed.
pub const TRACE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|`; `psi` is normalized first.
    pub fn from_pure(psi: &CVector) -> Self {
        let psi = psi / C64::new(psi.norm(), 0.0);
        Self(&psi * psi.adjoint())
    }

    /// `|k⟩⟨k|` in a `dim`-level space.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = ONE;
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0))
    }

    /// Embeds a qubit density matrix into the lowest two of `dim` levels.
    pub fn embed_qubit(rho: &Matrix2<C64>, dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = rho[(i, j)];
            }
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        min_eigenvalue(&h)
    }

    /// Checks Hermiticity, unit trace and positivity at the given tolerances.
    pub fn check(&self, hermitian_tol: f64, trace_tol: f64, positivity_tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > hermitian_tol {
            return Err(Error::invalid("rho", format!("not Hermitian (error {herm:e})")));
        }
        let drift = (self.trace() - 1.0).abs();
        if drift > trace_tol {
            return Err(Error::invalid("rho", format!("trace differs from 1 by {drift:e}")));
        }
        let min = self.min_eigenvalue();
        if min < -positivity_tol {
            return Err(Error::invalid("rho", format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Qubit block (levels 0 and 1).
    pub fn qubit_block(&self) -> Matrix2<C64> {
        Matrix2::new(self.0[(0, 0)], self.0[(0, 1)], self.0[(1, 0)], self.0[(1, 1)])
    }

    /// Bloch vector of the qubit block (not renormalized for leakage).
    pub fn bloch_vector(&self) -> [f64; 3] {
        crate::linalg::bloch_of(&self.qubit_block())
    }
}

/// A Hamiltonian that can be sampled at any time (rad/ns).
pub trait TimeDependentHamiltonian {
    fn dim(&self) -> usize;
    /// Overwrites `out` with `H(t)`.
    fn fill(&self, t_ns: f64, out: &mut CMatrix);
}

#[derive(Debug, Clone)]
pub struct StaticHamiltonian(pub CMatrix);

impl TimeDependentHamiltonian for StaticHamiltonian {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn fill(&self, _t_ns: f64, out: &mut CMatrix) {
        out.copy_from(&self.0);
    }
}

/// Adapts a closure `t ↦ H(t)`.
pub struct FnHamiltonian<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> CMatrix> FnHamiltonian<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> CMatrix> TimeDependentHamiltonian for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn fill(&self, t_ns: f64, out: &mut CMatrix) {
        out.copy_from(&(self.f)(t_ns));
    }
}

/// Relaxation `√(1/T1)·a` and pure dephasing `√(2Γφ)·a†a` with
/// `Γφ = 1/T2 − 1/(2T1)`; rates in 1/ns.
pub fn collapse_operators(
    params: &TransmonParams,
    dephasing_source: DephasingSource,
) -> Result<Vec<CMatrix>> {
    let dim = params.levels();
    let t1_ns = params.t1_us * 1e3;
    let t2_ns = params.t2_us(dephasing_source) * 1e3;
    if !(t1_ns > 0.0) || !(t2_ns > 0.0) {
        return Err(Error::invalid("t1/t2", "coherence times must be positive"));
    }
    let gamma_phi = pure_dephasing_rate(t1_ns, t2_ns)?;
    let relax = lowering(dim) * C64::new((1.0 / t1_ns).sqrt(), 0.0);
    let dephase = number(dim) * C64::new((2.0 * gamma_phi).sqrt(), 0.0);
    Ok(vec![relax, dephase])
}

/// `Γφ = 1/T2 − 1/(2T1)` (same time unit as the inputs).
pub fn pure_dephasing_rate(t1: f64, t2: f64) -> Result<f64> {
    let rate = 1.0 / t2 - 0.5 / t1;
    // T2 = 2·T1 should give exactly zero, not a rounding-level negative.
    if rate < -1e-12 * (1.0 / t2) {
        return Err(Error::invalid(
            "t2",
            format!("T2 = {t2} exceeds 2·T1 = {}; pure dephasing rate would be negative", 2.0 * t1),
        ));
    }
    Ok(rate.max(0.0))
}

struct Jump {
    op: CMatrix,
    adj: CMatrix,
    /// `L†L`
    decay: CMatrix,
}

/// `y ← y + a·x`.
fn axpy(y: &mut CMatrix, a: C64, x: &CMatrix) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * xi;
    }
}

/// Fixed-step RK4 integrator for `dρ/dt = −i[H,ρ] + Σ_j (L_j ρ L_j† − ½{L_j†L_j, ρ})`.
pub struct LindbladIntegrator {
    jumps: Vec<Jump>,
    dim: usize,
    h: CMatrix,
    k: [CMatrix; 4],
    stage: CMatrix,
    tmp: CMatrix,
}

impl LindbladIntegrator {
    pub fn new(dim: usize, collapse: &[CMatrix]) -> Result<Self> {
        let mut jumps = Vec::new();
        for op in collapse {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: op.nrows(),
                });
            }
            if op.iter().all(|z| *z == ZERO) {
                continue;
            }
            let adj = op.adjoint();
            let decay = &adj * op;
            jumps.push(Jump {
                op: op.clone(),
                adj,
                decay,
            });
        }
        let z = || CMatrix::zeros(dim, dim);
        Ok(Self {
            jumps,
            dim,
            h: z(),
            k: [z(), z(), z(), z()],
            stage: z(),
            tmp: z(),
        })
    }

    fn rhs(
        h: &CMatrix,
        jumps: &[Jump],
        rho: &CMatrix,
        out: &mut CMatrix,
        tmp: &mut CMatrix,
    ) {
        out.gemm(-I, h, rho, ZERO);
        out.gemm(I, rho, h, ONE);
        let half = C64::new(-0.5, 0.0);
        for j in jumps {
            tmp.gemm(ONE, &j.op, rho, ZERO);
            out.gemm(ONE, tmp, &j.adj, ONE);
            out.gemm(half, &j.decay, rho, ONE);
            out.gemm(half, rho, &j.decay, ONE);
        }
    }

    /// Advances `rho` in place by one RK4 step of length `dt` from `t`.
    pub fn step<H: TimeDependentHamiltonian + ?Sized>(
        &mut self,
        hamiltonian: &H,
        rho: &mut CMatrix,
        t: f64,
        dt: f64,
    ) {
        let Self {
            jumps,
            h,
            k,
            stage,
            tmp,
            ..
        } = self;
        let [k1, k2, k3, k4] = k;
        let half = C64::new(dt / 2.0, 0.0);

        hamiltonian.fill(t, h);
        Self::rhs(h, jumps, rho, k1, tmp);

        hamiltonian.fill(t + dt / 2.0, h);
        stage.copy_from(rho);
        axpy(stage, half, k1);
        Self::rhs(h, jumps, stage, k2, tmp);
        stage.copy_from(rho);
        axpy(stage, half, k2);
        Self::rhs(h, jumps, stage, k3, tmp);

        hamiltonian.fill(t + dt, h);
        stage.copy_from(rho);
        axpy(stage, C64::new(dt, 0.0), k3);
        Self::rhs(h, jumps, stage, k4, tmp);

        let w = dt / 6.0;
        axpy(rho, C64::new(w, 0.0), k1);
        axpy(rho, C64::new(2.0 * w, 0.0), k2);
        axpy(rho, C64::new(2.0 * w, 0.0), k3);
        axpy(rho, C64::new(w, 0.0), k4);
    }

    /// Integrates from `t_start` to `t_end` with a step no larger than `dt`
    /// (the step is shrunk so that `t_end` is hit exactly).
    pub fn evolve<H: TimeDependentHamiltonian + ?Sized>(
        &mut self,
        hamiltonian: &H,
        rho: &mut CMatrix,
        t_start: f64,
        t_end: f64,
        dt: f64,
    ) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("step must be positive, got {dt}")));
        }
        if hamiltonian.dim() != self.dim || rho.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: rho.nrows(),
            });
        }
        let span = t_end - t_start;
        if span <= 0.0 {
            return Ok(());
        }
        let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let trace0 = rho.trace().re;
        for i in 0..steps {
            self.step(hamiltonian, rho, t_start + i as f64 * h, h);
        }
        let drift = (rho.trace().re - trace0).abs();
        if !(drift <= TRACE_TOLERANCE) {
            return Err(Error::IntegrationFailure {
                time_ns: t_end,
                drift,
            });
        }
        Ok(())
    }
}

/// Evolves `rho0` over `t_span = (start, end)` (ns) and returns the final state.
pub fn lindblad_evolve<H: TimeDependentHamiltonian + ?Sized>(
    hamiltonian: &H,
    collapse: &[CMatrix],
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    dt: f64,
) -> Result<DensityMatrix> {
    let mut integrator = LindbladIntegrator::new(rho0.dim(), collapse)?;
    let mut rho = rho0.matrix().clone();
    integrator.evolve(hamiltonian, &mut rho, t_span.0, t_span.1, dt)?;
    Ok(DensityMatrix(rho))
}

/// `⟨ψ|ρ|ψ⟩` for a normalized target state.
pub fn state_fidelity(rho: &DensityMatrix, target: &CVector) -> Result<f64> {
    if target.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: target.len(),
        });
    }
    let norm = target.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("target", format!("state is not normalized (norm {norm})")));
    }
    let v = (target.adjoint() * rho.matrix() * target)[(0, 0)].re;
    Ok(v.clamp(0.0, 1.0))
}

/// `|k⟩` in a `dim`-level space.
pub fn basis_state(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = ONE;
    v
}
