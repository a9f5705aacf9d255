use std::collections::HashMap;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use super::channel::Channel;
use crate::linalg::{CVector, C64, ONE, ZERO};
use crate::pulses::{
    compile_pseudo_z, compile_single_gate, simulate_from, GateSettings, MicrowavePulse,
    PhysicalGate, PulseSequence, SimOptions,
};
use crate::qdyn::{DensityMatrix, Parity, TransmonParams};
use crate::Result;

fn probe_states(dim: usize) -> [DensityMatrix; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let kets = [
        Vector2::new(ONE, ZERO),
        Vector2::new(ZERO, ONE),
        Vector2::new(C64::new(h, 0.0), C64::new(h, 0.0)),
        Vector2::new(C64::new(h, 0.0), C64::new(0.0, h)),
    ];
    kets.map(|k| {
        let mut v = CVector::zeros(dim);
        v[0] = k[0];
        v[1] = k[1];
        DensityMatrix::from_pure(&v)
    })
}

/// Qubit-subspace process of `seq` for one parity, from a full Lindblad
/// simulation of four probe states. Leakage shows up as lost trace.
pub fn process_channel(
    params: &TransmonParams,
    seq: &PulseSequence,
    parity: Parity,
    opts: &SimOptions,
) -> Result<Channel> {
    let outputs: Vec<Matrix2<C64>> = probe_states(params.levels())
        .par_iter()
        .map(|rho0| Ok(simulate_from(params, seq, parity, rho0, opts)?.final_state.qubit_block()))
        .collect::<Result<_>>()?;
    Ok(Channel::from_basis_outputs(&[outputs[0], outputs[1], outputs[2], outputs[3]]))
}

/// Channels of the six physical gates at the degeneracy point.
pub fn physical_gate_channels(
    params: &TransmonParams,
    mw: &MicrowavePulse,
    opts: &SimOptions,
) -> Result<HashMap<PhysicalGate, Channel>> {
    PhysicalGate::ALL
        .par_iter()
        .map(|&g| {
            let seq = compile_single_gate(params, mw, g)?;
            Ok((g, process_channel(params, &seq, Parity::Even, opts)?))
        })
        .collect()
}

/// Pseudo-Z channel averaged over the two parities.
pub fn pseudo_z_channel(
    params: &TransmonParams,
    gate: &GateSettings,
    mw: &MicrowavePulse,
    opts: &SimOptions,
) -> Result<Channel> {
    let seq = compile_pseudo_z(params, gate, mw)?;
    let (even, odd) = rayon::join(
        || process_channel(params, &seq, Parity::Even, opts),
        || process_channel(params, &seq, Parity::Odd, opts),
    );
    Ok(Channel::mixture(&[(0.5, even?), (0.5, odd?)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cliffords::group::gate_unitary;
    use crate::linalg::pauli_z;

    #[test]
    fn coherent_gates_are_near_ideal() {
        let p = TransmonParams::paper_device();
        let mw = MicrowavePulse::paper_template(&p);
        let chans = physical_gate_channels(&p, &mw, &SimOptions::coherent()).unwrap();
        for (g, c) in &chans {
            let f = c.average_fidelity(&gate_unitary(*g));
            assert!(f > 0.9999, "{} fidelity {f}", g.label());
        }
    }

    #[test]
    fn coherent_pseudo_z_is_z() {
        let p = TransmonParams::paper_device();
        let mw = MicrowavePulse::paper_template(&p);
        let c = pseudo_z_channel(&p, &GateSettings::paper(), &mw, &SimOptions::coherent()).unwrap();
        let f = c.average_fidelity(&pauli_z());
        assert!(f > 0.999, "pseudo-Z fidelity {f}");
    }
}
