//! Simulated calibration experiments: degeneracy search, gate-pulse
//! duration crossing, interleaved-RB duration scan, and the Ramsey versus
//! echo mapping comparison under quasi-static noise.

mod degeneracy;
mod duration;
mod ramsey_echo;
mod sweep;

pub use degeneracy::{find_degeneracy, DriftCheck, DriftFilter, MONITOR_DELAY_NS};
pub use duration::{calibrate_duration, optimize_duration_irb, IrbScan};
pub use ramsey_echo::{
    averaged_mapping_fidelity, compare_ramsey_echo, gauss_hermite, prepare_ramsey_echo, QuasiStaticNoise,
    RamseyEchoRun, RamseyEchoSetup, TraceSettings,
};
pub use sweep::{crossings, local_extrema, Evaluation, SweepResult};
