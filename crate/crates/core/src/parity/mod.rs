//! Quasiparticle tunneling as a random telegraph process, its measurement
//! through imperfect mapping and readout, and the resulting autocorrelation.

mod io;
mod model;
mod trace;

pub use io::{
    load_trace, parse_trace, parse_trace_binary, parse_trace_csv, save_trace, trace_to_binary, trace_to_csv,
    TraceFormat, BINARY_MAGIC,
};
pub use model::{analytic_autocorr, m_corr, FidelityModel, TunnelingModel};
pub use trace::{
    empirical_autocorr, ensemble_autocorr, generate_traces, ideal_trace, measure_trace, sample_switch_times,
    AutocorrEstimate, ParityTrace, TraceKind, TraceMeta, SEGMENT_SAMPLES,
};
