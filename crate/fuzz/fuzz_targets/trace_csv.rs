#![no_main]
use libfuzzer_sys::fuzz_target;
use qpd_core::parity::{parse_trace_csv, trace_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(trace) = parse_trace_csv(text) {
        let again = parse_trace_csv(&trace_to_csv(&trace)).expect("re-parse of own output");
        assert_eq!(again.samples(), trace.samples());
        assert_eq!(again.kind(), trace.kind());
    }
});
