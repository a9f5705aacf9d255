#![no_main]
use libfuzzer_sys::fuzz_target;
use qpd_core::parity::{parse_trace, parse_trace_binary, trace_to_binary};

fuzz_target!(|data: &[u8]| {
    if let Ok(trace) = parse_trace_binary(data) {
        let again = parse_trace_binary(&trace_to_binary(&trace)).expect("re-parse of own output");
        assert_eq!(again, trace);
    }
    let _ = parse_trace(data);
});
