//! Replays the fuzz corpus seeds through the trace parsers.

use std::path::PathBuf;

use qpd_core::parity::{parse_trace, parse_trace_binary, parse_trace_csv, trace_to_binary, trace_to_csv};

fn corpus(name: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(name);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let data = std::fs::read(&path).unwrap();
            (path, data)
        })
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus {name}");
    files
}

#[test]
fn csv_seeds_parse_and_round_trip() {
    for (path, data) in corpus("trace_csv") {
        let t = parse_trace_csv(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_trace_csv(&trace_to_csv(&t)).unwrap(), t);
        assert_eq!(parse_trace(&data).unwrap(), t);
    }
}

#[test]
fn binary_seeds_parse_and_round_trip() {
    for (path, data) in corpus("trace_binary") {
        let t = parse_trace_binary(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(trace_to_binary(&t), data);
        assert_eq!(parse_trace(&data).unwrap(), t);
    }
}

#[test]
fn corrupted_seeds_are_rejected_not_panicking() {
    for (_, data) in corpus("trace_binary") {
        for i in 0..data.len() {
            let mut bad = data.clone();
            bad[i] ^= 0xa5;
            let _ = parse_trace(&bad);
        }
        assert!(parse_trace(&data[..data.len() - 1]).is_err());
    }
    for (_, data) in corpus("trace_csv") {
        let text = String::from_utf8(data).unwrap();
        assert!(parse_trace_csv(&text.replace(",1\n", ",2\n")).is_err());
        assert!(parse_trace_csv(&text.replace("dt_us", "dt_ms")).is_err());
    }
}
