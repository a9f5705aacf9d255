//! Trace files.
//!
//! CSV: `# key=value` header lines (`dt_us`, `kind` required; `seed`,
//! `gamma_per_ms`, `f_g`, `f_e`, `f_m` optional), then `index,value` and
//! one row per sample.
//!
//! Binary (little endian): `QPDTRACE`, version byte, kind byte (0 ideal,
//! 1 measured), flags byte (bit 0 seed, bit 1 gamma, bit 2 fidelities), one
//! zero byte, `dt_us`, `seed`, `gamma_per_ms`, `f_g`, `f_e`, `f_m`, sample
//! count `n` (u64), then `⌈n/8⌉` bytes of samples packed LSB first with
//! 1 for +1 and 0 for −1. Absent fields are stored as zero.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::model::FidelityModel;
use super::trace::{ParityTrace, TraceKind, TraceMeta};
use crate::{Error, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"QPDTRACE";
const BINARY_VERSION: u8 = 1;
const HEADER_LEN: usize = 8 + 4 + 7 * 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Binary,
}

fn format_error(location: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::TraceFormat {
        location: location.into(),
        reason: reason.into(),
    }
}

pub fn trace_to_csv(trace: &ParityTrace) -> String {
    let mut out = String::with_capacity(trace.len() * 8 + 128);
    let meta = trace.meta();
    writeln!(out, "# dt_us={}", trace.dt_us()).unwrap();
    writeln!(out, "# kind={}", trace.kind().as_str()).unwrap();
    if let Some(seed) = meta.seed {
        writeln!(out, "# seed={seed}").unwrap();
    }
    if let Some(g) = meta.gamma_per_ms {
        writeln!(out, "# gamma_per_ms={g}").unwrap();
    }
    if let Some(f) = meta.fidelity {
        writeln!(out, "# f_g={}\n# f_e={}\n# f_m={}", f.f_g, f.f_e, f.f_m).unwrap();
    }
    out.push_str("index,value\n");
    for (i, v) in trace.samples().iter().enumerate() {
        writeln!(out, "{i},{v}").unwrap();
    }
    out
}

fn parse_f64(value: &str, location: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|e| format_error(location, format!("`{value}`: {e}")))
}

fn build_meta(seed: Option<u64>, gamma: Option<f64>, fid: [Option<f64>; 3], location: &str) -> Result<TraceMeta> {
    let fidelity = match fid {
        [None, None, None] => None,
        [Some(g), Some(e), Some(m)] => {
            Some(FidelityModel::new(g, e, m).map_err(|e| format_error(location, e.to_string()))?)
        }
        _ => return Err(format_error(location, "f_g, f_e and f_m must be given together")),
    };
    if let Some(g) = gamma {
        if !(g.is_finite() && g > 0.0) {
            return Err(format_error(location, format!("gamma_per_ms must be positive, got {g}")));
        }
    }
    Ok(TraceMeta {
        seed,
        gamma_per_ms: gamma,
        fidelity,
    })
}

pub fn parse_trace_csv(text: &str) -> Result<ParityTrace> {
    let mut dt = None;
    let mut kind = None;
    let mut seed = None;
    let mut gamma = None;
    let mut fid = [None; 3];
    let mut samples = Vec::new();
    let mut seen_columns = false;

    for (n, raw) in text.lines().enumerate() {
        let loc = format!("line {}", n + 1);
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if seen_columns {
                return Err(format_error(loc, "header line after the data"));
            }
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| format_error(&loc, "header lines read `# key=value`"))?;
            let value = value.trim();
            match key.trim() {
                "dt_us" => dt = Some(parse_f64(value, &loc)?),
                "kind" => {
                    kind = Some(match value {
                        "ideal" => TraceKind::Ideal,
                        "measured" => TraceKind::Measured,
                        other => return Err(format_error(loc, format!("unknown kind `{other}`"))),
                    })
                }
                "seed" => {
                    seed = Some(value.parse::<u64>().map_err(|e| format_error(&loc, format!("seed: {e}")))?)
                }
                "gamma_per_ms" => gamma = Some(parse_f64(value, &loc)?),
                "f_g" => fid[0] = Some(parse_f64(value, &loc)?),
                "f_e" => fid[1] = Some(parse_f64(value, &loc)?),
                "f_m" => fid[2] = Some(parse_f64(value, &loc)?),
                other => return Err(format_error(loc, format!("unknown header key `{other}`"))),
            }
            continue;
        }
        if !seen_columns {
            if line.replace(' ', "") != "index,value" {
                return Err(format_error(loc, "expected the `index,value` column line"));
            }
            seen_columns = true;
            continue;
        }
        let (index, value) = line
            .split_once(',')
            .ok_or_else(|| format_error(&loc, "rows read `index,value`"))?;
        let index: usize = index
            .trim()
            .parse()
            .map_err(|e| format_error(&loc, format!("index: {e}")))?;
        if index != samples.len() {
            return Err(format_error(loc, format!("expected index {}, got {index}", samples.len())));
        }
        let value = match value.trim() {
            "-1" => -1,
            "1" | "+1" => 1,
            other => return Err(format_error(loc, format!("value `{other}` is not ±1"))),
        };
        samples.push(value);
    }

    let dt = dt.ok_or_else(|| format_error("header", "missing dt_us"))?;
    let kind = kind.ok_or_else(|| format_error("header", "missing kind"))?;
    let meta = build_meta(seed, gamma, fid, "header")?;
    ParityTrace::new(samples, dt, kind)
        .map(|t| t.with_meta(meta))
        .map_err(|e| format_error("data", e.to_string()))
}

pub fn trace_to_binary(trace: &ParityTrace) -> Vec<u8> {
    let meta = trace.meta();
    let n = trace.len();
    let mut out = Vec::with_capacity(HEADER_LEN + n.div_ceil(8));
    out.extend_from_slice(BINARY_MAGIC);
    out.push(BINARY_VERSION);
    out.push(match trace.kind() {
        TraceKind::Ideal => 0,
        TraceKind::Measured => 1,
    });
    let flags = meta.seed.is_some() as u8 | (meta.gamma_per_ms.is_some() as u8) << 1 | (meta.fidelity.is_some() as u8) << 2;
    out.push(flags);
    out.push(0);
    let fid = meta.fidelity.unwrap_or(FidelityModel {
        f_g: 0.0,
        f_e: 0.0,
        f_m: 0.0,
    });
    out.extend_from_slice(&trace.dt_us().to_le_bytes());
    out.extend_from_slice(&meta.seed.unwrap_or(0).to_le_bytes());
    for v in [meta.gamma_per_ms.unwrap_or(0.0), fid.f_g, fid.f_e, fid.f_m] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for chunk in trace.samples().chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |b, (i, &v)| if v == 1 { b | (1 << i) } else { b });
        out.push(byte);
    }
    out
}

pub fn parse_trace_binary(data: &[u8]) -> Result<ParityTrace> {
    if data.len() < HEADER_LEN {
        return Err(format_error("header", format!("need {HEADER_LEN} bytes, got {}", data.len())));
    }
    if &data[..8] != BINARY_MAGIC {
        return Err(format_error("byte 0", "bad magic"));
    }
    if data[8] != BINARY_VERSION {
        return Err(format_error("byte 8", format!("unsupported version {}", data[8])));
    }
    let kind = match data[9] {
        0 => TraceKind::Ideal,
        1 => TraceKind::Measured,
        k => return Err(format_error("byte 9", format!("unknown kind {k}"))),
    };
    let flags = data[10];
    if flags & !0b111 != 0 || data[11] != 0 {
        return Err(format_error("byte 10", "reserved bits set"));
    }
    let word = |i: usize| -> [u8; 8] { data[12 + 8 * i..20 + 8 * i].try_into().expect("8 bytes") };
    let f = |i: usize| f64::from_le_bytes(word(i));
    let dt = f(0);
    let seed = (flags & 1 != 0).then(|| u64::from_le_bytes(word(1)));
    let gamma = (flags & 2 != 0).then(|| f(2));
    let fid = if flags & 4 != 0 {
        [Some(f(3)), Some(f(4)), Some(f(5))]
    } else {
        [None; 3]
    };
    let meta = build_meta(seed, gamma, fid, "header")?;
    let n = u64::from_le_bytes(word(6));
    let payload = &data[HEADER_LEN..];
    let expected = n.div_ceil(8);
    if payload.len() as u64 != expected {
        return Err(format_error(
            "payload",
            format!("{n} samples need {expected} bytes, found {}", payload.len()),
        ));
    }
    let n = n as usize;
    if n % 8 != 0 && payload[n / 8] >> (n % 8) != 0 {
        return Err(format_error("payload", "padding bits set"));
    }
    let samples: Vec<i8> = (0..n)
        .map(|k| if payload[k / 8] >> (k % 8) & 1 == 1 { 1 } else { -1 })
        .collect();
    ParityTrace::new(samples, dt, kind)
        .map(|t| t.with_meta(meta))
        .map_err(|e| format_error("data", e.to_string()))
}

/// Parses either format, recognizing binary files by their magic.
pub fn parse_trace(data: &[u8]) -> Result<ParityTrace> {
    if data.starts_with(BINARY_MAGIC) {
        return parse_trace_binary(data);
    }
    let text = std::str::from_utf8(data).map_err(|e| format_error("file", format!("not UTF-8: {e}")))?;
    parse_trace_csv(text)
}

pub fn load_trace(path: &Path) -> Result<ParityTrace> {
    parse_trace(&fs::read(path)?)
}

pub fn save_trace(trace: &ParityTrace, path: &Path, format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Csv => fs::write(path, trace_to_csv(trace))?,
        TraceFormat::Binary => fs::write(path, trace_to_binary(trace))?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> ParityTrace {
        ParityTrace::new(vec![-1, 1, 1, -1, -1, -1, 1, 1, 1, -1, 1], 4.0, TraceKind::Measured)
            .unwrap()
            .with_meta(TraceMeta {
                seed: Some(42),
                gamma_per_ms: Some(1.0 / 30.2),
                fidelity: Some(FidelityModel::paper()),
            })
    }

    #[test]
    fn csv_round_trip() {
        let t = sample_trace();
        let text = trace_to_csv(&t);
        assert!(text.starts_with("# dt_us=4\n# kind=measured\n# seed=42\n"));
        assert_eq!(parse_trace_csv(&text).unwrap(), t);
        assert_eq!(parse_trace(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn binary_round_trip() {
        let t = sample_trace();
        let bytes = trace_to_binary(&t);
        assert_eq!(bytes.len(), HEADER_LEN + 2);
        assert_eq!(parse_trace_binary(&bytes).unwrap(), t);
        let bare = ParityTrace::new(vec![1; 16], 0.5, TraceKind::Ideal).unwrap();
        assert_eq!(parse_trace(&trace_to_binary(&bare)).unwrap(), bare);
    }

    #[test]
    fn csv_rejections() {
        let ok = "# dt_us=1\n# kind=ideal\nindex,value\n0,1\n1,-1\n";
        assert!(parse_trace_csv(ok).is_ok());
        for bad in [
            "# kind=ideal\nindex,value\n0,1\n",
            "# dt_us=1\n# kind=ideal\nindex,value\n",
            "# dt_us=1\n# kind=ideal\nindex,value\n0,2\n",
            "# dt_us=1\n# kind=ideal\nindex,value\n1,1\n",
            "# dt_us=-1\n# kind=ideal\nindex,value\n0,1\n",
            "# dt_us=1\n# kind=odd\nindex,value\n0,1\n",
            "# dt_us=1\n# kind=ideal\n# f_g=0.9\nindex,value\n0,1\n",
            "# dt_us=1\n# kind=ideal\n# colour=red\nindex,value\n0,1\n",
            "# dt_us=1\n# kind=ideal\n0,1\n",
        ] {
            assert!(matches!(parse_trace_csv(bad), Err(Error::TraceFormat { .. })), "{bad}");
        }
    }

    #[test]
    fn binary_rejections() {
        let bytes = trace_to_binary(&sample_trace());
        assert!(parse_trace_binary(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(parse_trace_binary(&extra).is_err());
        let mut padded = bytes.clone();
        *padded.last_mut().unwrap() |= 0x80;
        assert!(parse_trace_binary(&padded).is_err());
        let mut huge = bytes.clone();
        huge[60..68].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(parse_trace_binary(&huge).is_err());
        assert!(parse_trace_binary(b"QPDTRACE").is_err());
    }
}
