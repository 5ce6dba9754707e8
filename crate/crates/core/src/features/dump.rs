//! Feature dump formats.
//!
//! CSV: header `t,<names...>`, one row per frame, `t` in seconds.
//! Binary: `FEAT`, then version, frames and dims as little-endian `u32`,
//! then row-major little-endian `f32` values.

use std::fmt::Write as _;

use super::{FeatureLayout, FeatureSequence};

const MAGIC: &[u8; 4] = b"FEAT";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("binary dump: {0}")]
    Binary(String),
}

pub fn to_csv(seq: &FeatureSequence, layout: &FeatureLayout) -> String {
    let mut out = String::from("t");
    let names = if layout.dims() == seq.dims() {
        layout.names()
    } else {
        (0..seq.dims()).map(|j| format!("f{j}")).collect()
    };
    for name in &names {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for (t, frame) in seq.frames().enumerate() {
        let _ = write!(out, "{}", t as f64 * seq.frame_s);
        for v in frame {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Reads a CSV dump written by [`to_csv`].
pub fn parse_csv(label: &str, text: &str) -> Result<FeatureSequence, DumpError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(DumpError::Csv {
        line: 1,
        msg: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first().map(|c| c.trim()) != Some("t") || cols.len() < 2 {
        return Err(DumpError::Csv {
            line: 1,
            msg: "header must start with 't'".into(),
        });
    }
    let dims = cols.len() - 1;
    let mut data = Vec::new();
    let mut times = Vec::new();
    for (idx, line) in lines {
        let mut fields = line.split(',');
        let mut next = |what: &str| -> Result<f64, DumpError> {
            let raw = fields.next().ok_or_else(|| DumpError::Csv {
                line: idx + 1,
                msg: format!("missing {what}"),
            })?;
            raw.trim().parse().map_err(|_| DumpError::Csv {
                line: idx + 1,
                msg: format!("bad number '{raw}'"),
            })
        };
        times.push(next("time")?);
        for _ in 0..dims {
            data.push(next("value")?);
        }
        if fields.next().is_some() {
            return Err(DumpError::Csv {
                line: idx + 1,
                msg: "too many columns".into(),
            });
        }
    }
    let frame_s = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
    Ok(FeatureSequence::from_rows(label, frame_s, dims, data))
}

pub fn to_binary(seq: &FeatureSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + seq.as_slice().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.len() as u32).to_le_bytes());
    out.extend_from_slice(&(seq.dims() as u32).to_le_bytes());
    for &v in seq.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn parse_binary(label: &str, frame_s: f64, bytes: &[u8]) -> Result<FeatureSequence, DumpError> {
    if bytes.len() < 16 || &bytes[0..4] != MAGIC {
        return Err(DumpError::Binary("missing FEAT header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    if word(4) != VERSION as usize {
        return Err(DumpError::Binary(format!("unsupported version {}", word(4))));
    }
    let (frames, dims) = (word(8), word(12));
    if dims == 0 || bytes.len() != 16 + frames * dims * 4 {
        return Err(DumpError::Binary(format!(
            "{} payload bytes do not hold {frames}x{dims} floats",
            bytes.len() - 16
        )));
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(FeatureSequence::from_rows(label, frame_s, dims, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq() -> FeatureSequence {
        let data: Vec<f64> = (0..26 * 3).map(|i| (i as f64).sin() * 10.0).collect();
        FeatureSequence::from_rows("C3", 0.1, 26, data)
    }

    #[test]
    fn csv_header_and_round_trip() {
        let s = seq();
        let text = to_csv(&s, &FeatureLayout::default());
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("t,Ef,c1,"));
        assert!(header.ends_with(",ddc6,ddc7"));
        let back = parse_csv("C3", &text).unwrap();
        assert_eq!(back.as_slice(), s.as_slice());
        assert_eq!(back.len(), 3);
    }

    #[test]
    fn binary_layout() {
        let s = seq();
        let bytes = to_binary(&s);
        assert_eq!(&bytes[..4], b"FEAT");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 26);
        let back = parse_binary("C3", 0.1, &bytes).unwrap();
        for (a, b) in back.as_slice().iter().zip(s.as_slice()) {
            assert_eq!(*a, *b as f32 as f64);
        }
        assert!(parse_binary("C3", 0.1, &bytes[..20]).is_err());
    }
}
