//! Classic EDF reader and writer.
//!
//! Header layout: a 256-byte fixed block followed by `ns` signal headers
//! stored field-major (all labels, then all transducer fields, ...), 256
//! bytes per signal in total. Data records hold, per signal, `spr` 16-bit
//! little-endian two's-complement samples.

use super::recording::{ChannelSignal, Recording, RecordingError};
use crate::ReferenceScheme;

const FIXED_HEADER: usize = 256;
const SIGNAL_HEADER: usize = 256;
const ANNOTATION_LABEL: &str = "EDF Annotations";

// (width) of each per-signal field, in file order
const SIGNAL_FIELDS: [usize; 10] = [16, 80, 8, 8, 8, 8, 8, 80, 8, 32];

#[derive(Debug, thiserror::Error)]
pub enum EdfError {
    #[error("malformed EDF header: {0}")]
    MalformedHeader(String),
    #[error("data section holds {actual} bytes but the header implies {expected}")]
    InconsistentRecordCount { expected: usize, actual: usize },
    #[error("signal '{0}' has digital minimum equal to digital maximum")]
    DegenerateScaling(String),
    #[error("signals disagree in samples per record ({0} vs {1})")]
    RateMismatch(usize, usize),
    #[error("no EEG signals in file")]
    NoSignals,
    #[error("cannot write {samples} samples as whole records of {per_record}")]
    PartialRecord { samples: usize, per_record: usize },
    #[error("sample rate {rate} Hz times record duration {duration} s is not an integer")]
    NonIntegralRecord { rate: f64, duration: f64 },
    #[error("header value {0} does not fit an 8-character field")]
    FieldOverflow(f64),
    #[error(transparent)]
    Recording(#[from] RecordingError),
}

struct SignalHeader {
    label: String,
    phys_min: f64,
    phys_max: f64,
    dig_min: i32,
    dig_max: i32,
    samples_per_record: usize,
}

fn ascii_field(bytes: &[u8], what: &str) -> Result<String, EdfError> {
    std::str::from_utf8(bytes)
        .map(|s| s.trim().to_string())
        .map_err(|_| EdfError::MalformedHeader(format!("{what} is not ASCII")))
}

fn numeric_field<T: std::str::FromStr>(bytes: &[u8], what: &str) -> Result<T, EdfError> {
    let text = ascii_field(bytes, what)?;
    text.parse()
        .map_err(|_| EdfError::MalformedHeader(format!("{what} '{text}' is not a number")))
}

/// Reference scheme implied by channel label suffixes, or `Unknown` when the
/// labels carry no marker or disagree.
pub(crate) fn infer_scheme<'a>(labels: impl IntoIterator<Item = &'a str>) -> ReferenceScheme {
    let mut found: Option<ReferenceScheme> = None;
    for label in labels {
        let upper = label.trim().to_ascii_uppercase();
        let scheme = if upper.ends_with("-LE") {
            ReferenceScheme::Le
        } else if upper.ends_with("-REF") || upper.ends_with("-AR") {
            ReferenceScheme::Ar
        } else {
            continue;
        };
        match found {
            None => found = Some(scheme),
            Some(prev) if prev != scheme => return ReferenceScheme::Unknown,
            _ => {}
        }
    }
    found.unwrap_or(ReferenceScheme::Unknown)
}

/// Parses an in-memory EDF file.
///
/// Annotation signals are dropped. Samples are scaled to physical units with
/// the header's linear map, evaluated so that `dig_min` and `dig_max` land on
/// `phys_min` and `phys_max` exactly.
pub fn parse_edf(bytes: &[u8]) -> Result<Recording, EdfError> {
    if bytes.len() < FIXED_HEADER {
        return Err(EdfError::MalformedHeader(format!(
            "file is {} bytes, shorter than the fixed header",
            bytes.len()
        )));
    }
    if &bytes[0..8] != b"0       " {
        return Err(EdfError::MalformedHeader(format!(
            "version field {:?} is not \"0\"",
            String::from_utf8_lossy(&bytes[0..8])
        )));
    }
    let patient = ascii_field(&bytes[8..88], "patient")?;
    let recording_field = ascii_field(&bytes[88..168], "recording")?;
    let header_bytes: usize = numeric_field(&bytes[184..192], "header size")?;
    let record_count: i64 = numeric_field(&bytes[236..244], "record count")?;
    let record_duration: f64 = numeric_field(&bytes[244..252], "record duration")?;
    let ns: usize = numeric_field(&bytes[252..256], "signal count")?;

    if header_bytes != FIXED_HEADER + SIGNAL_HEADER * ns {
        return Err(EdfError::MalformedHeader(format!(
            "header size {header_bytes} does not match {ns} signals"
        )));
    }
    if bytes.len() < header_bytes {
        return Err(EdfError::MalformedHeader(format!(
            "file is {} bytes, header needs {header_bytes}",
            bytes.len()
        )));
    }
    if !(record_duration.is_finite() && record_duration > 0.0) {
        return Err(EdfError::MalformedHeader(format!(
            "record duration {record_duration} must be positive"
        )));
    }

    let mut fields: Vec<Vec<&[u8]>> = Vec::with_capacity(SIGNAL_FIELDS.len());
    let mut offset = FIXED_HEADER;
    for width in SIGNAL_FIELDS {
        let column = (0..ns)
            .map(|i| &bytes[offset + i * width..offset + (i + 1) * width])
            .collect();
        fields.push(column);
        offset += width * ns;
    }

    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let label = ascii_field(fields[0][i], "label")?;
        let sig = SignalHeader {
            phys_min: numeric_field(fields[3][i], "physical minimum")?,
            phys_max: numeric_field(fields[4][i], "physical maximum")?,
            dig_min: numeric_field(fields[5][i], "digital minimum")?,
            dig_max: numeric_field(fields[6][i], "digital maximum")?,
            samples_per_record: numeric_field(fields[8][i], "samples per record")?,
            label,
        };
        if sig.dig_min == sig.dig_max {
            return Err(EdfError::DegenerateScaling(sig.label));
        }
        if sig.dig_min > sig.dig_max {
            return Err(EdfError::MalformedHeader(format!(
                "signal '{}' has digital minimum above maximum",
                sig.label
            )));
        }
        signals.push(sig);
    }

    let record_bytes: usize = signals.iter().map(|s| s.samples_per_record * 2).sum();
    let data = &bytes[header_bytes..];
    let records = if record_count < 0 {
        // still-recording marker: infer from size
        if record_bytes == 0 || data.len() % record_bytes != 0 {
            return Err(EdfError::InconsistentRecordCount {
                expected: record_bytes * (data.len() / record_bytes.max(1)),
                actual: data.len(),
            });
        }
        data.len() / record_bytes
    } else {
        record_count as usize
    };
    let expected = records * record_bytes;
    if expected != data.len() {
        return Err(EdfError::InconsistentRecordCount {
            expected,
            actual: data.len(),
        });
    }

    let eeg: Vec<usize> = (0..ns)
        .filter(|&i| signals[i].label != ANNOTATION_LABEL)
        .collect();
    let Some(&first) = eeg.first() else {
        return Err(EdfError::NoSignals);
    };
    let spr = signals[first].samples_per_record;
    for &i in &eeg {
        if signals[i].samples_per_record != spr {
            return Err(EdfError::RateMismatch(spr, signals[i].samples_per_record));
        }
    }

    let mut samples: Vec<Vec<f64>> = eeg.iter().map(|_| Vec::with_capacity(records * spr)).collect();
    let mut cursor = 0;
    for _ in 0..records {
        let mut slot = 0;
        for (i, sig) in signals.iter().enumerate() {
            let n = sig.samples_per_record;
            if eeg.get(slot) == Some(&i) {
                let span = (sig.dig_max - sig.dig_min) as f64;
                let out = &mut samples[slot];
                for k in 0..n {
                    let at = cursor + 2 * k;
                    let d = i16::from_le_bytes([data[at], data[at + 1]]) as i32;
                    let t = (d - sig.dig_min) as f64 / span;
                    out.push(sig.phys_min * (1.0 - t) + sig.phys_max * t);
                }
                slot += 1;
            }
            cursor += 2 * n;
        }
    }

    let channels: Vec<ChannelSignal> = eeg
        .iter()
        .zip(samples)
        .map(|(&i, s)| {
            let sig = &signals[i];
            ChannelSignal::with_ranges(
                sig.label.clone(),
                s,
                (sig.phys_min, sig.phys_max),
                (sig.dig_min, sig.dig_max),
            )
        })
        .collect();
    let scheme = infer_scheme(channels.iter().map(|c| c.label.as_str()));
    let fs = spr as f64 / record_duration;
    let id = if recording_field.is_empty() {
        "edf".to_string()
    } else {
        recording_field
    };
    let patient_id = patient
        .split_whitespace()
        .next()
        .filter(|p| *p != "X")
        .map(str::to_string);
    Ok(Recording::new(id, fs, channels, scheme)?.with_patient_id(patient_id))
}

fn put_field(out: &mut Vec<u8>, text: &str, width: usize) {
    let bytes = text.as_bytes();
    let n = bytes.len().min(width);
    out.extend_from_slice(&bytes[..n]);
    out.extend(std::iter::repeat_n(b' ', width - n));
}

fn format_number(v: f64) -> Result<String, EdfError> {
    let plain = format!("{v}");
    if plain.len() <= 8 {
        return Ok(plain);
    }
    for precision in (0..8).rev() {
        let s = format!("{v:.precision$}");
        if s.len() <= 8 {
            return Ok(s);
        }
    }
    Err(EdfError::FieldOverflow(v))
}

/// Serialises a recording as classic EDF with records of `record_duration_s`.
///
/// Physical values are quantised with each channel's ranges. Header values
/// that do not fit eight characters are rounded, which makes the write
/// lossy; integral ranges round-trip exactly.
pub fn write_edf(rec: &Recording, record_duration_s: f64) -> Result<Vec<u8>, EdfError> {
    let spr_f = rec.sample_rate_hz() * record_duration_s;
    let spr = spr_f.round() as usize;
    if spr == 0 || (spr_f - spr as f64).abs() > 1e-9 {
        return Err(EdfError::NonIntegralRecord {
            rate: rec.sample_rate_hz(),
            duration: record_duration_s,
        });
    }
    let n = rec.num_samples();
    if n % spr != 0 {
        return Err(EdfError::PartialRecord {
            samples: n,
            per_record: spr,
        });
    }
    let records = n / spr;
    let ns = rec.channels().len();

    let mut ranges = Vec::with_capacity(ns);
    for ch in rec.channels() {
        let pmin: f64 = format_number(ch.physical_range.0)?.parse().unwrap_or(ch.physical_range.0);
        let pmax: f64 = format_number(ch.physical_range.1)?.parse().unwrap_or(ch.physical_range.1);
        ranges.push((pmin, pmax));
    }

    let mut out = Vec::with_capacity(FIXED_HEADER + SIGNAL_HEADER * ns + records * spr * ns * 2);
    put_field(&mut out, "0", 8);
    let patient = rec.patient_id().unwrap_or("X");
    put_field(&mut out, &format!("{patient} X X X"), 80);
    put_field(&mut out, rec.id(), 80);
    put_field(&mut out, "01.01.00", 8);
    put_field(&mut out, "00.00.00", 8);
    put_field(&mut out, &(FIXED_HEADER + SIGNAL_HEADER * ns).to_string(), 8);
    put_field(&mut out, "", 44);
    put_field(&mut out, &records.to_string(), 8);
    put_field(&mut out, &format_number(record_duration_s)?, 8);
    put_field(&mut out, &ns.to_string(), 4);

    let chans = rec.channels();
    for ch in chans {
        put_field(&mut out, &ch.label, 16);
    }
    for _ in chans {
        put_field(&mut out, "", 80);
    }
    for _ in chans {
        put_field(&mut out, "uV", 8);
    }
    for &(pmin, _) in &ranges {
        put_field(&mut out, &format_number(pmin)?, 8);
    }
    for &(_, pmax) in &ranges {
        put_field(&mut out, &format_number(pmax)?, 8);
    }
    for ch in chans {
        put_field(&mut out, &ch.digital_range.0.to_string(), 8);
    }
    for ch in chans {
        put_field(&mut out, &ch.digital_range.1.to_string(), 8);
    }
    for _ in chans {
        put_field(&mut out, "", 80);
    }
    for _ in chans {
        put_field(&mut out, &spr.to_string(), 8);
    }
    for _ in chans {
        put_field(&mut out, "", 32);
    }

    for r in 0..records {
        for (ch, &(pmin, pmax)) in chans.iter().zip(&ranges) {
            let (dmin, dmax) = ch.digital_range;
            let dspan = (dmax - dmin) as f64;
            let pspan = pmax - pmin;
            for &x in &ch.samples[r * spr..(r + 1) * spr] {
                let d = (dmin as f64 + (x - pmin) / pspan * dspan).round();
                let d = d.clamp(dmin.max(i16::MIN as i32) as f64, dmax.min(i16::MAX as i32) as f64);
                out.extend_from_slice(&(d as i16).to_le_bytes());
            }
        }
    }
    Ok(out)
}
