//! Re-referencing (LE / AR / CV) and bipolar montages.
//!
//! Electrode lookup is case-insensitive and ignores an `EEG ` prefix and
//! `-LE`, `-REF` or `-AR` suffixes, so `"EEG FP1-REF"` resolves as `FP1`.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ingest::{ChannelSignal, Recording, RecordingError};
use crate::ReferenceScheme;

#[derive(Debug, thiserror::Error)]
pub enum MontageError {
    #[error("missing electrode {0}")]
    MissingElectrode(String),
    #[error("average reference set is empty")]
    EmptyAverageSet,
    #[error("duplicate derived channel '{0}'")]
    DuplicateLabel(String),
    #[error("cannot re-reference to {0}")]
    UnsupportedScheme(ReferenceScheme),
    #[error("montage line {line}: expected 'LABEL: POS -- NEG'")]
    Syntax { line: usize },
    #[error(transparent)]
    Recording(#[from] RecordingError),
}

const NON_EEG: [&str; 9] = ["EKG", "ECG", "EMG", "PHOTIC", "RESP", "PULSE", "IBI", "BURSTS", "SUPPR"];

/// Canonical electrode name for a channel label.
pub fn electrode_key(label: &str) -> String {
    let mut key = label.trim().to_ascii_uppercase();
    if let Some(rest) = key.strip_prefix("EEG ") {
        key = rest.trim().to_string();
    }
    for suffix in ["-LE", "-REF", "-AR"] {
        if let Some(rest) = key.strip_suffix(suffix) {
            key = rest.trim().to_string();
            break;
        }
    }
    key
}

fn is_eeg(key: &str) -> bool {
    !NON_EEG.iter().any(|n| key.contains(n))
}

fn is_ear(key: &str) -> bool {
    key == "A1" || key == "A2"
}

fn find<'a>(rec: &'a Recording, electrode: &str) -> Option<&'a ChannelSignal> {
    let want = electrode_key(electrode);
    rec.channels().iter().find(|c| electrode_key(&c.label) == want)
}

/// Which ear(s) form the linked-ears reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EarMode {
    /// Mean of A1 and A2; falls back to whichever one is present.
    #[default]
    Both,
    Left,
    Right,
}

/// Electrodes averaged for the AR scheme.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageSet {
    /// All EEG channels except A1/A2.
    #[default]
    Default,
    /// Every channel of the recording.
    All,
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RereferenceOptions {
    pub ears: EarMode,
    pub average_set: AverageSet,
}

/// Re-references `rec` to `scheme` with default options.
pub fn rereference(rec: &Recording, scheme: ReferenceScheme) -> Result<Recording, MontageError> {
    rereference_with(rec, scheme, &RereferenceOptions::default())
}

/// Subtracts the reference signal for `scheme` from every EEG channel.
/// Non-EEG channels (EKG, EMG, photic, ...) pass through unless the average
/// set is [`AverageSet::All`].
pub fn rereference_with(
    rec: &Recording,
    scheme: ReferenceScheme,
    opts: &RereferenceOptions,
) -> Result<Recording, MontageError> {
    let n = rec.num_samples();
    let mut include_all = false;
    let reference: Vec<f64> = match scheme {
        ReferenceScheme::Le => {
            let a1 = find(rec, "A1");
            let a2 = find(rec, "A2");
            let ears: Vec<&ChannelSignal> = match opts.ears {
                EarMode::Both => [a1, a2].into_iter().flatten().collect(),
                EarMode::Left => vec![a1.ok_or_else(|| MontageError::MissingElectrode("A1".into()))?],
                EarMode::Right => vec![a2.ok_or_else(|| MontageError::MissingElectrode("A2".into()))?],
            };
            if ears.is_empty() {
                return Err(MontageError::MissingElectrode("A1/A2".into()));
            }
            mean_of(&ears, n)
        }
        ReferenceScheme::Cv => find(rec, "CZ")
            .ok_or_else(|| MontageError::MissingElectrode("CZ".into()))?
            .samples
            .clone(),
        ReferenceScheme::Ar => {
            let set: Vec<&ChannelSignal> = match &opts.average_set {
                AverageSet::Default => rec
                    .channels()
                    .iter()
                    .filter(|c| {
                        let k = electrode_key(&c.label);
                        is_eeg(&k) && !is_ear(&k)
                    })
                    .collect(),
                AverageSet::All => {
                    include_all = true;
                    rec.channels().iter().collect()
                }
                AverageSet::Explicit(names) => names
                    .iter()
                    .map(|e| find(rec, e).ok_or_else(|| MontageError::MissingElectrode(e.clone())))
                    .collect::<Result<_, _>>()?,
            };
            if set.is_empty() {
                return Err(MontageError::EmptyAverageSet);
            }
            mean_of(&set, n)
        }
        ReferenceScheme::Unknown => return Err(MontageError::UnsupportedScheme(scheme)),
    };

    let channels = rec
        .channels()
        .iter()
        .map(|c| {
            if include_all || is_eeg(&electrode_key(&c.label)) {
                let samples = c.samples.iter().zip(&reference).map(|(x, r)| x - r).collect();
                ChannelSignal::new(c.label.clone(), samples)
            } else {
                c.clone()
            }
        })
        .collect();
    Ok(rec.with_channels(channels)?.with_reference_scheme(scheme))
}

fn mean_of(set: &[&ChannelSignal], n: usize) -> Vec<f64> {
    let k = set.len() as f64;
    (0..n)
        .map(|i| set.iter().map(|c| c.samples[i]).sum::<f64>() / k)
        .collect()
}

/// One derived channel: `positive - negative`, or `positive` alone when
/// `negative` is `None` (a referential pass-through).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedChannel {
    pub label: String,
    pub positive: String,
    pub negative: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MontageSpec {
    pub name: String,
    derived: Vec<DerivedChannel>,
}

const TCP_PAIRS: [(&str, &str); 22] = [
    ("FP1", "F7"),
    ("F7", "T3"),
    ("T3", "T5"),
    ("T5", "O1"),
    ("FP2", "F8"),
    ("F8", "T4"),
    ("T4", "T6"),
    ("T6", "O2"),
    ("A1", "T3"),
    ("T3", "C3"),
    ("C3", "CZ"),
    ("CZ", "C4"),
    ("C4", "T4"),
    ("T4", "A2"),
    ("FP1", "F3"),
    ("F3", "C3"),
    ("C3", "P3"),
    ("P3", "O1"),
    ("FP2", "F4"),
    ("F4", "C4"),
    ("C4", "P4"),
    ("P4", "O2"),
];

impl MontageSpec {
    pub fn new(name: impl Into<String>, derived: Vec<DerivedChannel>) -> Result<Self, MontageError> {
        let mut seen = HashSet::new();
        for d in &derived {
            if !seen.insert(d.label.as_str()) {
                return Err(MontageError::DuplicateLabel(d.label.clone()));
            }
        }
        Ok(MontageSpec {
            name: name.into(),
            derived,
        })
    }

    /// The 22-channel temporal central parasagittal bipolar montage.
    pub fn tcp() -> Self {
        let derived = TCP_PAIRS
            .iter()
            .map(|(p, n)| DerivedChannel {
                label: format!("{p}-{n}"),
                positive: p.to_string(),
                negative: Some(n.to_string()),
            })
            .collect();
        MontageSpec {
            name: "tcp".into(),
            derived,
        }
    }

    pub fn derived(&self) -> &[DerivedChannel] {
        &self.derived
    }

    /// Parses one `LABEL: POS -- NEG` line per channel; `NEG` may be `REF`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, MontageError> {
        let mut derived = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = || MontageError::Syntax { line: idx + 1 };
            let (label, rest) = line.split_once(':').ok_or_else(syntax)?;
            let (pos, neg) = rest.split_once("--").ok_or_else(syntax)?;
            let (label, pos, neg) = (label.trim(), pos.trim(), neg.trim());
            if label.is_empty() || pos.is_empty() || neg.is_empty() {
                return Err(syntax());
            }
            derived.push(DerivedChannel {
                label: label.to_string(),
                positive: pos.to_string(),
                negative: (!neg.eq_ignore_ascii_case("REF")).then(|| neg.to_string()),
            });
        }
        MontageSpec::new(name, derived)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.derived {
            let neg = d.negative.as_deref().unwrap_or("REF");
            let _ = writeln!(out, "{}: {} -- {}", d.label, d.positive, neg);
        }
        out
    }
}

/// Builds the derived channels of `spec` from `rec`, sample by sample.
/// The output keeps the input's reference tag.
pub fn apply_montage(rec: &Recording, spec: &MontageSpec) -> Result<Recording, MontageError> {
    let lookup = |e: &str| find(rec, e).ok_or_else(|| MontageError::MissingElectrode(e.to_string()));
    let mut channels = Vec::with_capacity(spec.derived.len());
    for d in &spec.derived {
        let pos = lookup(&d.positive)?;
        let samples = match &d.negative {
            Some(neg) => {
                let neg = lookup(neg)?;
                pos.samples.iter().zip(&neg.samples).map(|(a, b)| a - b).collect()
            }
            None => pos.samples.clone(),
        };
        channels.push(ChannelSignal::new(d.label.clone(), samples));
    }
    Ok(rec.with_channels(channels)?)
}
