use std::collections::HashSet;

use crate::ReferenceScheme;

#[derive(Debug, thiserror::Error)]
pub enum RecordingError {
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("recording has no channels")]
    NoChannels,
    #[error("channel '{label}' has {found} samples, expected {expected}")]
    LengthMismatch {
        label: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate channel label '{0}'")]
    DuplicateLabel(String),
    #[error("channel '{0}' contains non-finite samples")]
    NonFinite(String),
    #[error("channel '{label}' has degenerate digital range {min}..{max}")]
    DigitalRange { label: String, min: i32, max: i32 },
}

/// One sampled channel in physical units (microvolts).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSignal {
    pub label: String,
    pub samples: Vec<f64>,
    pub physical_range: (f64, f64),
    pub digital_range: (i32, i32),
}

impl ChannelSignal {
    /// Builds a channel whose physical range spans its own samples and whose
    /// digital range is the full 16-bit span.
    pub fn new(label: impl Into<String>, samples: Vec<f64>) -> Self {
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let physical_range = if !lo.is_finite() || !hi.is_finite() {
            (-1.0, 1.0)
        } else if lo == hi {
            (lo - 1.0, hi + 1.0)
        } else {
            (lo, hi)
        };
        ChannelSignal {
            label: label.into(),
            samples,
            physical_range,
            digital_range: (i16::MIN as i32, i16::MAX as i32),
        }
    }

    pub fn with_ranges(
        label: impl Into<String>,
        samples: Vec<f64>,
        physical_range: (f64, f64),
        digital_range: (i32, i32),
    ) -> Self {
        ChannelSignal {
            label: label.into(),
            samples,
            physical_range,
            digital_range,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A validated multichannel recording. Immutable once built.
///
/// All channels share one sample rate and length, labels are unique and all
/// samples are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    id: String,
    patient_id: Option<String>,
    sample_rate_hz: f64,
    channels: Vec<ChannelSignal>,
    reference_scheme: ReferenceScheme,
}

impl Recording {
    pub fn new(
        id: impl Into<String>,
        sample_rate_hz: f64,
        channels: Vec<ChannelSignal>,
        reference_scheme: ReferenceScheme,
    ) -> Result<Self, RecordingError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(RecordingError::InvalidRate(sample_rate_hz));
        }
        let first = channels.first().ok_or(RecordingError::NoChannels)?;
        let expected = first.len();
        let mut seen = HashSet::new();
        for ch in &channels {
            if ch.len() != expected {
                return Err(RecordingError::LengthMismatch {
                    label: ch.label.clone(),
                    expected,
                    found: ch.len(),
                });
            }
            if !seen.insert(ch.label.as_str()) {
                return Err(RecordingError::DuplicateLabel(ch.label.clone()));
            }
            if ch.samples.iter().any(|x| !x.is_finite()) {
                return Err(RecordingError::NonFinite(ch.label.clone()));
            }
            if ch.digital_range.0 >= ch.digital_range.1 {
                return Err(RecordingError::DigitalRange {
                    label: ch.label.clone(),
                    min: ch.digital_range.0,
                    max: ch.digital_range.1,
                });
            }
        }
        Ok(Recording {
            id: id.into(),
            patient_id: None,
            sample_rate_hz,
            channels,
            reference_scheme,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn patient_id(&self) -> Option<&str> {
        self.patient_id.as_deref()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channels(&self) -> &[ChannelSignal] {
        &self.channels
    }

    pub fn reference_scheme(&self) -> ReferenceScheme {
        self.reference_scheme
    }

    pub fn num_samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn duration_s(&self) -> f64 {
        self.num_samples() as f64 / self.sample_rate_hz
    }

    pub fn channel(&self, label: &str) -> Option<&ChannelSignal> {
        self.channels.iter().find(|c| c.label == label)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_patient_id(mut self, patient: Option<String>) -> Self {
        self.patient_id = patient;
        self
    }

    pub fn with_reference_scheme(mut self, scheme: ReferenceScheme) -> Self {
        self.reference_scheme = scheme;
        self
    }

    /// Replaces the channel set, re-running validation.
    pub fn with_channels(&self, channels: Vec<ChannelSignal>) -> Result<Self, RecordingError> {
        Recording::new(
            self.id.clone(),
            self.sample_rate_hz,
            channels,
            self.reference_scheme,
        )
        .map(|r| r.with_patient_id(self.patient_id.clone()))
    }

    pub fn into_channels(self) -> Vec<ChannelSignal> {
        self.channels
    }
}
