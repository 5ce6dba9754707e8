//! Cepstral feature extraction.
//!
//! Per frame: log spectral energy `Ef`, cepstra `c1..c7` from a triangular
//! filterbank, and differential energy `Ed`. First-order deltas of all nine
//! base features and second-order deltas of the eight non-`Ed` features
//! complete the 26-dimensional vector, stored in the order
//! `[Ef, c1..c7, Ed, dEf, dc1..dc7, dEd, ddEf, ddc1..ddc7]`.

mod dump;
mod spectrum;

use serde::{Deserialize, Serialize};

pub use dump::{parse_binary, parse_csv, to_binary, to_csv, DumpError};
pub use spectrum::{base_features, BaseFeatures, Extractor};

use crate::ingest::Recording;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("channel '{channel}': {samples} samples is shorter than one {window}-sample window")]
    TooShort {
        channel: String,
        samples: usize,
        window: usize,
    },
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("frame has {found} samples, expected {expected}")]
    FrameLength { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterSpacing {
    #[default]
    Linear,
    Mel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub frame_s: f64,
    pub window_s: f64,
    pub num_cepstra: usize,
    pub num_filters: usize,
    /// Regression half-width for deltas, in frames.
    pub delta_halfwidth: usize,
    /// Half-width of the differential-energy window, in frames.
    pub diff_energy_halfwidth: usize,
    pub energy_floor: f64,
    pub spacing: FilterSpacing,
    pub window: WindowKind,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frame_s: 0.1,
            window_s: 0.2,
            num_cepstra: 7,
            num_filters: 8,
            delta_halfwidth: 2,
            diff_energy_halfwidth: 4,
            energy_floor: 1e-10,
            spacing: FilterSpacing::Linear,
            window: WindowKind::Hann,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::InvalidConfig(m));
        if !(self.frame_s > 0.0 && self.window_s >= self.frame_s) {
            return bad(format!(
                "need window_s >= frame_s > 0, got {} and {}",
                self.window_s, self.frame_s
            ));
        }
        if self.num_cepstra == 0 || self.num_cepstra >= self.num_filters {
            return bad(format!(
                "need 0 < num_cepstra < num_filters, got {} and {}",
                self.num_cepstra, self.num_filters
            ));
        }
        if self.delta_halfwidth == 0 {
            return bad("delta half-width must be at least 1".into());
        }
        if !(self.energy_floor > 0.0) {
            return bad("energy floor must be positive".into());
        }
        Ok(())
    }

    /// Window and step lengths in samples at `fs`.
    pub fn lengths(&self, fs: f64) -> (usize, usize) {
        let window = (self.window_s * fs).round() as usize;
        let step = (self.frame_s * fs).round() as usize;
        (window, step)
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            num_cepstra: self.num_cepstra,
        }
    }
}

/// Index arithmetic for the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub num_cepstra: usize,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        FeatureLayout { num_cepstra: 7 }
    }
}

impl FeatureLayout {
    /// `Ef`, the cepstra and `Ed`.
    pub fn base_dims(&self) -> usize {
        self.num_cepstra + 2
    }

    pub fn dims(&self) -> usize {
        3 * self.base_dims() - 1
    }

    pub fn ed(&self) -> usize {
        self.num_cepstra + 1
    }

    pub fn delta(&self, base: usize) -> usize {
        self.base_dims() + base
    }

    /// Second-order delta slot for base feature `base` (`Ed` has none).
    pub fn delta_delta(&self, base: usize) -> Option<usize> {
        (base < self.ed()).then(|| 2 * self.base_dims() + base)
    }

    pub fn names(&self) -> Vec<String> {
        let base: Vec<String> = std::iter::once("Ef".to_string())
            .chain((1..=self.num_cepstra).map(|j| format!("c{j}")))
            .chain(std::iter::once("Ed".to_string()))
            .collect();
        let mut names = base.clone();
        names.extend(base.iter().map(|n| format!("d{n}")));
        names.extend(base[..base.len() - 1].iter().map(|n| format!("dd{n}")));
        names
    }

    /// Default normalisation targets: every dim except `Ed` and `dEd`.
    pub fn spectral_dims(&self) -> Vec<usize> {
        let ed = self.ed();
        let d_ed = self.delta(ed);
        (0..self.dims()).filter(|&j| j != ed && j != d_ed).collect()
    }
}

/// Per-channel feature vectors, one row per frame, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    pub channel_label: String,
    pub frame_s: f64,
    dims: usize,
    data: Vec<f64>,
}

impl FeatureSequence {
    pub fn from_rows(channel_label: impl Into<String>, frame_s: f64, dims: usize, data: Vec<f64>) -> Self {
        assert!(dims > 0 && data.len() % dims == 0, "data is not a whole number of rows");
        FeatureSequence {
            channel_label: channel_label.into(),
            frame_s,
            dims,
            data,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.dims..(t + 1) * self.dims]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.dims..(t + 1) * self.dims]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dims)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.frames().map(move |f| f[j])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Number of whole analysis windows in a signal of `num_samples`.
pub fn frame_count(num_samples: usize, fs: f64, cfg: &FeatureConfig) -> Result<usize, FeatureError> {
    let (window, step) = cfg.lengths(fs);
    if window == 0 || step == 0 {
        return Err(FeatureError::InvalidConfig(format!(
            "window {window} or step {step} rounds to zero samples at {fs} Hz"
        )));
    }
    if num_samples < window {
        return Err(FeatureError::TooShort {
            channel: String::new(),
            samples: num_samples,
            window,
        });
    }
    Ok((num_samples - window) / step + 1)
}

/// Max minus min of `track` over `[t - m, t + m]`, clipped to the track.
pub fn differential_energy(track: &[f64], t: usize, m: usize) -> f64 {
    let lo = t.saturating_sub(m);
    let hi = (t + m).min(track.len() - 1);
    let (mn, mx) = track[lo..=hi]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    mx - mn
}

/// Regression deltas with half-width `n`; out-of-range frames replicate the
/// nearest edge.
pub fn deltas(track: &[f64], n: usize) -> Vec<f64> {
    let len = track.len();
    if len == 0 {
        return Vec::new();
    }
    let denom = 2.0 * (1..=n).map(|k| (k * k) as f64).sum::<f64>();
    let at = |i: isize| track[i.clamp(0, len as isize - 1) as usize];
    (0..len as isize)
        .map(|t| {
            (1..=n as isize)
                .map(|k| k as f64 * (at(t + k) - at(t - k)))
                .sum::<f64>()
                / denom
        })
        .collect()
}

/// Feature sequences for every channel of `rec`, in channel order.
pub fn extract(rec: &Recording, cfg: &FeatureConfig) -> Result<Vec<FeatureSequence>, FeatureError> {
    let extractor = Extractor::new(cfg, rec.sample_rate_hz())?;
    crate::par::try_map(rec.channels(), |ch| {
        extractor.sequence(&ch.label, &ch.samples).map_err(|e| match e {
            FeatureError::TooShort { samples, window, .. } => FeatureError::TooShort {
                channel: ch.label.clone(),
                samples,
                window,
            },
            other => other,
        })
    })
}
