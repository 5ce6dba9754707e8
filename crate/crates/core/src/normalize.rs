//! Cepstral mean (and variance) normalization.

use serde::{Deserialize, Serialize};

use crate::features::{FeatureLayout, FeatureSequence};

const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NormalizeError {
    #[error("cannot normalize an empty feature sequence")]
    Empty,
    #[error("dimension {dim} is outside a {dims}-dimensional vector")]
    DimOutOfRange { dim: usize, dims: usize },
    #[error("pooled sequences disagree in dimension ({0} vs {1})")]
    DimMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    #[default]
    None,
    Cmn,
    Cmvn,
}

impl std::str::FromStr for NormalizationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(NormalizationMode::None),
            "cmn" => Ok(NormalizationMode::Cmn),
            "cmvn" => Ok(NormalizationMode::Cmvn),
            other => Err(format!("unknown normalization mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationScope {
    /// Statistics per channel of each recording.
    #[default]
    PerRecordingPerChannel,
    /// One set of statistics over all channels of a recording.
    PerRecordingPooled,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    pub mode: NormalizationMode,
    pub scope: NormalizationScope,
    /// Dimensions to normalise; `None` selects every dim except `Ed` and
    /// `dEd`.
    pub apply_to: Option<Vec<usize>>,
}

impl NormalizationConfig {
    pub fn cmn() -> Self {
        NormalizationConfig {
            mode: NormalizationMode::Cmn,
            ..Default::default()
        }
    }

    pub fn cmvn() -> Self {
        NormalizationConfig {
            mode: NormalizationMode::Cmvn,
            ..Default::default()
        }
    }

    fn dims_for(&self, dims: usize) -> Result<Vec<usize>, NormalizeError> {
        let set = match &self.apply_to {
            Some(set) => set.clone(),
            None if dims == FeatureLayout::default().dims() => FeatureLayout::default().spectral_dims(),
            None => (0..dims).collect(),
        };
        if let Some(&dim) = set.iter().find(|&&d| d >= dims) {
            return Err(NormalizeError::DimOutOfRange { dim, dims });
        }
        Ok(set)
    }
}

/// Per-dimension shift and scale.
struct Moments {
    mean: Vec<f64>,
    std: Vec<f64>,
}

fn moments<'a>(seqs: impl Iterator<Item = &'a FeatureSequence> + Clone, dims: &[usize]) -> Moments {
    let n: usize = seqs.clone().map(|s| s.len()).sum();
    let mean: Vec<f64> = dims
        .iter()
        .map(|&j| seqs.clone().flat_map(|s| s.column(j)).sum::<f64>() / n as f64)
        .collect();
    let std = dims
        .iter()
        .zip(&mean)
        .map(|(&j, &m)| {
            let var = seqs.clone().flat_map(|s| s.column(j)).map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
            var.sqrt().max(STD_FLOOR)
        })
        .collect();
    Moments { mean, std }
}

fn apply(seq: &FeatureSequence, dims: &[usize], m: &Moments, scale: bool) -> FeatureSequence {
    let mut out = seq.clone();
    for t in 0..out.len() {
        let frame = out.frame_mut(t);
        for (k, &j) in dims.iter().enumerate() {
            let centred = frame[j] - m.mean[k];
            frame[j] = if scale { centred / m.std[k] } else { centred };
        }
    }
    out
}

/// Normalises one sequence against its own statistics.
pub fn normalize(seq: &FeatureSequence, cfg: &NormalizationConfig) -> Result<FeatureSequence, NormalizeError> {
    if seq.is_empty() {
        return Err(NormalizeError::Empty);
    }
    let dims = cfg.dims_for(seq.dims())?;
    if cfg.mode == NormalizationMode::None {
        return Ok(seq.clone());
    }
    let m = moments(std::iter::once(seq), &dims);
    Ok(apply(seq, &dims, &m, cfg.mode == NormalizationMode::Cmvn))
}

/// Normalises all channel sequences of one recording according to
/// `cfg.scope`.
pub fn normalize_recording(
    seqs: &[FeatureSequence],
    cfg: &NormalizationConfig,
) -> Result<Vec<FeatureSequence>, NormalizeError> {
    match cfg.scope {
        NormalizationScope::PerRecordingPerChannel => crate::par::try_map(seqs, |s| normalize(s, cfg)),
        NormalizationScope::PerRecordingPooled => {
            let first = seqs.first().ok_or(NormalizeError::Empty)?;
            if let Some(bad) = seqs.iter().find(|s| s.dims() != first.dims()) {
                return Err(NormalizeError::DimMismatch(first.dims(), bad.dims()));
            }
            if seqs.iter().all(|s| s.is_empty()) {
                return Err(NormalizeError::Empty);
            }
            let dims = cfg.dims_for(first.dims())?;
            if cfg.mode == NormalizationMode::None {
                return Ok(seqs.to_vec());
            }
            let m = moments(seqs.iter(), &dims);
            let scale = cfg.mode == NormalizationMode::Cmvn;
            Ok(seqs.iter().map(|s| apply(s, &dims, &m, scale)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(rows: usize, dims: usize) -> FeatureSequence {
        let data = (0..rows * dims)
            .map(|i| ((i * 37 % 101) as f64).sqrt() * if i % 3 == 0 { -1.0 } else { 2.5 })
            .collect();
        FeatureSequence::from_rows("x", 0.1, dims, data)
    }

    fn col_mean(s: &FeatureSequence, j: usize) -> f64 {
        s.column(j).sum::<f64>() / s.len() as f64
    }

    #[test]
    fn cmn_zeroes_means_of_selected_dims() {
        let s = seq(40, 26);
        let out = normalize(&s, &NormalizationConfig::cmn()).unwrap();
        for j in FeatureLayout::default().spectral_dims() {
            assert!(col_mean(&out, j).abs() <= 1e-9);
        }
        // Ed and dEd untouched
        for j in [8, 17] {
            assert!(out.column(j).eq(s.column(j)));
        }
    }

    #[test]
    fn constant_dim_becomes_zero() {
        let s = FeatureSequence::from_rows("k", 0.1, 2, vec![3.5, 1.0, 3.5, 2.0, 3.5, 4.0]);
        let cfg = NormalizationConfig {
            mode: NormalizationMode::Cmn,
            apply_to: Some(vec![0]),
            ..Default::default()
        };
        let out = normalize(&s, &cfg).unwrap();
        assert!(out.column(0).all(|v| v == 0.0));
        assert!(out.column(1).eq(s.column(1)));
    }

    #[test]
    fn cmn_is_idempotent() {
        let s = seq(33, 26);
        let cfg = NormalizationConfig::cmn();
        let once = normalize(&s, &cfg).unwrap();
        let twice = normalize(&once, &cfg).unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn cmvn_unit_variance() {
        let s = seq(50, 26);
        let out = normalize(&s, &NormalizationConfig::cmvn()).unwrap();
        for j in FeatureLayout::default().spectral_dims() {
            let m = col_mean(&out, j);
            let v = out.column(j).map(|x| (x - m).powi(2)).sum::<f64>() / out.len() as f64;
            assert!((v - 1.0).abs() <= 1e-6, "dim {j}: {v}");
        }
    }

    #[test]
    fn pooled_scope_shares_statistics() {
        let a = FeatureSequence::from_rows("a", 0.1, 1, vec![1.0, 3.0]);
        let b = FeatureSequence::from_rows("b", 0.1, 1, vec![5.0, 7.0]);
        let cfg = NormalizationConfig {
            mode: NormalizationMode::Cmn,
            scope: NormalizationScope::PerRecordingPooled,
            apply_to: Some(vec![0]),
        };
        let out = normalize_recording(&[a, b], &cfg).unwrap();
        assert_eq!(out[0].as_slice(), &[-3.0, -1.0]);
        assert_eq!(out[1].as_slice(), &[1.0, 3.0]);
    }

    #[test]
    fn errors() {
        let empty = FeatureSequence::from_rows("e", 0.1, 26, vec![]);
        assert_eq!(normalize(&empty, &NormalizationConfig::cmn()), Err(NormalizeError::Empty));
        let cfg = NormalizationConfig {
            mode: NormalizationMode::Cmn,
            apply_to: Some(vec![26]),
            ..Default::default()
        };
        assert_eq!(
            normalize(&seq(3, 26), &cfg),
            Err(NormalizeError::DimOutOfRange { dim: 26, dims: 26 })
        );
    }
}
