use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatsTag {
    #[serde(rename = "LE")]
    Le,
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "GLOBAL")]
    Global,
}

/// Streaming per-dimension mean and population variance.
///
/// Updates use Welford's recurrence and [`merge`](Self::merge) uses the
/// pairwise combination of Chan et al., so partial summaries built on
/// different threads combine to the same statistics as one pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub class_tag: StatsTag,
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl StatsSummary {
    pub fn new(class_tag: StatsTag, dims: usize) -> Self {
        StatsSummary {
            class_tag,
            count: 0,
            mean: vec![0.0; dims],
            m2: vec![0.0; dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) -> Result<(), AnalysisError> {
        if x.len() != self.dims() {
            return Err(AnalysisError::DimensionMismatch {
                expected: self.dims(),
                found: x.len(),
            });
        }
        self.count += 1;
        let n = self.count as f64;
        for ((m, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *m2 += delta * (v - *m);
        }
        Ok(())
    }

    /// Folds a stream of vectors into the summary.
    pub fn accumulate<'a, I>(mut self, vectors: I) -> Result<Self, AnalysisError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        for v in vectors {
            self.push(v)?;
        }
        Ok(self)
    }

    /// Combined summary of both inputs; keeps `self`'s tag.
    pub fn merge(&self, other: &StatsSummary) -> Result<StatsSummary, AnalysisError> {
        if other.dims() != self.dims() {
            return Err(AnalysisError::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        if other.count == 0 {
            return Ok(self.clone());
        }
        if self.count == 0 {
            return Ok(StatsSummary {
                class_tag: self.class_tag,
                ..other.clone()
            });
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let mut mean = Vec::with_capacity(self.dims());
        let mut m2 = Vec::with_capacity(self.dims());
        for j in 0..self.dims() {
            let delta = other.mean[j] - self.mean[j];
            mean.push(self.mean[j] + delta * nb / n);
            m2.push(self.m2[j] + other.m2[j] + delta * delta * na * nb / n);
        }
        Ok(StatsSummary {
            class_tag: self.class_tag,
            count: self.count + other.count,
            mean,
            m2,
        })
    }

    pub fn with_tag(mut self, tag: StatsTag) -> Self {
        self.class_tag = tag;
        self
    }

    /// `None` for an empty summary.
    pub fn mean(&self) -> Option<&[f64]> {
        (self.count > 0).then_some(self.mean.as_slice())
    }

    /// Population variance; `None` for an empty summary.
    pub fn variance(&self) -> Option<Vec<f64>> {
        (self.count > 0).then(|| self.m2.iter().map(|m2| (m2 / self.count as f64).max(0.0)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_variance() {
        let s = StatsSummary::new(StatsTag::Le, 1)
            .accumulate([[1.0].as_slice(), &[2.0], &[3.0]])
            .unwrap();
        assert_eq!(s.mean(), Some([2.0].as_slice()));
        assert!((s.variance().unwrap()[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_is_undefined() {
        let s = StatsSummary::new(StatsTag::Ar, 9);
        assert_eq!(s.count(), 0);
        assert!(s.mean().is_none());
        assert!(s.variance().is_none());
    }

    #[test]
    fn merge_matches_two_pass() {
        let a: Vec<Vec<f64>> = (0..57).map(|i| vec![(i as f64).sin() * 3.0 + 10.0, i as f64]).collect();
        let b: Vec<Vec<f64>> = (0..31).map(|i| vec![(i as f64).cos() - 2.0, -(i as f64) * 0.5]).collect();
        let sa = StatsSummary::new(StatsTag::Le, 2).accumulate(a.iter().map(Vec::as_slice)).unwrap();
        let sb = StatsSummary::new(StatsTag::Ar, 2).accumulate(b.iter().map(Vec::as_slice)).unwrap();
        let merged = sa.merge(&sb).unwrap();
        let all: Vec<&Vec<f64>> = a.iter().chain(&b).collect();
        let n = all.len() as f64;
        for j in 0..2 {
            let mean = all.iter().map(|v| v[j]).sum::<f64>() / n;
            let var = all.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / n;
            assert!((merged.mean().unwrap()[j] - mean).abs() <= 1e-10 * mean.abs().max(1.0));
            assert!((merged.variance().unwrap()[j] - var).abs() <= 1e-10 * var);
        }
        assert_eq!(merged.count(), 88);
    }

    #[test]
    fn dimension_checks() {
        let mut s = StatsSummary::new(StatsTag::Le, 9);
        assert!(s.push(&[1.0; 8]).is_err());
        assert!(s.merge(&StatsSummary::new(StatsTag::Ar, 3)).is_err());
    }
}
