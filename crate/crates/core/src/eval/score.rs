use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::{EventClass, MontageTag};

/// How a detection rate is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateKind {
    /// Correct epochs over all epochs.
    #[default]
    Pooled,
    /// Mean of the per-class recalls.
    Macro,
}

impl std::str::FromStr for RateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pooled" => Ok(RateKind::Pooled),
            "macro" => Ok(RateKind::Macro),
            other => Err(format!("unknown rate kind '{other}', expected pooled or macro")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub train_tag: Option<MontageTag>,
    pub eval_tag: Option<MontageTag>,
    pub correct: usize,
    pub total: usize,
    /// `confusion[reference][predicted]`, SEIZ first.
    pub confusion: [[usize; 2]; 2],
    /// Pooled detection rate, `correct / total`.
    pub rate: f64,
    /// Mean recall over the classes present in the reference.
    pub macro_rate: f64,
}

impl ScoreReport {
    pub fn with_tags(mut self, train: MontageTag, eval: MontageTag) -> Self {
        self.train_tag = Some(train);
        self.eval_tag = Some(eval);
        self
    }

    pub fn detection_rate(&self, kind: RateKind) -> f64 {
        match kind {
            RateKind::Pooled => self.rate,
            RateKind::Macro => self.macro_rate,
        }
    }

    /// Binomial standard error of the pooled rate.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.total as f64).sqrt()
    }

    pub fn count(&self, reference: EventClass, predicted: EventClass) -> usize {
        self.confusion[reference.index()][predicted.index()]
    }
}

/// Scores `(reference, predicted)` pairs.
pub fn score(predictions: &[(EventClass, EventClass)]) -> Result<ScoreReport, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut confusion = [[0usize; 2]; 2];
    for &(r, p) in predictions {
        confusion[r.index()][p.index()] += 1;
    }
    let correct = confusion[0][0] + confusion[1][1];
    let total = predictions.len();
    let recalls: Vec<f64> = confusion
        .iter()
        .enumerate()
        .filter(|(_, row)| row[0] + row[1] > 0)
        .map(|(i, row)| row[i] as f64 / (row[0] + row[1]) as f64)
        .collect();
    Ok(ScoreReport {
        train_tag: None,
        eval_tag: None,
        correct,
        total,
        confusion,
        rate: correct as f64 / total as f64,
        macro_rate: recalls.iter().sum::<f64>() / recalls.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use EventClass::{Bckg, Seiz};

    #[test]
    fn all_correct() {
        let r = score(&[(Seiz, Seiz), (Bckg, Bckg), (Bckg, Bckg)]).unwrap();
        assert_eq!(r.rate, 1.0);
        assert_eq!(r.macro_rate, 1.0);
        assert_eq!(r.confusion, [[1, 0], [0, 2]]);
    }

    #[test]
    fn pooled_and_macro_differ_on_imbalance() {
        let mut preds = vec![(Bckg, Bckg); 8];
        preds.push((Seiz, Bckg));
        preds.push((Seiz, Seiz));
        let r = score(&preds).unwrap();
        assert_eq!(r.rate, 0.9);
        assert_eq!(r.macro_rate, 0.75);
        assert_eq!(r.count(Seiz, Bckg), 1);
        assert_eq!(r.confusion.iter().flatten().sum::<usize>(), r.total);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(score(&[]), Err(EvalError::EmptyInput));
    }

    #[test]
    fn random_predictions_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 4000;
        let preds: Vec<_> = (0..n)
            .map(|i| {
                let r = if i % 2 == 0 { Seiz } else { Bckg };
                let p = if rng.random::<bool>() { Seiz } else { Bckg };
                (r, p)
            })
            .collect();
        let r = score(&preds).unwrap();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((r.rate - 0.5).abs() <= 3.0 * sigma, "{}", r.rate);
    }

    #[test]
    fn order_invariant() {
        let preds = vec![(Seiz, Bckg), (Bckg, Bckg), (Seiz, Seiz), (Bckg, Seiz)];
        let mut rev = preds.clone();
        rev.reverse();
        assert_eq!(score(&preds), score(&rev));
    }
}
