use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{log_sum_exp, HmmError};
use crate::EventClass;

/// Diagonal-covariance Gaussian mixture emitting one state's frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagGmm {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl DiagGmm {
    pub fn single(mean: Vec<f64>, variance: Vec<f64>) -> Self {
        DiagGmm {
            weights: vec![1.0],
            means: vec![mean],
            variances: vec![variance],
        }
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    /// Per-component constants for fast scoring.
    pub(crate) fn scorer(&self) -> GmmScorer {
        let comps = self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((&w, mean), var)| {
                let d = mean.len() as f64;
                let log_det: f64 = var.iter().map(|v| v.ln()).sum();
                ComponentScorer {
                    log_const: w.ln() - 0.5 * (d * (2.0 * PI).ln() + log_det),
                    mean: mean.clone(),
                    inv_var: var.iter().map(|v| 1.0 / v).collect(),
                }
            })
            .collect();
        GmmScorer { comps }
    }
}

pub(crate) struct ComponentScorer {
    log_const: f64,
    mean: Vec<f64>,
    inv_var: Vec<f64>,
}

pub(crate) struct GmmScorer {
    comps: Vec<ComponentScorer>,
}

impl GmmScorer {
    /// Weighted log density of each component at `x`, written into `out`.
    pub(crate) fn component_logs(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for c in &self.comps {
            if c.log_const == f64::NEG_INFINITY {
                out.push(f64::NEG_INFINITY);
                continue;
            }
            let q: f64 = x
                .iter()
                .zip(&c.mean)
                .zip(&c.inv_var)
                .map(|((x, m), iv)| (x - m) * (x - m) * iv)
                .sum();
            out.push(c.log_const - 0.5 * q);
        }
    }

    pub(crate) fn log_density(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        self.component_logs(x, scratch);
        log_sum_exp(scratch.iter().copied())
    }
}

/// What a model was trained on and how training went.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub montage_tags: Vec<String>,
    pub epochs: usize,
    pub frames: usize,
    /// Total log-likelihood per EM iteration, one list per mixture stage.
    pub history: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub class_tag: EventClass,
    pub dims: usize,
    /// Start-state probabilities.
    pub initial: Vec<f64>,
    /// Row-stochastic state transition matrix.
    pub transitions: Vec<Vec<f64>>,
    pub states: Vec<DiagGmm>,
    pub trained_on: TrainingMetadata,
}

impl HmmModel {
    /// Builds a model, checking only that shapes agree.
    pub fn new(
        class_tag: EventClass,
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
        states: Vec<DiagGmm>,
    ) -> Result<Self, HmmError> {
        let s = states.len();
        if s == 0 {
            return Err(HmmError::InvalidModel("no states".into()));
        }
        let dims = states[0].means.first().map_or(0, Vec::len);
        if dims == 0 {
            return Err(HmmError::InvalidModel("zero-dimensional emissions".into()));
        }
        if initial.len() != s || transitions.len() != s || transitions.iter().any(|r| r.len() != s) {
            return Err(HmmError::InvalidModel(format!("transition shape does not match {s} states")));
        }
        for (i, g) in states.iter().enumerate() {
            let m = g.weights.len();
            if m == 0 || g.means.len() != m || g.variances.len() != m {
                return Err(HmmError::InvalidModel(format!("state {i} has inconsistent mixture sizes")));
            }
            if g.means.iter().chain(&g.variances).any(|v| v.len() != dims) {
                return Err(HmmError::InvalidModel(format!("state {i} has inconsistent dimensions")));
            }
            if g.variances.iter().flatten().any(|&v| !(v > 0.0)) {
                return Err(HmmError::InvalidModel(format!("state {i} has non-positive variance")));
            }
        }
        Ok(HmmModel {
            class_tag,
            dims,
            initial,
            transitions,
            states,
            trained_on: TrainingMetadata::default(),
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Verifies stochasticity, left-to-right topology and the variance
    /// floor.
    pub fn check_invariants(&self, variance_floor: Option<&[f64]>) -> Result<(), HmmError> {
        let tol = 1e-9;
        let bad = |m: String| Err(HmmError::InvalidModel(m));
        if (self.initial.iter().sum::<f64>() - 1.0).abs() > tol {
            return bad("initial probabilities do not sum to 1".into());
        }
        for (i, row) in self.transitions.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > tol {
                return bad(format!("transition row {i} does not sum to 1"));
            }
            for (j, &p) in row.iter().enumerate() {
                if p < 0.0 || ((j < i || j > i + 1) && p != 0.0) {
                    return bad(format!("transition {i}->{j} = {p} breaks left-to-right topology"));
                }
            }
        }
        for (i, g) in self.states.iter().enumerate() {
            if (g.weights.iter().sum::<f64>() - 1.0).abs() > tol {
                return bad(format!("state {i} mixture weights do not sum to 1"));
            }
            if let Some(floor) = variance_floor {
                for var in &g.variances {
                    if var.iter().zip(floor).any(|(v, f)| v < f) {
                        return bad(format!("state {i} variance below floor"));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn log_transitions(&self) -> Vec<Vec<f64>> {
        self.transitions
            .iter()
            .map(|r| r.iter().map(|p| p.ln()).collect())
            .collect()
    }

    /// Log emission densities, `out[t * S + s]`.
    pub(crate) fn log_emissions(&self, frames: impl Iterator<Item = impl AsRef<[f64]>>) -> Vec<f64> {
        let scorers: Vec<GmmScorer> = self.states.iter().map(DiagGmm::scorer).collect();
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        for f in frames {
            for sc in &scorers {
                out.push(sc.log_density(f.as_ref(), &mut scratch));
            }
        }
        out
    }
}
