use serde::{Deserialize, Serialize};

use super::{log_sum_exp, Epoch, HmmError, HmmModel};
use crate::EventClass;

fn check(model: &HmmModel, epoch: &Epoch) -> Result<(), HmmError> {
    if epoch.dims() != model.dims {
        return Err(HmmError::DimensionMismatch {
            expected: model.dims,
            found: epoch.dims(),
        });
    }
    if epoch.is_empty() {
        return Err(HmmError::EmptyEpoch);
    }
    Ok(())
}

/// `log p(epoch | model)` by the forward recursion in the log domain.
pub fn log_forward(model: &HmmModel, epoch: &Epoch) -> Result<f64, HmmError> {
    check(model, epoch)?;
    let s = model.num_states();
    let log_a = model.log_transitions();
    let b = model.log_emissions(epoch.frames());
    let mut alpha: Vec<f64> = (0..s).map(|i| model.initial[i].ln() + b[i]).collect();
    let mut next = vec![0.0; s];
    for t in 1..epoch.len() {
        for j in 0..s {
            next[j] = log_sum_exp((0..s).map(|i| alpha[i] + log_a[i][j])) + b[t * s + j];
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    Ok(log_sum_exp(alpha.iter().copied()))
}

/// Most probable state path and its log score.
///
/// Among equally scoring paths the lexicographically smallest state
/// sequence is returned: best-continuation scores are computed backwards,
/// then the path is chosen forwards taking the lowest state index on ties.
pub fn viterbi(model: &HmmModel, epoch: &Epoch) -> Result<(Vec<usize>, f64), HmmError> {
    check(model, epoch)?;
    let s = model.num_states();
    let n = epoch.len();
    let log_a = model.log_transitions();
    let b = model.log_emissions(epoch.frames());

    // tail[t * s + i]: best log score of frames t+1.. given state i at t
    let mut tail = vec![0.0; n * s];
    for t in (0..n - 1).rev() {
        for i in 0..s {
            tail[t * s + i] = (0..s)
                .map(|j| log_a[i][j] + b[(t + 1) * s + j] + tail[(t + 1) * s + j])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }

    let argmax = |scores: &mut dyn Iterator<Item = f64>| {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, v) in scores.enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    };
    let (mut state, score) = argmax(&mut (0..s).map(|i| model.initial[i].ln() + b[i] + tail[i]));
    let mut path = Vec::with_capacity(n);
    path.push(state);
    for t in 1..n {
        let prev = state;
        state = argmax(&mut (0..s).map(|j| log_a[prev][j] + b[t * s + j] + tail[t * s + j])).0;
        path.push(state);
    }
    Ok((path, score))
}

/// One SEIZ and one BCKG model over the same feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    pub seiz: HmmModel,
    pub bckg: HmmModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: EventClass,
    /// `ll_seiz - ll_bckg`.
    pub margin: f64,
    pub ll_seiz: f64,
    pub ll_bckg: f64,
}

/// Picks the class with the larger forward log-likelihood; exact ties go to
/// BCKG.
pub fn classify(models: &ModelSet, epoch: &Epoch) -> Result<Classification, HmmError> {
    if models.seiz.dims != models.bckg.dims {
        return Err(HmmError::DimensionMismatch {
            expected: models.seiz.dims,
            found: models.bckg.dims,
        });
    }
    let ll_seiz = log_forward(&models.seiz, epoch)?;
    let ll_bckg = log_forward(&models.bckg, epoch)?;
    let class = if ll_seiz > ll_bckg {
        EventClass::Seiz
    } else {
        EventClass::Bckg
    };
    Ok(Classification {
        class,
        margin: ll_seiz - ll_bckg,
        ll_seiz,
        ll_bckg,
    })
}
