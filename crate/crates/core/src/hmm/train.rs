use serde::{Deserialize, Serialize};

use super::model::GmmScorer;
use super::{log_sum_exp, DiagGmm, Epoch, HmmError, HmmModel, ModelSet, TrainingMetadata};
use crate::{par, EventClass};

const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Emitting states, left to right.
    pub states: usize,
    /// Gaussians per state after the last split.
    pub mixtures: usize,
    /// EM iterations per mixture stage.
    pub max_iterations: usize,
    /// Relative log-likelihood gain below which a stage stops.
    pub tolerance: f64,
    pub min_epochs: usize,
    /// Variance floor as a fraction of the global per-dimension variance.
    pub variance_floor_scale: f64,
    /// Absolute lower bound on the variance floor.
    pub min_variance: f64,
    /// Mean perturbation used when splitting, in standard deviations.
    pub split_perturbation: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            states: 3,
            mixtures: 4,
            max_iterations: 50,
            tolerance: 1e-5,
            min_epochs: 2,
            variance_floor_scale: 1e-3,
            min_variance: 1e-6,
            split_perturbation: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HmmError> {
        let bad = |m: &str| Err(HmmError::InvalidConfig(m.into()));
        if self.states == 0 {
            return bad("states must be at least 1");
        }
        if self.mixtures == 0 {
            return bad("mixtures must be at least 1");
        }
        if !(self.tolerance >= 0.0) {
            return bad("tolerance must be non-negative");
        }
        if !(self.variance_floor_scale >= 0.0) || !(self.min_variance > 0.0) {
            return bad("variance floor must be positive");
        }
        if !(self.split_perturbation > 0.0) {
            return bad("split_perturbation must be positive");
        }
        Ok(())
    }
}

/// Per-dimension variance floor used by [`train`] for these epochs.
pub fn variance_floor(epochs: &[Epoch], cfg: &TrainConfig) -> Vec<f64> {
    let (_, var) = global_moments(epochs);
    var.iter()
        .map(|v| (cfg.variance_floor_scale * v).max(cfg.min_variance))
        .collect()
}

fn global_moments(epochs: &[Epoch]) -> (Vec<f64>, Vec<f64>) {
    let d = epochs.first().map_or(0, Epoch::dims);
    let mut n = 0.0;
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for x in epochs.iter().flat_map(Epoch::frames) {
        n += 1.0;
        for j in 0..d {
            let delta = x[j] - mean[j];
            mean[j] += delta / n;
            m2[j] += delta * (x[j] - mean[j]);
        }
    }
    let var = m2.iter().map(|v| if n > 0.0 { v / n } else { 0.0 }).collect();
    (mean, var)
}

/// Trains one class model: flat start, Baum-Welch, then repeated mixture
/// splitting until `cfg.mixtures` Gaussians per state.
pub fn train(epochs: &[Epoch], class_tag: EventClass, cfg: &TrainConfig) -> Result<HmmModel, HmmError> {
    cfg.validate()?;
    if epochs.len() < cfg.min_epochs.max(1) {
        return Err(HmmError::InsufficientData {
            class: class_tag,
            required: cfg.min_epochs.max(1),
            found: epochs.len(),
        });
    }
    let dims = epochs[0].dims();
    for e in epochs {
        if e.dims() != dims {
            return Err(HmmError::DimensionMismatch {
                expected: dims,
                found: e.dims(),
            });
        }
        if e.is_empty() {
            return Err(HmmError::EmptyEpoch);
        }
    }

    let floor = variance_floor(epochs, cfg);
    let mut model = flat_start(epochs, class_tag, cfg.states, &floor)?;
    let mut history = Vec::new();
    let mut components = 1;
    loop {
        history.push(run_em(&mut model, epochs, cfg, &floor)?);
        if components >= cfg.mixtures {
            break;
        }
        components = (components * 2).min(cfg.mixtures);
        for g in &mut model.states {
            split(g, components, cfg.split_perturbation, &floor);
        }
    }
    model.trained_on = TrainingMetadata {
        montage_tags: Vec::new(),
        epochs: epochs.len(),
        frames: epochs.iter().map(Epoch::len).sum(),
        history,
    };
    Ok(model)
}

/// Trains SEIZ and BCKG models from epochs carrying both labels.
pub fn train_pair(epochs: &[Epoch], cfg: &TrainConfig) -> Result<ModelSet, HmmError> {
    let pick = |c: EventClass| -> Vec<Epoch> { epochs.iter().filter(|e| e.reference_class == c).cloned().collect() };
    Ok(ModelSet {
        seiz: train(&pick(EventClass::Seiz), EventClass::Seiz, cfg)?,
        bckg: train(&pick(EventClass::Bckg), EventClass::Bckg, cfg)?,
    })
}

/// Uniform segmentation: each epoch is cut into `states` equal runs, state
/// means come from their runs and every state starts from the global
/// variance.
fn flat_start(epochs: &[Epoch], class_tag: EventClass, states: usize, floor: &[f64]) -> Result<HmmModel, HmmError> {
    let d = floor.len();
    let (global_mean, global_var) = global_moments(epochs);
    let mut sums = vec![vec![0.0; d]; states];
    let mut counts = vec![0usize; states];
    let mut frames = 0usize;
    for e in epochs {
        let t_len = e.len();
        frames += t_len;
        for (t, x) in e.frames().enumerate() {
            let s = t * states / t_len;
            counts[s] += 1;
            for (acc, v) in sums[s].iter_mut().zip(x) {
                *acc += v;
            }
        }
    }
    let var: Vec<f64> = global_var.iter().zip(floor).map(|(v, f)| v.max(*f)).collect();
    let gmms = sums
        .into_iter()
        .zip(&counts)
        .map(|(sum, &c)| {
            let mean = if c == 0 {
                global_mean.clone()
            } else {
                sum.iter().map(|v| v / c as f64).collect()
            };
            DiagGmm::single(mean, var.clone())
        })
        .collect();

    let run = frames as f64 / (epochs.len() * states) as f64;
    let stay = (1.0 - 1.0 / run.max(1.0)).clamp(0.1, 0.9);
    let transitions = (0..states)
        .map(|i| {
            let mut row = vec![0.0; states];
            if i + 1 < states {
                row[i] = stay;
                row[i + 1] = 1.0 - stay;
            } else {
                row[i] = 1.0;
            }
            row
        })
        .collect();
    let mut initial = vec![0.0; states];
    initial[0] = 1.0;
    HmmModel::new(class_tag, initial, transitions, gmms)
}

/// Sufficient statistics of one E-step. First and second moments are
/// centred on the current means to keep the variance update stable.
#[derive(Clone)]
struct Accumulator {
    log_likelihood: f64,
    initial: Vec<f64>,
    transitions: Vec<Vec<f64>>,
    occupancy: Vec<Vec<f64>>,
    first: Vec<Vec<Vec<f64>>>,
    second: Vec<Vec<Vec<f64>>>,
}

impl Accumulator {
    fn new(model: &HmmModel) -> Self {
        let s = model.num_states();
        let d = model.dims;
        let per_comp = |v: f64| -> Vec<Vec<Vec<f64>>> {
            model
                .states
                .iter()
                .map(|g| vec![vec![v; d]; g.components()])
                .collect()
        };
        Accumulator {
            log_likelihood: 0.0,
            initial: vec![0.0; s],
            transitions: vec![vec![0.0; s]; s],
            occupancy: model.states.iter().map(|g| vec![0.0; g.components()]).collect(),
            first: per_comp(0.0),
            second: per_comp(0.0),
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.log_likelihood += other.log_likelihood;
        add(&mut self.initial, &other.initial);
        for (a, b) in self.transitions.iter_mut().zip(&other.transitions) {
            add(a, b);
        }
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            add(a, b);
        }
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            for (a, b) in a.iter_mut().zip(b) {
                add(a, b);
            }
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            for (a, b) in a.iter_mut().zip(b) {
                add(a, b);
            }
        }
    }
}

fn add(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

struct Prepared<'a> {
    model: &'a HmmModel,
    log_a: Vec<Vec<f64>>,
    log_pi: Vec<f64>,
    scorers: Vec<GmmScorer>,
}

fn accumulate_epoch(p: &Prepared, epoch: &Epoch, acc: &mut Accumulator) {
    let s = p.model.num_states();
    let n = epoch.len();
    let mut comp_logs: Vec<Vec<f64>> = Vec::with_capacity(n * s);
    let mut b = vec![0.0; n * s];
    let mut scratch = Vec::new();
    for (t, x) in epoch.frames().enumerate() {
        for (i, sc) in p.scorers.iter().enumerate() {
            sc.component_logs(x, &mut scratch);
            b[t * s + i] = log_sum_exp(scratch.iter().copied());
            comp_logs.push(scratch.clone());
        }
    }

    let mut alpha = vec![f64::NEG_INFINITY; n * s];
    for i in 0..s {
        alpha[i] = p.log_pi[i] + b[i];
    }
    for t in 1..n {
        for j in 0..s {
            alpha[t * s + j] = log_sum_exp((0..s).map(|i| alpha[(t - 1) * s + i] + p.log_a[i][j])) + b[t * s + j];
        }
    }
    let mut beta = vec![0.0; n * s];
    for t in (0..n - 1).rev() {
        for i in 0..s {
            beta[t * s + i] =
                log_sum_exp((0..s).map(|j| p.log_a[i][j] + b[(t + 1) * s + j] + beta[(t + 1) * s + j]));
        }
    }
    let ll = log_sum_exp(alpha[(n - 1) * s..].iter().copied());
    acc.log_likelihood += ll;

    for (t, x) in epoch.frames().enumerate() {
        for i in 0..s {
            let gamma = (alpha[t * s + i] + beta[t * s + i] - ll).exp();
            if gamma == 0.0 {
                continue;
            }
            if t == 0 {
                acc.initial[i] += gamma;
            }
            let logs = &comp_logs[t * s + i];
            let g = &p.model.states[i];
            for (m, &lc) in logs.iter().enumerate() {
                let r = gamma * (lc - b[t * s + i]).exp();
                if r == 0.0 {
                    continue;
                }
                acc.occupancy[i][m] += r;
                let mean = &g.means[m];
                let (f, q) = (&mut acc.first[i][m], &mut acc.second[i][m]);
                for k in 0..x.len() {
                    let dx = x[k] - mean[k];
                    f[k] += r * dx;
                    q[k] += r * dx * dx;
                }
            }
        }
        if t + 1 < n {
            for i in 0..s {
                for j in 0..s {
                    if p.log_a[i][j] == f64::NEG_INFINITY {
                        continue;
                    }
                    let xi = (alpha[t * s + i] + p.log_a[i][j] + b[(t + 1) * s + j] + beta[(t + 1) * s + j] - ll).exp();
                    acc.transitions[i][j] += xi;
                }
            }
        }
    }
}

fn e_step(model: &HmmModel, epochs: &[Epoch]) -> Accumulator {
    let prepared = Prepared {
        model,
        log_a: model.log_transitions(),
        log_pi: model.initial.iter().map(|p| p.ln()).collect(),
        scorers: model.states.iter().map(DiagGmm::scorer).collect(),
    };
    let chunks: Vec<&[Epoch]> = epochs.chunks(CHUNK).collect();
    let partial = par::map(&chunks, |chunk| {
        let mut acc = Accumulator::new(model);
        for e in *chunk {
            accumulate_epoch(&prepared, e, &mut acc);
        }
        acc
    });
    let mut total = Accumulator::new(model);
    for a in &partial {
        total.merge(a);
    }
    total
}

fn m_step(model: &mut HmmModel, acc: &Accumulator, floor: &[f64]) {
    let init_total: f64 = acc.initial.iter().sum();
    if init_total > 0.0 {
        model.initial = acc.initial.iter().map(|v| v / init_total).collect();
    }
    for (row, counts) in model.transitions.iter_mut().zip(&acc.transitions) {
        let total: f64 = counts.iter().sum();
        if total > 0.0 {
            *row = counts.iter().map(|v| v / total).collect();
        }
    }
    for (i, g) in model.states.iter_mut().enumerate() {
        let occ = &acc.occupancy[i];
        let state_total: f64 = occ.iter().sum();
        if state_total <= 0.0 {
            continue;
        }
        for m in 0..g.components() {
            g.weights[m] = occ[m] / state_total;
            if occ[m] <= 0.0 {
                continue;
            }
            let (f, q) = (&acc.first[i][m], &acc.second[i][m]);
            for k in 0..floor.len() {
                let shift = f[k] / occ[m];
                g.means[m][k] += shift;
                g.variances[m][k] = (q[k] / occ[m] - shift * shift).max(floor[k]);
            }
        }
    }
}

/// Runs Baum-Welch on `model` and returns the log-likelihood of each
/// iterate, starting with the incoming parameters.
fn run_em(model: &mut HmmModel, epochs: &[Epoch], cfg: &TrainConfig, floor: &[f64]) -> Result<Vec<f64>, HmmError> {
    let mut history = Vec::new();
    for iteration in 0..=cfg.max_iterations {
        let acc = e_step(model, epochs);
        let ll = acc.log_likelihood;
        if !ll.is_finite() {
            return Err(HmmError::NonFiniteLikelihood { iteration });
        }
        let converged = history
            .last()
            .is_some_and(|&prev: &f64| (ll - prev) <= cfg.tolerance * prev.abs());
        history.push(ll);
        if converged || iteration == cfg.max_iterations {
            break;
        }
        m_step(model, &acc, floor);
    }
    Ok(history)
}

/// Grows `g` to `target` components by splitting the heaviest ones along
/// their standard deviation.
fn split(g: &mut DiagGmm, target: usize, perturbation: f64, floor: &[f64]) {
    while g.components() < target {
        let heaviest = (0..g.components())
            .max_by(|&a, &b| g.weights[a].total_cmp(&g.weights[b]).then(b.cmp(&a)))
            .expect("mixture has components");
        let var: Vec<f64> = g.variances[heaviest].iter().zip(floor).map(|(v, f)| v.max(*f)).collect();
        let mean = g.means[heaviest].clone();
        let offset: Vec<f64> = var.iter().map(|v| perturbation * v.sqrt()).collect();
        let w = g.weights[heaviest] / 2.0;
        g.weights[heaviest] = w;
        g.means[heaviest] = mean.iter().zip(&offset).map(|(m, o)| m - o).collect();
        g.variances[heaviest] = var.clone();
        g.weights.push(w);
        g.means.push(mean.iter().zip(&offset).map(|(m, o)| m + o).collect());
        g.variances.push(var);
    }
}
