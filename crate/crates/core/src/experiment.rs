//! End-to-end runs: recordings to epochs, and the train/eval montage grid
//! over a corpus.

use serde::{Deserialize, Serialize};

use crate::eval::{comparison_csv, run_matrix, MatrixResult, RateKind, TaggedEpochs};
use crate::features::{extract, FeatureConfig, FeatureSequence};
use crate::hmm::{epochs_from_sequence, Epoch, TrainConfig};
use crate::ingest::{generate_synthetic, LabelSet, MontageBias, Recording, SynthConfig};
use crate::montage::{apply_montage, rereference, MontageSpec};
use crate::normalize::{normalize_recording, NormalizationConfig, NormalizationMode};
use crate::{par, MontageTag, ReferenceScheme, Result};

/// Recording-to-epochs processing chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    /// Re-reference to this scheme before the montage, if set.
    pub reference: Option<ReferenceScheme>,
    /// Bipolar montage; `None` keeps the referential channels.
    pub montage: Option<MontageSpec>,
    pub features: FeatureConfig,
    pub normalization: NormalizationConfig,
    /// Frames per classification epoch.
    pub epoch_frames: usize,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline {
            reference: None,
            montage: None,
            features: FeatureConfig::default(),
            normalization: NormalizationConfig::default(),
            epoch_frames: 10,
        }
    }
}

impl Pipeline {
    /// The recording after re-referencing and the montage.
    pub fn derive(&self, rec: &Recording) -> Result<Recording> {
        let mut rec = match self.reference {
            Some(scheme) => rereference(rec, scheme)?,
            None => rec.clone(),
        };
        if let Some(spec) = &self.montage {
            rec = apply_montage(&rec, spec)?;
        }
        Ok(rec)
    }

    /// Normalized feature sequences, one per derived channel.
    pub fn features(&self, rec: &Recording) -> Result<Vec<FeatureSequence>> {
        let seqs = extract(&self.derive(rec)?, &self.features)?;
        Ok(normalize_recording(&seqs, &self.normalization)?)
    }

    /// Labelled epochs from every channel, channel by channel.
    pub fn epochs(&self, rec: &Recording, labels: &LabelSet) -> Result<Vec<Epoch>> {
        Ok(self
            .features(rec)?
            .iter()
            .flat_map(|s| epochs_from_sequence(s, labels, self.epoch_frames))
            .collect())
    }

    fn with_normalization(&self, mode: NormalizationMode) -> Pipeline {
        let mut p = self.clone();
        p.normalization.mode = mode;
        p
    }
}

/// One recording of a corpus with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    pub recording: Recording,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub train: Vec<CorpusRecord>,
    pub eval: Vec<CorpusRecord>,
}

/// Synthetic corpus with a per-condition distortion standing in for the
/// reference-dependent differences of real LE and AR recordings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthCorpus {
    pub base: SynthConfig,
    /// Training recordings per condition.
    pub train_records: usize,
    /// Evaluation recordings per condition.
    pub eval_records: usize,
    pub le_bias: MontageBias,
    pub ar_bias: MontageBias,
}

impl Default for SynthCorpus {
    fn default() -> Self {
        SynthCorpus {
            base: SynthConfig::default(),
            train_records: 4,
            eval_records: 2,
            le_bias: MontageBias::default(),
            ar_bias: MontageBias::default(),
        }
    }
}

impl SynthCorpus {
    /// Generates the corpus. Every recording has its own seed, record id
    /// and patient id, so train and eval splits are disjoint.
    pub fn generate(&self, seed: u64) -> Result<Corpus> {
        let mut jobs = Vec::new();
        for (split, count) in [("train", self.train_records), ("eval", self.eval_records)] {
            for (scheme, bias) in [(ReferenceScheme::Le, self.le_bias), (ReferenceScheme::Ar, self.ar_bias)] {
                for k in 0..count {
                    jobs.push((split, scheme, bias, k));
                }
            }
        }
        let records = par::try_map(&jobs, |&(split, scheme, bias, k)| -> Result<(bool, CorpusRecord)> {
            let cfg = SynthConfig {
                bias,
                reference: scheme,
                ..self.base.clone()
            };
            let id = format!("{}-{split}-{k:03}", scheme.as_str().to_ascii_lowercase());
            let rec_seed = record_seed(seed, &id);
            let (rec, mut labels) = generate_synthetic(&cfg, rec_seed)?;
            let rec = rec.with_id(id.clone()).with_patient_id(Some(format!("patient-{id}")));
            labels.recording_id = id;
            Ok((split == "train", CorpusRecord { recording: rec, labels }))
        })?;
        let mut corpus = Corpus::default();
        for (train, r) in records {
            if train {
                corpus.train.push(r);
            } else {
                corpus.eval.push(r);
            }
        }
        Ok(corpus)
    }
}

/// FNV-1a of the record id, mixed with the corpus seed.
fn record_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs `pipeline` over every record.
pub fn corpus_epochs(records: &[CorpusRecord], pipeline: &Pipeline) -> Result<Vec<TaggedEpochs>> {
    par::try_map(records, |r| {
        Ok(TaggedEpochs {
            record_id: r.recording.id().to_string(),
            patient_id: r.recording.patient_id().map(String::from),
            scheme: r.recording.reference_scheme(),
            epochs: pipeline.epochs(&r.recording, &r.labels)?,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Grid under the pipeline as configured.
    pub grid: MatrixResult,
    /// Grid without normalization, when a comparison was requested.
    pub raw: Option<MatrixResult>,
}

impl ExperimentResult {
    /// Report files as `(name, contents)` pairs, in a fixed order.
    pub fn reports(&self, kind: RateKind) -> Vec<(String, String)> {
        let mut out = vec![
            ("grid.csv".to_string(), self.grid.to_csv(kind)),
            ("grid.json".to_string(), self.grid.to_json(kind)),
        ];
        for c in &self.grid.cells {
            out.push((format!("det_{}_{}.csv", file_tag(c.train_tag), file_tag(c.eval_tag)), c.det.to_csv()));
        }
        if let Some(raw) = &self.raw {
            out.push(("grid_raw.csv".to_string(), raw.to_csv(kind)));
            out.push(("normalization.csv".to_string(), comparison_csv(raw, &self.grid, kind)));
        }
        out
    }
}

fn file_tag(tag: MontageTag) -> &'static str {
    match tag {
        MontageTag::Le => "le",
        MontageTag::Ar => "ar",
        MontageTag::LeAr => "lear",
    }
}

/// Trains and scores the 3x3 grid. With `compare_normalization`, the grid
/// is also run without normalization; a pipeline configured without
/// normalization is then compared against CMN.
pub fn run_experiment(
    corpus: &Corpus,
    pipeline: &Pipeline,
    train: &TrainConfig,
    compare_normalization: bool,
) -> Result<ExperimentResult> {
    let run = |p: &Pipeline| -> Result<MatrixResult> {
        let tr = corpus_epochs(&corpus.train, p)?;
        let ev = corpus_epochs(&corpus.eval, p)?;
        Ok(run_matrix(&tr, &ev, train)?)
    };
    if !compare_normalization {
        return Ok(ExperimentResult {
            grid: run(pipeline)?,
            raw: None,
        });
    }
    let normalized = match pipeline.normalization.mode {
        NormalizationMode::None => pipeline.with_normalization(NormalizationMode::Cmn),
        _ => pipeline.clone(),
    };
    Ok(ExperimentResult {
        grid: run(&normalized)?,
        raw: Some(run(&pipeline.with_normalization(NormalizationMode::None))?),
    })
}
