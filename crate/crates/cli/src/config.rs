use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use montage_core::eval::RateKind;
use montage_core::experiment::{Pipeline, SynthCorpus};
use montage_core::features::FeatureConfig;
use montage_core::hmm::TrainConfig;
use montage_core::montage::MontageSpec;
use montage_core::normalize::NormalizationConfig;
use montage_core::ReferenceScheme;

/// Experiment recipe, read from a TOML file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub rate: RateKind,
    /// Run the grid with and without normalization.
    pub compare_normalization: bool,
    pub pipeline: PipelineSection,
    pub train: TrainConfig,
    pub synth: Option<SynthCorpus>,
    pub split: Option<SplitSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub reference: Option<ReferenceScheme>,
    /// `none`, `tcp`, or a montage file path.
    pub montage: String,
    pub epoch_frames: usize,
    pub features: FeatureConfig,
    pub normalization: NormalizationConfig,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            reference: None,
            montage: "none".into(),
            epoch_frames: 10,
            features: FeatureConfig::default(),
            normalization: NormalizationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: Vec<RecordEntry>,
    pub eval: Vec<RecordEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordEntry {
    pub edf: PathBuf,
    pub labels: PathBuf,
    /// Overrides the reference inferred from channel labels.
    pub reference: Option<ReferenceScheme>,
    /// Overrides the patient id from the EDF header.
    pub patient: Option<String>,
}

impl ExperimentConfig {
    /// Parses `path`; relative paths inside are resolved against its
    /// directory and must exist.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base)?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) -> anyhow::Result<()> {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(out) = &mut self.output {
            fix(out);
        }
        if !matches!(self.pipeline.montage.as_str(), "none" | "tcp") {
            let mut p = PathBuf::from(&self.pipeline.montage);
            fix(&mut p);
            self.pipeline.montage = p.to_string_lossy().into_owned();
        }
        if let Some(split) = &mut self.split {
            for e in split.train.iter_mut().chain(split.eval.iter_mut()) {
                fix(&mut e.edf);
                fix(&mut e.labels);
            }
        }
        self.validate()
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.pipeline.features.validate()?;
        self.train.validate()?;
        if self.pipeline.epoch_frames == 0 {
            bail!("pipeline.epoch_frames must be at least 1");
        }
        if self.synth.is_some() && self.split.is_some() {
            bail!("config sets both [synth] and [split]; choose one corpus");
        }
        if let Some(split) = &self.split {
            for e in split.train.iter().chain(&split.eval) {
                for p in [&e.edf, &e.labels] {
                    if !p.exists() {
                        bail!("split references missing file {}", p.display());
                    }
                }
            }
        }
        let m = &self.pipeline.montage;
        if !matches!(m.as_str(), "none" | "tcp") && !Path::new(m).exists() {
            bail!("montage file {m} does not exist");
        }
        Ok(())
    }

    pub fn pipeline(&self) -> anyhow::Result<Pipeline> {
        Ok(Pipeline {
            reference: self.pipeline.reference,
            montage: load_montage(&self.pipeline.montage)?,
            features: self.pipeline.features.clone(),
            normalization: self.pipeline.normalization.clone(),
            epoch_frames: self.pipeline.epoch_frames,
        })
    }
}

/// Resolves a `--montage` value: `none`, `tcp`, or a montage file.
pub fn load_montage(name: &str) -> anyhow::Result<Option<MontageSpec>> {
    match name {
        "none" => Ok(None),
        "tcp" => Ok(Some(MontageSpec::tcp())),
        path => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading montage {path}"))?;
            let stem = Path::new(path).file_stem().map_or("custom".into(), |s| s.to_string_lossy());
            Ok(Some(MontageSpec::parse(stem, &text).with_context(|| format!("montage {path}"))?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_text() {
        let cfg: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.pipeline.epoch_frames, 10);
        assert_eq!(cfg.train.states, 3);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn nested_sections() {
        let text = r#"
            seed = 3
            rate = "macro"
            [pipeline]
            montage = "tcp"
            reference = "ar"
            [pipeline.normalization]
            mode = "cmn"
            [train]
            mixtures = 2
            [synth]
            train_records = 1
            [synth.ar_bias]
            gain = 0.25
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.rate, RateKind::Macro);
        assert_eq!(cfg.pipeline.reference, Some(ReferenceScheme::Ar));
        assert_eq!(cfg.train.mixtures, 2);
        let synth = cfg.synth.unwrap();
        assert_eq!(synth.ar_bias.gain, 0.25);
        assert_eq!(synth.eval_records, 2);
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = toml::from_str::<ExperimentConfig>("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn missing_split_file_rejected() {
        let text = "[[split.train]]\nedf = \"nope.edf\"\nlabels = \"nope.lbl\"\n";
        let mut cfg: ExperimentConfig = toml::from_str(text).unwrap();
        let err = cfg.resolve(Path::new("/nonexistent")).unwrap_err();
        assert!(err.to_string().contains("nope.edf"));
    }
}
