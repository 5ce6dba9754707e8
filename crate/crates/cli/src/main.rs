//! `montage-lab`: EEG montage experiments from the command line.
//!
//! Exit codes: 0 on success, 1 on internal errors, 2 on input or
//! validation errors (bad files, missing electrodes, invalid config).

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use montage_core::eval::RateKind;
use montage_core::experiment::Pipeline;
use montage_core::ingest::MontageBias;
use montage_core::normalize::NormalizationMode;
use montage_core::ReferenceScheme;

use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "montage-lab", version, about = "EEG montage analysis: features, statistics, PCA, GMM-HMM detection and DET scoring")]
struct Cli {
    /// Seed for synthetic data; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Experiment/pipeline config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Montage: none, tcp, or a montage file of `LABEL: POS -- NEG` lines.
    #[arg(long)]
    montage: Option<String>,

    /// Re-reference to le, ar or cv before the montage.
    #[arg(long = "ref")]
    reference: Option<ReferenceScheme>,

    /// Override the reference inferred from channel labels.
    #[arg(long)]
    ref_tag: Option<ReferenceScheme>,

    /// Feature normalization: none, cmn or cmvn.
    #[arg(long)]
    normalize: Option<NormalizationMode>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract per-channel feature dumps from an EDF file.
    Features {
        input: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Write binary `.feat` dumps instead of CSV.
        #[arg(long)]
        binary: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Per-feature mean/variance table for LE and AR feature directories.
    Stats {
        #[arg(long)]
        le: PathBuf,
        #[arg(long)]
        ar: PathBuf,
        /// CSV output; the table goes to stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Explained variance and eigenvector comparison for LE and AR features.
    Pca {
        #[arg(long)]
        le: PathBuf,
        #[arg(long)]
        ar: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train SEIZ and BCKG models from EDF files with `.lbl` label files.
    Train {
        /// Directories of `.edf` + `.lbl` pairs.
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Classify every labelled epoch and write per-epoch decisions.
    Classify {
        /// Directory holding `seiz.hmm` and `bckg.hmm`.
        #[arg(long)]
        models: PathBuf,
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// pooled or macro.
        #[arg(long, default_value = "pooled")]
        rate: RateKind,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// DET curve from a classify output file.
    Det {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the train/eval montage grid described by the config.
    Experiment {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write synthetic EDF recordings with label files.
    Synth {
        #[arg(long, default_value_t = 4)]
        records: usize,
        /// Reference tag: le or ar.
        #[arg(long = "ref", default_value = "le")]
        reference: ReferenceScheme,
        /// Signal gain applied to every channel.
        #[arg(long)]
        gain: Option<f64>,
        /// Offset added to every channel, in microvolts.
        #[arg(long)]
        offset: Option<f64>,
        /// Recording length in seconds.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Error classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl Failure {
    fn report(&self) -> (u8, &anyhow::Error) {
        match self {
            Failure::Input(e) => (2, e),
            Failure::Internal(e) => (1, e),
        }
    }
}

fn pipeline(cfg: &ExperimentConfig, args: &PipelineArgs) -> Result<Pipeline, Failure> {
    let mut p = cfg.pipeline().map_err(Failure::Input)?;
    if let Some(m) = &args.montage {
        p.montage = config::load_montage(m).map_err(Failure::Input)?;
    }
    if let Some(r) = args.reference {
        p.reference = Some(r);
    }
    if let Some(mode) = args.normalize {
        p.normalization.mode = mode;
    }
    Ok(p)
}

fn output_dir(path: &Path) -> Result<&Path, Failure> {
    commands::ensure_dir_arg(path).map_err(Failure::Input)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Input(anyhow::anyhow!("--jobs must be at least 1")));
        }
        montage_core::par::set_jobs(jobs);
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(Failure::Input)?,
        None => ExperimentConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let frame_s = cfg.pipeline.features.frame_s;

    match cli.command {
        Command::Features {
            input,
            pipeline: pargs,
            binary,
            output,
        } => commands::features(commands::FeaturesArgs {
            input: &input,
            output: output_dir(&output)?,
            pipeline: pipeline(&cfg, &pargs)?,
            ref_tag: pargs.ref_tag,
            binary,
        }),
        Command::Stats { le, ar, output } => commands::stats(&le, &ar, output.as_deref(), frame_s),
        Command::Pca { le, ar, output } => commands::pca_report(&le, &ar, output_dir(&output)?, frame_s),
        Command::Train {
            data,
            pipeline: pargs,
            output,
        } => commands::train(&data, output_dir(&output)?, &pipeline(&cfg, &pargs)?, &cfg.train, pargs.ref_tag),
        Command::Classify {
            models,
            data,
            pipeline: pargs,
            rate,
            output,
        } => commands::classify_dirs(&models, &data, &output, &pipeline(&cfg, &pargs)?, pargs.ref_tag, rate),
        Command::Det { input, output } => commands::det(&input, output.as_deref()),
        Command::Experiment { output } => {
            let out = output
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| Failure::Input(anyhow::anyhow!("no output directory: pass -o or set `output`")))?;
            commands::experiment(&cfg, seed, output_dir(&out)?)
        }
        Command::Synth {
            records,
            reference,
            gain,
            offset,
            duration,
            output,
        } => {
            let mut base = cfg.synth.clone().map(|s| s.base).unwrap_or_default();
            let default_bias = MontageBias::default();
            base.bias = MontageBias {
                gain: gain.unwrap_or(default_bias.gain),
                offset: offset.unwrap_or(default_bias.offset),
            };
            if let Some(d) = duration {
                base.duration_s = d;
            }
            commands::synth(commands::SynthArgs {
                output: output_dir(&output)?,
                records,
                reference,
                base,
                seed,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, err) = f.report();
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
