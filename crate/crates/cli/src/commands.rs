use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};

use montage_core::analysis::{compare_eigenvectors, pca, report_table, StatsSummary, StatsTag};
use montage_core::eval::{det_curve, score, RateKind};
use montage_core::experiment::{run_experiment, Corpus, CorpusRecord, Pipeline, SynthCorpus};
use montage_core::features::{parse_binary, parse_csv, to_binary, to_csv, FeatureSequence};
use montage_core::hmm::{
    classify, model_from_bytes, model_to_bytes, model_to_json, train_pair, ModelSet, TrainConfig,
};
use montage_core::ingest::{generate_synthetic, parse_edf, parse_labels, write_edf, LabelSet, Recording, SynthConfig};
use montage_core::{par, EventClass, ReferenceScheme};

use crate::config::{ExperimentConfig, RecordEntry};
use crate::Failure;

const BASE_DIMS: usize = 9;
const LABEL_EXT: &str = "lbl";

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Input)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Loads an EDF file, optionally forcing its reference tag.
pub fn load_recording(path: &Path, ref_tag: Option<ReferenceScheme>) -> Result<Recording, Failure> {
    let rec = parse_edf(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Input)?;
    Ok(match ref_tag {
        Some(tag) => rec.with_reference_scheme(tag),
        None => rec,
    })
}

pub fn load_labels(path: &Path) -> Result<LabelSet, Failure> {
    parse_labels(&read_text(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Input)
}

fn labels_for(edf: &Path) -> PathBuf {
    edf.with_extension(LABEL_EXT)
}

/// Sorted files in `dir` with extension `ext`.
fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, Failure> {
    let entries = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(Failure::Input)?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)))
        .collect();
    out.sort();
    Ok(out)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub struct FeaturesArgs<'a> {
    pub input: &'a Path,
    pub output: &'a Path,
    pub pipeline: Pipeline,
    pub ref_tag: Option<ReferenceScheme>,
    pub binary: bool,
}

pub fn features(args: FeaturesArgs) -> Result<(), Failure> {
    let rec = load_recording(args.input, args.ref_tag)?;
    let seqs = args
        .pipeline
        .features(&rec)
        .with_context(|| format!("processing {}", args.input.display()))
        .map_err(Failure::Input)?;
    let stem = args.input.file_stem().map_or("rec".into(), |s| s.to_string_lossy());
    let layout = args.pipeline.features.layout();
    for seq in &seqs {
        let name = format!("{stem}_{}", sanitize(&seq.channel_label));
        if args.binary {
            write(&args.output.join(format!("{name}.feat")), to_binary(seq))?;
        } else {
            write(&args.output.join(format!("{name}.csv")), to_csv(seq, &layout))?;
        }
    }
    println!("wrote {} feature files to {}", seqs.len(), args.output.display());
    Ok(())
}

/// Reads every CSV or binary feature dump in `dir`, sorted by name.
fn load_feature_dir(dir: &Path, frame_s: f64) -> Result<Vec<FeatureSequence>, Failure> {
    let mut paths = files_with_ext(dir, "csv")?;
    paths.extend(files_with_ext(dir, "feat")?);
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Input(anyhow!("no feature files (.csv or .feat) in {}", dir.display())));
    }
    par::try_map(&paths, |p| {
        let label = p.file_stem().map_or(String::new(), |s| s.to_string_lossy().into_owned());
        let seq = if p.extension().is_some_and(|e| e == "feat") {
            parse_binary(&label, frame_s, &fs::read(p)?).map_err(anyhow::Error::from)
        } else {
            parse_csv(&label, &fs::read_to_string(p)?).map_err(anyhow::Error::from)
        };
        seq.with_context(|| format!("reading {}", p.display()))
    })
    .map_err(Failure::Input)
}

fn base_vectors(seqs: &[FeatureSequence]) -> Result<Vec<&[f64]>, Failure> {
    if let Some(s) = seqs.iter().find(|s| s.dims() < BASE_DIMS) {
        return Err(Failure::Input(anyhow!(
            "{} has {} dims, need at least {BASE_DIMS}",
            s.channel_label,
            s.dims()
        )));
    }
    Ok(seqs.iter().flat_map(|s| s.frames().map(|f| &f[..BASE_DIMS])).collect())
}

fn summarize(seqs: &[FeatureSequence], tag: StatsTag) -> Result<StatsSummary, Failure> {
    let vectors = base_vectors(seqs)?;
    let chunks: Vec<&[&[f64]]> = vectors.chunks(4096).collect();
    let parts = par::try_map(&chunks, |c| StatsSummary::new(tag, BASE_DIMS).accumulate(c.iter().copied()))
        .map_err(|e| Failure::Internal(e.into()))?;
    let mut total = StatsSummary::new(tag, BASE_DIMS);
    for p in &parts {
        total = total.merge(p).map_err(|e| Failure::Internal(e.into()))?;
    }
    Ok(total)
}

pub fn stats(le: &Path, ar: &Path, output: Option<&Path>, frame_s: f64) -> Result<(), Failure> {
    let le_s = summarize(&load_feature_dir(le, frame_s)?, StatsTag::Le)?;
    let ar_s = summarize(&load_feature_dir(ar, frame_s)?, StatsTag::Ar)?;
    let global = le_s.merge(&ar_s).map_err(|e| Failure::Internal(e.into()))?.with_tag(StatsTag::Global);
    let table = report_table(&le_s, &ar_s, &global).map_err(|e| Failure::Internal(e.into()))?;
    match output {
        Some(path) => {
            write(path, table.to_csv())?;
            print!("{}", table.to_text());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

pub fn pca_report(le: &Path, ar: &Path, output: &Path, frame_s: f64) -> Result<(), Failure> {
    let le_seqs = load_feature_dir(le, frame_s)?;
    let ar_seqs = load_feature_dir(ar, frame_s)?;
    let decompose = |seqs: &[FeatureSequence]| -> Result<_, Failure> {
        pca(base_vectors(seqs)?).map_err(|e| Failure::Input(e.into()))
    };
    let (a, b) = (decompose(&le_seqs)?, decompose(&ar_seqs)?);
    let cmp = compare_eigenvectors(&a, &b).map_err(|e| Failure::Internal(e.into()))?;
    write(&output.join("explained_le.csv"), a.explained_csv())?;
    write(&output.join("explained_ar.csv"), b.explained_csv())?;
    write(&output.join("eigvec_compare.csv"), cmp.to_csv())?;
    write(&output.join("eigvec_amplitudes.dat"), cmp.to_gnuplot("LE", "AR"))?;
    println!("wrote PCA reports to {}", output.display());
    Ok(())
}

/// One recording per EDF in `dirs`, each with a same-stem label file.
fn load_dirs(dirs: &[PathBuf], ref_tag: Option<ReferenceScheme>) -> Result<Vec<CorpusRecord>, Failure> {
    let mut paths = Vec::new();
    for d in dirs {
        paths.extend(files_with_ext(d, "edf")?);
    }
    if paths.is_empty() {
        return Err(Failure::Input(anyhow!("no .edf files found")));
    }
    paths
        .iter()
        .map(|p| {
            Ok(CorpusRecord {
                recording: load_recording(p, ref_tag)?,
                labels: load_labels(&labels_for(p))?,
            })
        })
        .collect()
}

fn epochs_of(records: &[CorpusRecord], pipeline: &Pipeline) -> Result<Vec<montage_core::hmm::Epoch>, Failure> {
    let per = par::try_map(records, |r| {
        pipeline
            .epochs(&r.recording, &r.labels)
            .with_context(|| format!("processing {}", r.recording.id()))
    })
    .map_err(Failure::Input)?;
    Ok(per.into_iter().flatten().collect())
}

pub fn train(
    dirs: &[PathBuf],
    output: &Path,
    pipeline: &Pipeline,
    cfg: &TrainConfig,
    ref_tag: Option<ReferenceScheme>,
) -> Result<(), Failure> {
    let records = load_dirs(dirs, ref_tag)?;
    let epochs = epochs_of(&records, pipeline)?;
    let mut set = train_pair(&epochs, cfg).map_err(|e| match e {
        montage_core::hmm::HmmError::InsufficientData { .. } => Failure::Input(e.into()),
        other => Failure::Internal(other.into()),
    })?;
    let mut tags: Vec<String> = records.iter().map(|r| r.recording.reference_scheme().to_string()).collect();
    tags.sort();
    tags.dedup();
    for m in [&mut set.seiz, &mut set.bckg] {
        m.trained_on.montage_tags = tags.clone();
    }
    for (name, m) in [("seiz", &set.seiz), ("bckg", &set.bckg)] {
        write(&output.join(format!("{name}.hmm")), model_to_bytes(m))?;
        write(&output.join(format!("{name}.json")), model_to_json(m) + "\n")?;
    }
    println!(
        "trained on {} epochs ({} SEIZ, {} BCKG); models in {}",
        epochs.len(),
        set.seiz.trained_on.epochs,
        set.bckg.trained_on.epochs,
        output.display()
    );
    Ok(())
}

fn load_models(dir: &Path, dims: usize) -> Result<ModelSet, Failure> {
    let load = |name: &str| -> Result<_, Failure> {
        let path = dir.join(format!("{name}.hmm"));
        model_from_bytes(&read(&path)?, Some(dims))
            .with_context(|| format!("loading {}", path.display()))
            .map_err(Failure::Input)
    };
    Ok(ModelSet {
        seiz: load("seiz")?,
        bckg: load("bckg")?,
    })
}

pub fn classify_dirs(
    models: &Path,
    dirs: &[PathBuf],
    output: &Path,
    pipeline: &Pipeline,
    ref_tag: Option<ReferenceScheme>,
    rate: RateKind,
) -> Result<(), Failure> {
    let set = load_models(models, pipeline.features.layout().dims())?;
    let records = load_dirs(dirs, ref_tag)?;
    let rows = par::try_map(&records, |r| -> anyhow::Result<String> {
        let mut out = String::new();
        let epochs = pipeline.epochs(&r.recording, &r.labels)?;
        let mut index = std::collections::HashMap::<&str, usize>::new();
        for e in &epochs {
            let c = classify(&set, e)?;
            let k = index.entry(e.channel_label.as_str()).or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.recording.id(),
                e.channel_label,
                k,
                e.reference_class,
                c.class,
                c.margin
            );
            *k += 1;
        }
        Ok(out)
    })
    .map_err(Failure::Input)?;
    let mut csv = String::from("record,channel,epoch,reference,predicted,margin\n");
    rows.iter().for_each(|r| csv.push_str(r));
    write(output, &csv)?;
    let decisions = parse_decisions(&csv).map_err(Failure::Internal)?;
    let preds: Vec<_> = decisions.iter().map(|d| (d.0, d.1)).collect();
    let report = score(&preds).map_err(|e| Failure::Input(e.into()))?;
    println!(
        "{} epochs, detection rate {:.2}% ({})",
        report.total,
        100.0 * report.detection_rate(rate),
        serde_plain(rate)
    );
    Ok(())
}

fn serde_plain(rate: RateKind) -> &'static str {
    match rate {
        RateKind::Pooled => "pooled",
        RateKind::Macro => "macro",
    }
}

/// `(reference, predicted, margin)` rows of a classify output file.
fn parse_decisions(text: &str) -> anyhow::Result<Vec<(EventClass, EventClass, f64)>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| anyhow!("empty decisions file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| anyhow!("decisions header lacks '{name}'"))
    };
    let (ri, pi, mi) = (col("reference")?, col("predicted")?, col("margin")?);
    let mut out = Vec::new();
    for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| f.get(i).copied().ok_or_else(|| anyhow!("line {}: missing field", n + 1));
        let class = |s: &str| s.parse::<EventClass>().map_err(|c| anyhow!("line {}: unknown class '{c}'", n + 1));
        let margin: f64 = get(mi)?.parse().with_context(|| format!("line {}: bad margin", n + 1))?;
        out.push((class(get(ri)?)?, class(get(pi)?)?, margin));
    }
    Ok(out)
}

pub fn det(input: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let decisions = parse_decisions(&read_text(input)?)
        .with_context(|| format!("reading {}", input.display()))
        .map_err(Failure::Input)?;
    let margins: Vec<_> = decisions.iter().map(|d| (d.0, d.2)).collect();
    let curve = det_curve(&margins).map_err(|e| Failure::Input(e.into()))?;
    match output {
        Some(path) => {
            write(path, curve.to_csv())?;
            let eer = curve.equal_error_point();
            println!("{} points; near-equal-error point p_fa={} p_miss={}", curve.points.len(), eer.p_fa, eer.p_miss);
        }
        None => print!("{}", curve.to_csv()),
    }
    Ok(())
}

pub struct SynthArgs<'a> {
    pub output: &'a Path,
    pub records: usize,
    pub reference: ReferenceScheme,
    pub base: SynthConfig,
    pub seed: u64,
}

/// Writes `records` EDF files with label files. Channel labels carry the
/// reference suffix so the scheme survives a round trip.
pub fn synth(args: SynthArgs) -> Result<(), Failure> {
    let suffix = match args.reference {
        ReferenceScheme::Le => "-LE",
        ReferenceScheme::Ar => "-REF",
        _ => "",
    };
    let cfg = SynthConfig {
        reference: args.reference,
        ..args.base
    };
    let files = par::try_map_range(args.records, |k| -> Result<_, Failure> {
        let (rec, mut labels) = generate_synthetic(&cfg, args.seed.wrapping_add(k as u64))
            .map_err(|e| Failure::Input(e.into()))?;
        let stem = format!("{}-{k:03}", args.reference.as_str().to_ascii_lowercase());
        let channels = rec
            .channels()
            .iter()
            .map(|c| montage_core::ingest::ChannelSignal {
                label: format!("{}{suffix}", c.label),
                ..c.clone()
            })
            .collect();
        let rec = rec
            .with_channels(channels)
            .map_err(|e| Failure::Internal(e.into()))?
            .with_id(stem.clone())
            .with_patient_id(Some(format!("P{}{k:03}", args.reference.as_str())));
        labels.recording_id = stem.clone();
        let edf = write_edf(&rec, 1.0).map_err(|e| Failure::Input(e.into()))?;
        Ok((stem, edf, labels.to_text()))
    })?;
    for (stem, edf, labels) in &files {
        write(&args.output.join(format!("{stem}.edf")), edf)?;
        write(&args.output.join(format!("{stem}.{LABEL_EXT}")), labels)?;
    }
    println!("wrote {} recordings to {}", files.len(), args.output.display());
    Ok(())
}

fn load_entries(entries: &[RecordEntry]) -> Result<Vec<CorpusRecord>, Failure> {
    entries
        .iter()
        .map(|e| {
            let mut rec = load_recording(&e.edf, e.reference)?;
            if let Some(p) = &e.patient {
                rec = rec.with_patient_id(Some(p.clone()));
            }
            Ok(CorpusRecord {
                recording: rec,
                labels: load_labels(&e.labels)?,
            })
        })
        .collect()
}

pub fn experiment(cfg: &ExperimentConfig, seed: u64, output: &Path) -> Result<(), Failure> {
    let corpus = match (&cfg.synth, &cfg.split) {
        (_, Some(split)) => Corpus {
            train: load_entries(&split.train)?,
            eval: load_entries(&split.eval)?,
        },
        (synth, None) => synth
            .clone()
            .unwrap_or_else(SynthCorpus::default)
            .generate(seed)
            .map_err(|e| Failure::Input(e.into()))?,
    };
    let pipeline = cfg.pipeline().map_err(Failure::Input)?;
    let result = run_experiment(&corpus, &pipeline, &cfg.train, cfg.compare_normalization).map_err(|e| {
        let err = anyhow::Error::from(e).context("running experiment");
        Failure::Input(err)
    })?;
    for (name, contents) in result.reports(cfg.rate) {
        write(&output.join(name), contents)?;
    }
    print!("{}", result.grid.to_csv(cfg.rate));
    Ok(())
}

pub fn ensure_dir_arg(path: &Path) -> anyhow::Result<()> {
    if path.exists() && !path.is_dir() {
        bail!("{} exists and is not a directory", path.display());
    }
    Ok(())
}
