use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{det_curve, score, DetCurve, EvalError, RateKind, ScoreReport};
use crate::hmm::{classify, train_pair, Epoch, ModelSet, TrainConfig};
use crate::{par, MontageTag, ReferenceScheme};

/// Epochs of one recording together with its identity and reference.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedEpochs {
    pub record_id: String,
    pub patient_id: Option<String>,
    pub scheme: ReferenceScheme,
    pub epochs: Vec<Epoch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub train_tag: MontageTag,
    pub eval_tag: MontageTag,
    pub report: ScoreReport,
    pub det: DetCurve,
}

/// The 3x3 train/eval grid, row-major with rows = train and columns = eval,
/// both in the order LE, AR, LE+AR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixResult {
    pub cells: Vec<CellResult>,
}

impl MatrixResult {
    pub fn cell(&self, train: MontageTag, eval: MontageTag) -> &CellResult {
        &self.cells[train.index() * 3 + eval.index()]
    }

    pub fn rates(&self, kind: RateKind) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for c in &self.cells {
            out[c.train_tag.index()][c.eval_tag.index()] = c.report.detection_rate(kind);
        }
        out
    }

    /// Detection rates in percent, two decimals.
    pub fn to_csv(&self, kind: RateKind) -> String {
        let mut out = String::from("train\\eval,LE,AR,LE+AR\n");
        for (row, tag) in self.rates(kind).iter().zip(MontageTag::ALL) {
            out.push_str(tag.as_str());
            for r in row {
                out.push_str(&format!(",{:.2}", 100.0 * r));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, kind: RateKind) -> String {
        let tags: Vec<&str> = MontageTag::ALL.iter().map(|t| t.as_str()).collect();
        let reports: Vec<&ScoreReport> = self.cells.iter().map(|c| &c.report).collect();
        let value = serde_json::json!({
            "rate_kind": kind,
            "rows": tags,
            "columns": tags,
            "rate": self.rates(kind),
            "cells": reports,
        });
        serde_json::to_string_pretty(&value).expect("grid serializes") + "\n"
    }
}

/// Side-by-side rates of a raw and a normalized grid, one line per cell.
pub fn comparison_csv(raw: &MatrixResult, normalized: &MatrixResult, kind: RateKind) -> String {
    let mut out = String::from("train,eval,raw,normalized\n");
    for (a, b) in raw.cells.iter().zip(&normalized.cells) {
        out.push_str(&format!(
            "{},{},{:.2},{:.2}\n",
            a.train_tag,
            a.eval_tag,
            100.0 * a.report.detection_rate(kind),
            100.0 * b.report.detection_rate(kind)
        ));
    }
    out
}

fn check_disjoint(train: &[TaggedEpochs], eval: &[TaggedEpochs]) -> Result<(), EvalError> {
    let ids: HashSet<&str> = train.iter().map(|r| r.record_id.as_str()).collect();
    if let Some(r) = eval.iter().find(|r| ids.contains(r.record_id.as_str())) {
        return Err(EvalError::SplitOverlap {
            kind: "record",
            id: r.record_id.clone(),
        });
    }
    let patients: HashSet<&str> = train.iter().filter_map(|r| r.patient_id.as_deref()).collect();
    if let Some(p) = eval
        .iter()
        .filter_map(|r| r.patient_id.as_deref())
        .find(|p| patients.contains(p))
    {
        return Err(EvalError::SplitOverlap {
            kind: "patient",
            id: p.to_string(),
        });
    }
    Ok(())
}

fn select(records: &[TaggedEpochs], tag: MontageTag) -> Vec<Epoch> {
    records
        .iter()
        .filter(|r| tag.includes(r.scheme))
        .flat_map(|r| r.epochs.iter().cloned())
        .collect()
}

/// Trains one SEIZ/BCKG pair per montage condition, in LE, AR, LE+AR order.
pub fn train_models(train: &[TaggedEpochs], cfg: &TrainConfig) -> Result<Vec<ModelSet>, EvalError> {
    par::try_map(&MontageTag::ALL, |&tag| {
        let mut set = train_pair(&select(train, tag), cfg).map_err(|source| EvalError::Train { tag, source })?;
        for m in [&mut set.seiz, &mut set.bckg] {
            m.trained_on.montage_tags = vec![tag.as_str().to_string()];
        }
        Ok(set)
    })
}

/// Classifies every epoch and returns the score and DET curve.
pub fn evaluate(models: &ModelSet, epochs: &[Epoch]) -> Result<(ScoreReport, DetCurve), EvalError> {
    let results = par::try_map(epochs, |e| classify(models, e).map(|c| (e.reference_class, c)))?;
    let preds: Vec<_> = results.iter().map(|(r, c)| (*r, c.class)).collect();
    let margins: Vec<_> = results.iter().map(|(r, c)| (*r, c.margin)).collect();
    Ok((score(&preds)?, det_curve(&margins)?))
}

/// Trains LE, AR and LE+AR models and scores each on the three eval
/// conditions.
pub fn run_matrix(train: &[TaggedEpochs], eval: &[TaggedEpochs], cfg: &TrainConfig) -> Result<MatrixResult, EvalError> {
    check_disjoint(train, eval)?;
    let models = train_models(train, cfg)?;
    let eval_sets: Vec<Vec<Epoch>> = MontageTag::ALL.iter().map(|&t| select(eval, t)).collect();
    let cells = par::try_map_range(9, |k| {
        let (i, j) = (k / 3, k % 3);
        let (report, det) = evaluate(&models[i], &eval_sets[j])?;
        Ok::<_, EvalError>(CellResult {
            train_tag: MontageTag::ALL[i],
            eval_tag: MontageTag::ALL[j],
            report: report.with_tags(MontageTag::ALL[i], MontageTag::ALL[j]),
            det,
        })
    })?;
    Ok(MatrixResult { cells })
}
