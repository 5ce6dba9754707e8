use std::fmt::Write as _;

use super::{AnalysisError, StatsSummary};

const BASE_NAMES: [&str; 9] = ["Ef", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "Ed"];
const CSV_HEADER: &str = "feature,mean_le,mean_ar,var_le,var_ar,mean_global,var_global";

/// One feature row; `None` marks statistics of an empty class.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub feature: String,
    pub mean_le: Option<f64>,
    pub mean_ar: Option<f64>,
    pub var_le: Option<f64>,
    pub var_ar: Option<f64>,
    pub mean_global: Option<f64>,
    pub var_global: Option<f64>,
}

impl StatsRow {
    fn values(&self) -> [Option<f64>; 6] {
        [
            self.mean_le,
            self.mean_ar,
            self.var_le,
            self.var_ar,
            self.mean_global,
            self.var_global,
        ]
    }
}

/// Per-feature means and variances by montage, in base-feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsTable {
    pub rows: Vec<StatsRow>,
}

fn column(s: &StatsSummary, j: usize) -> (Option<f64>, Option<f64>) {
    (s.mean().map(|m| m[j]), s.variance().map(|v| v[j]))
}

pub fn report_table(
    le: &StatsSummary,
    ar: &StatsSummary,
    global: &StatsSummary,
) -> Result<StatsTable, AnalysisError> {
    for s in [le, ar, global] {
        if s.dims() != BASE_NAMES.len() {
            return Err(AnalysisError::DimensionMismatch {
                expected: BASE_NAMES.len(),
                found: s.dims(),
            });
        }
    }
    let rows = BASE_NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (mean_le, var_le) = column(le, j);
            let (mean_ar, var_ar) = column(ar, j);
            let (mean_global, var_global) = column(global, j);
            StatsRow {
                feature: name.to_string(),
                mean_le,
                mean_ar,
                var_le,
                var_ar,
                mean_global,
                var_global,
            }
        })
        .collect();
    Ok(StatsTable { rows })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl StatsTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let cells: Vec<String> = r.values().into_iter().map(cell).collect();
            let _ = writeln!(out, "{},{}", r.feature, cells.join(","));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, AnalysisError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(AnalysisError::Csv {
                    line: 1,
                    msg: "unexpected header".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let err = |msg: String| AnalysisError::Csv { line: idx + 1, msg };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 7 {
                return Err(err(format!("expected 7 columns, found {}", cols.len())));
            }
            let mut vals = [None; 6];
            for (slot, raw) in vals.iter_mut().zip(&cols[1..]) {
                *slot = match *raw {
                    "NA" => None,
                    s => Some(s.parse().map_err(|_| err(format!("bad number '{s}'")))?),
                };
            }
            rows.push(StatsRow {
                feature: cols[0].to_string(),
                mean_le: vals[0],
                mean_ar: vals[1],
                var_le: vals[2],
                var_ar: vals[3],
                mean_global: vals[4],
                var_global: vals[5],
            });
        }
        Ok(StatsTable { rows })
    }

    /// Fixed-width text: the LE/AR block followed by the global block.
    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<8}{:>12}{:>12}{:>12}{:>12}", "Feature", "Mean LE", "Mean AR", "Var LE", "Var AR");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<8}{:>12}{:>12}{:>12}{:>12}",
                r.feature,
                fmt(r.mean_le),
                fmt(r.mean_ar),
                fmt(r.var_le),
                fmt(r.var_ar)
            );
        }
        out.push('\n');
        let _ = writeln!(out, "{:<8}{:>12}{:>12}", "Feature", "Mean all", "Var all");
        for r in &self.rows {
            let _ = writeln!(out, "{:<8}{:>12}{:>12}", r.feature, fmt(r.mean_global), fmt(r.var_global));
        }
        out
    }
}
