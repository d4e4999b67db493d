//! Confusion-matrix evaluation: weighted-F1, accuracy, and per-class
//! sensitivities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::edf::ArtifactClass;
use crate::{Error, Result};

pub const N_CLASSES: usize = 6;

/// 6x6 count matrix; rows are true classes, columns predicted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_total(&self, class: usize) -> u64 {
        (0..N_CLASSES).map(|r| self.counts[r][class]).sum()
    }

    /// Element-wise sum, for merging shards.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for r in 0..N_CLASSES {
            for c in 0..N_CLASSES {
                self.counts[r][c] += other.counts[r][c];
            }
        }
    }
}

/// Accumulate a confusion matrix from parallel truth/prediction vectors.
pub fn confusion(truth: &[ArtifactClass], pred: &[ArtifactClass]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::Metrics(format!(
            "length mismatch: {} truth vs {} predicted",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Metrics("empty input".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(pred) {
        cm.counts[t.code()][p.code()] += 1;
    }
    Ok(cm)
}

/// The evaluation row for one model: weighted-F1, accuracy, and the
/// sensitivity of each class present in the truth. Classes absent from the
/// truth are omitted from `sensitivity` rather than reported as zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub sensitivity: BTreeMap<ArtifactClass, f64>,
    pub support: BTreeMap<ArtifactClass, u64>,
}

/// Evaluation knobs. `f1_exclude_null` drops the null class from the
/// weighted-F1 weighting for sensitivity analysis; sensitivities are always
/// reported for every class present.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub f1_exclude_null: bool,
}

pub fn evaluate(cm: &ConfusionMatrix) -> Result<EvalReport> {
    evaluate_with(cm, EvalOptions::default())
}

pub fn evaluate_with(cm: &ConfusionMatrix, opts: EvalOptions) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Metrics("all-zero confusion matrix".into()));
    }
    let mut sensitivity = BTreeMap::new();
    let mut support = BTreeMap::new();
    let mut weighted_f1 = 0.0;
    let mut weight_total = 0u64;
    for class in ArtifactClass::ALL {
        let c = class.code();
        let row = cm.row_total(c);
        if row == 0 {
            continue;
        }
        support.insert(class, row);
        let tp = cm.counts[c][c] as f64;
        sensitivity.insert(class, tp / row as f64);
        if opts.f1_exclude_null && class == ArtifactClass::Null {
            continue;
        }
        let col = cm.col_total(c) as f64;
        let precision = if col > 0.0 { tp / col } else { 0.0 };
        let recall = tp / row as f64;
        // zero-denominator convention: F1 = 0
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        weighted_f1 += row as f64 * f1;
        weight_total += row;
    }
    if weight_total == 0 {
        return Err(Error::Metrics("no supported classes to weight F1 over".into()));
    }
    let trace: u64 = (0..N_CLASSES).map(|i| cm.counts[i][i]).sum();
    Ok(EvalReport {
        weighted_f1: weighted_f1 / weight_total as f64,
        accuracy: trace as f64 / total as f64,
        sensitivity,
        support,
    })
}

/// Fixed-width table header matching the report column order.
pub const TABLE_COLUMNS: [&str; 9] = [
    "Algorithm", "Weighted-F1", "Accuracy", "S_eyem", "S_chew", "S_shiv", "S_elpp", "S_musc",
    "S_null",
];

/// Render one fixed-width table row: algorithm name, weighted-F1, accuracy,
/// then the six sensitivities (`-` for classes absent from the truth).
pub fn render_row(name: &str, report: &EvalReport) -> String {
    let mut cells = vec![format!("{name:<28}")];
    cells.push(format!("{:>11.4}", report.weighted_f1));
    cells.push(format!("{:>9.2}%", report.accuracy * 100.0));
    for class in ArtifactClass::ALL {
        match report.sensitivity.get(&class) {
            Some(s) => cells.push(format!("{:>8.2}%", s * 100.0)),
            None => cells.push(format!("{:>9}", "-")),
        }
    }
    cells.join(" ")
}

pub fn render_header() -> String {
    format!(
        "{:<28} {:>11} {:>10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        TABLE_COLUMNS[0],
        TABLE_COLUMNS[1],
        TABLE_COLUMNS[2],
        TABLE_COLUMNS[3],
        TABLE_COLUMNS[4],
        TABLE_COLUMNS[5],
        TABLE_COLUMNS[6],
        TABLE_COLUMNS[7],
        TABLE_COLUMNS[8],
    )
}
