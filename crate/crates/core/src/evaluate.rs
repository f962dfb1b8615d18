//! Confusion matrices, per-class precision/recall/F1, macro averages, and
//! report rendering (JSON document and a fixed-width table).
//!
//! Rows of a confusion matrix are true labels, columns predictions, both in
//! code order -1, 0, 1. A 0/0 ratio evaluates to 0 and flags the class.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[true][predicted]`, indexed by [`Label::index`].
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_rows(counts: [[usize; 3]; 3]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn get(&self, truth: Label, predicted: Label) -> usize {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, truth: Label) -> usize {
        self.counts[truth.index()].iter().sum()
    }

    pub fn column_sum(&self, predicted: Label) -> usize {
        self.counts.iter().map(|row| row[predicted.index()]).sum()
    }

    pub fn correct(&self) -> usize {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total()).0
    }

    /// Pooled true positives over pooled row sums.
    pub fn micro_recall(&self) -> f64 {
        let tp: usize = Label::ALL.iter().map(|&l| self.get(l, l)).sum();
        let support: usize = Label::ALL.iter().map(|&l| self.row_sum(l)).sum();
        ratio(tp, support).0
    }
}

pub fn confusion(truth: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no examples to evaluate".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Some ratio was 0/0 and was reported as 0.
    pub undefined: bool,
}

pub fn precision_recall_f1(cm: &ConfusionMatrix, label: Label) -> ClassMetrics {
    let tp = cm.get(label, label);
    let (precision, p_undef) = ratio(tp, cm.column_sum(label));
    let (recall, r_undef) = ratio(tp, cm.row_sum(label));
    let (f1, f_undef) = if precision + recall == 0.0 {
        (0.0, true)
    } else {
        (2.0 * precision * recall / (precision + recall), false)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: cm.row_sum(label),
        undefined: p_undef || r_undef || f_undef,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted mean over the given classes.
pub fn macro_average(metrics: &[ClassMetrics]) -> Averages {
    let n = metrics.len().max(1) as f64;
    Averages {
        precision: metrics.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: metrics.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: metrics.iter().map(|m| m.f1).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub per_class: Vec<(Label, ClassMetrics)>,
    pub macro_avg: Averages,
}

impl ClassReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let per_class: Vec<(Label, ClassMetrics)> = Label::ALL
            .iter()
            .map(|&l| (l, precision_recall_f1(cm, l)))
            .collect();
        let metrics: Vec<ClassMetrics> = per_class.iter().map(|&(_, m)| m).collect();
        ClassReport {
            macro_avg: macro_average(&metrics),
            per_class,
        }
    }

    pub fn metrics(&self, label: Label) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|(l, _)| *l == label).map(|(_, m)| m)
    }

    pub fn any_undefined(&self) -> bool {
        self.per_class.iter().any(|(_, m)| m.undefined)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Machine-readable evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub model: String,
    pub labels: Vec<i8>,
    pub confusion: Vec<Vec<usize>>,
    /// Keyed by label code.
    pub per_class: BTreeMap<String, ClassEntry>,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    pub accuracy: f64,
    /// Label codes whose metrics hit a 0/0 ratio.
    pub zero_division: Vec<i8>,
    pub run_manifest: serde_json::Value,
}

impl ReportDocument {
    pub fn new(model: &str, cm: &ConfusionMatrix, report: &ClassReport, run_manifest: serde_json::Value) -> Self {
        ReportDocument {
            model: model.to_string(),
            labels: Label::ALL.iter().map(|l| l.code()).collect(),
            confusion: cm.counts.iter().map(|r| r.to_vec()).collect(),
            per_class: report
                .per_class
                .iter()
                .map(|(l, m)| {
                    (
                        l.code().to_string(),
                        ClassEntry {
                            precision: m.precision,
                            recall: m.recall,
                            f1: m.f1,
                            support: m.support,
                        },
                    )
                })
                .collect(),
            macro_avg: report.macro_avg,
            accuracy: cm.accuracy(),
            zero_division: report
                .per_class
                .iter()
                .filter(|(_, m)| m.undefined)
                .map(|(l, _)| l.code())
                .collect(),
            run_manifest,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Fixed-width table: one row per label with precision, recall, F1 and the
/// confusion-matrix row, then the macro average.
pub fn render_text(model: &str, cm: &ConfusionMatrix, report: &ClassReport) -> String {
    let mut out = String::new();
    writeln!(out, "Model: {model}").unwrap();
    writeln!(
        out,
        "{:>5}  {:>9}  {:>6}  {:>8}  {:>7}  | {:>6} {:>6} {:>6}",
        "Label", "Precision", "Recall", "F1-Score", "Support", "-1", "0", "1"
    )
    .unwrap();
    for (label, m) in &report.per_class {
        let row = cm.counts[label.index()];
        writeln!(
            out,
            "{:>5}  {:>9.4}  {:>6.4}  {:>8.4}  {:>7}  | {:>6} {:>6} {:>6}",
            label.code(),
            m.precision,
            m.recall,
            m.f1,
            m.support,
            row[0],
            row[1],
            row[2]
        )
        .unwrap();
    }
    writeln!(
        out,
        "{:>5}  {:>9.4}  {:>6.4}  {:>8.4}  {:>7}",
        "macro",
        report.macro_avg.precision,
        report.macro_avg.recall,
        report.macro_avg.f1,
        cm.total()
    )
    .unwrap();
    writeln!(out, "accuracy {:.4}", cm.accuracy()).unwrap();
    writeln!(out, "Rows are true labels, columns predictions. A 0/0 ratio is reported as 0.").unwrap();
    if report.any_undefined() {
        let flagged: Vec<String> = report
            .per_class
            .iter()
            .filter(|(_, m)| m.undefined)
            .map(|(l, _)| l.code().to_string())
            .collect();
        writeln!(out, "warning: 0/0 ratio for label(s) {}", flagged.join(", ")).unwrap();
    }
    out
}
