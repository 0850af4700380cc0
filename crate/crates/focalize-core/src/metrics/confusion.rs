use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::annotation::GoldDataset;
use crate::label::{FocalizationLabel, CLASSES};

/// Index of the synthetic column holding `Invalid` predictions.
pub const INVALID_COLUMN: usize = 3;

/// `counts[gold][predicted]` over Internal, External, Zero, with a fourth
/// predicted column for `Invalid` (and missing) predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 4]; 3]) -> Self {
        Self { counts }
    }

    pub fn add(&mut self, gold: FocalizationLabel, predicted: FocalizationLabel) {
        let row = gold.class_index().expect("gold labels are never invalid");
        let col = predicted.class_index().unwrap_or(INVALID_COLUMN);
        self.counts[row][col] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.counts[class][class]
    }

    /// Predicted as `class` but gold is another class.
    pub fn false_positives(&self, class: usize) -> u64 {
        (0..3).filter(|&g| g != class).map(|g| self.counts[g][class]).sum()
    }

    /// Gold `class` predicted as anything else, `Invalid` included.
    pub fn false_negatives(&self, class: usize) -> u64 {
        self.support(class) - self.true_positives(class)
    }
}

/// Tally predictions against gold. Gold excerpts without a prediction count
/// as `Invalid`; predictions for excerpts outside the gold set are ignored.
pub fn confusion(
    gold: &GoldDataset,
    predictions: &BTreeMap<String, FocalizationLabel>,
) -> Result<ConfusionMatrix, MetricsError> {
    if !gold.entries().keys().any(|id| predictions.contains_key(id)) {
        return Err(MetricsError::NoOverlap);
    }
    let mut m = ConfusionMatrix::default();
    for (id, &g) in gold.entries() {
        let p = predictions.get(id).copied().unwrap_or(FocalizationLabel::Invalid);
        m.add(g, p);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: FocalizationLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Per-class scores plus support-weighted averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfReport {
    pub per_class: Vec<ClassScores>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub total: u64,
}

impl PrfReport {
    pub fn class(&self, label: FocalizationLabel) -> Option<&ClassScores> {
        self.per_class.iter().find(|c| c.label == label)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn prf(matrix: &ConfusionMatrix) -> PrfReport {
    let per_class: Vec<ClassScores> = CLASSES
        .iter()
        .enumerate()
        .map(|(c, &label)| {
            let tp = matrix.true_positives(c);
            let precision = ratio(tp, tp + matrix.false_positives(c));
            let recall = ratio(tp, tp + matrix.false_negatives(c));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScores {
                label,
                precision,
                recall,
                f1,
                support: matrix.support(c),
            }
        })
        .collect();
    let total_support: u64 = per_class.iter().map(|c| c.support).sum();
    let weighted = |f: fn(&ClassScores) -> f64| {
        if total_support == 0 {
            return 0.0;
        }
        per_class.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / total_support as f64
    };
    PrfReport {
        weighted_precision: weighted(|c| c.precision),
        weighted_recall: weighted(|c| c.recall),
        weighted_f1: weighted(|c| c.f1),
        total: matrix.total(),
        per_class,
    }
}

/// Element-wise mean of several reports (e.g. the runs of one model).
/// Supports are averaged and rounded down.
pub fn average_reports(reports: &[PrfReport]) -> Option<PrfReport> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&PrfReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Some(PrfReport {
        per_class: (0..first.per_class.len())
            .map(|i| ClassScores {
                label: first.per_class[i].label,
                precision: mean(&|r| r.per_class[i].precision),
                recall: mean(&|r| r.per_class[i].recall),
                f1: mean(&|r| r.per_class[i].f1),
                support: reports.iter().map(|r| r.per_class[i].support).sum::<u64>()
                    / reports.len() as u64,
            })
            .collect(),
        weighted_precision: mean(&|r| r.weighted_precision),
        weighted_recall: mean(&|r| r.weighted_recall),
        weighted_f1: mean(&|r| r.weighted_f1),
        total: first.total,
    })
}
