use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_training_set, BaselineError, Prediction};
use crate::baseline::features::FeatureVector;
use crate::label::{FocalizationLabel, CLASSES};

/// Multinomial Naive Bayes with additive (Laplace) smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    /// Classes seen in training, in class order.
    pub classes: Vec<FocalizationLabel>,
    pub log_priors: Vec<f64>,
    /// `classes.len() x dim` smoothed log-likelihoods.
    pub log_likelihoods: Vec<Vec<f64>>,
    pub smoothing: f64,
}

/// Fit priors from class frequencies and per-class feature likelihoods
/// `(N_ck + a) / (N_c + a V)`.
pub fn nb_fit(
    vectors: &[FeatureVector],
    labels: &[FocalizationLabel],
    smoothing: f64,
) -> Result<NaiveBayesModel, BaselineError> {
    let dim = check_training_set(vectors, labels)?;
    if smoothing.is_nan() || smoothing <= 0.0 {
        return Err(BaselineError::BadConfig("smoothing must be positive"));
    }
    let mut doc_counts = [0usize; 3];
    let mut feature_mass = vec![vec![0.0f64; dim]; 3];
    for (v, l) in vectors.iter().zip(labels) {
        let c = l.class_index().expect("checked valid");
        doc_counts[c] += 1;
        for &(col, w) in v.entries() {
            feature_mass[c][col] += w;
        }
    }
    let n_docs = vectors.len() as f64;
    let mut model = NaiveBayesModel {
        classes: Vec::new(),
        log_priors: Vec::new(),
        log_likelihoods: Vec::new(),
        smoothing,
    };
    for (c, label) in CLASSES.iter().enumerate() {
        if doc_counts[c] == 0 {
            continue;
        }
        let total: f64 = feature_mass[c].iter().sum::<f64>() + smoothing * dim as f64;
        model.classes.push(*label);
        model.log_priors.push(libm::log(doc_counts[c] as f64 / n_docs));
        model.log_likelihoods.push(
            feature_mass[c]
                .iter()
                .map(|m| libm::log((m + smoothing) / total))
                .collect(),
        );
    }
    Ok(model)
}

impl NaiveBayesModel {
    pub fn dim(&self) -> usize {
        self.log_likelihoods.first().map_or(0, Vec::len)
    }

    /// Joint log-score per class: log prior + sum of weight * log-likelihood.
    pub fn joint_log_scores(&self, vector: &FeatureVector) -> Vec<f64> {
        self.classes
            .iter()
            .enumerate()
            .map(|(c, _)| {
                self.log_priors[c]
                    + vector
                        .entries()
                        .iter()
                        .filter(|(col, _)| *col < self.dim())
                        .map(|&(col, w)| w * self.log_likelihoods[c][col])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Argmax class with its normalized posterior. Ties go to the earlier class.
pub fn nb_predict(model: &NaiveBayesModel, vector: &FeatureVector) -> Prediction {
    Prediction::from_scores(&model.classes, &model.joint_log_scores(vector))
}
