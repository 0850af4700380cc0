//! Bag-of-n-grams baselines: multinomial Naive Bayes and multinomial
//! logistic regression over count or TF-IDF features.
//!
//! Conventions are fixed so results do not depend on any ML toolkit:
//! tokens are lowercased alphanumeric runs of length two or more, idf is
//! smoothed, Naive Bayes uses Laplace smoothing 1, logistic regression uses
//! L2 strength 1 with zero initialization.

mod features;
mod logreg;
mod naive_bayes;

use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{fit_vectorizer, FeatureConfig, FeatureVector, NgramRange, Weighting};
pub use logreg::{
    logreg_fit, logreg_predict, LogRegFit, LogRegModel, LogRegProblem, DEFAULT_LAMBDA,
    GRADIENT_TOLERANCE, MAX_ITERATIONS,
};
pub use naive_bayes::{nb_fit, nb_predict, NaiveBayesModel};

use crate::label::FocalizationLabel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training texts produce no n-grams")]
    EmptyVocabulary,
    #[error("{vectors} feature vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("feature vectors disagree on dimension")]
    DimensionMismatch,
    #[error("training labels must not be invalid")]
    InvalidTrainingLabel,
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },
    #[error("bad configuration: {0}")]
    BadConfig(&'static str),
}

/// Returns the shared dimension.
fn check_training_set(
    vectors: &[FeatureVector],
    labels: &[FocalizationLabel],
) -> Result<usize, BaselineError> {
    if vectors.is_empty() {
        return Err(BaselineError::EmptyTrainingSet);
    }
    if vectors.len() != labels.len() {
        return Err(BaselineError::LengthMismatch {
            vectors: vectors.len(),
            labels: labels.len(),
        });
    }
    if labels.iter().any(|l| !l.is_valid()) {
        return Err(BaselineError::InvalidTrainingLabel);
    }
    let dim = vectors[0].dim();
    if vectors.iter().any(|v| v.dim() != dim) {
        return Err(BaselineError::DimensionMismatch);
    }
    Ok(dim)
}

/// A predicted label with a normalized probability per trained class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: FocalizationLabel,
    pub probabilities: BTreeMap<FocalizationLabel, f64>,
}

impl Prediction {
    /// Normalize log-scores by log-sum-exp; the first maximal class wins.
    fn from_scores(classes: &[FocalizationLabel], scores: &[f64]) -> Self {
        let lse = logreg::log_sum_exp(scores);
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        Prediction {
            label: classes[best],
            probabilities: classes
                .iter()
                .zip(scores)
                .map(|(c, s)| (*c, libm::exp(s - lse)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    NaiveBayes,
    LogReg,
}

impl ClassifierKind {
    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::LogReg => "logreg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classifier {
    NaiveBayes(NaiveBayesModel),
    LogReg(LogRegModel),
}

/// A vectorizer and a fitted classifier, the unit saved to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub features: FeatureConfig,
    pub classifier: Classifier,
}

impl BaselineModel {
    /// Fit vectorizer and classifier on the same texts. Logistic regression
    /// non-convergence is reported alongside the model rather than failing.
    pub fn train<S: AsRef<str>>(
        texts: &[S],
        labels: &[FocalizationLabel],
        kind: ClassifierKind,
        weighting: Weighting,
        ngrams: NgramRange,
    ) -> Result<(Self, Option<BaselineError>), BaselineError> {
        let features = fit_vectorizer(texts, weighting, ngrams)?;
        let vectors = features.vectorize_all(texts);
        let (classifier, warning) = match kind {
            ClassifierKind::NaiveBayes => {
                (Classifier::NaiveBayes(nb_fit(&vectors, labels, 1.0)?), None)
            }
            ClassifierKind::LogReg => {
                let fit = logreg_fit(&vectors, labels, DEFAULT_LAMBDA)?;
                let warning = fit.warning();
                (Classifier::LogReg(fit.model), warning)
            }
        };
        Ok((Self { features, classifier }, warning))
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.classifier {
            Classifier::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            Classifier::LogReg(_) => ClassifierKind::LogReg,
        }
    }

    /// Annotator id such as `nb:count:1-2`.
    pub fn annotator_id(&self) -> alloc::string::String {
        alloc::format!(
            "{}:{}:{}",
            self.kind().short_name(),
            self.features.weighting,
            self.features.ngrams
        )
    }

    pub fn predict(&self, text: &str) -> Prediction {
        let v = self.features.vectorize(text);
        match &self.classifier {
            Classifier::NaiveBayes(m) => nb_predict(m, &v),
            Classifier::LogReg(m) => logreg_predict(m, &v),
        }
    }
}
