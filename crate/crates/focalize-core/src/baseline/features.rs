use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::text::{extract_ngrams, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Count,
    TfIdf,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Count => "count",
            Weighting::TfIdf => "tfidf",
        })
    }
}

impl FromStr for Weighting {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "count" => Ok(Weighting::Count),
            "tfidf" | "tf-idf" => Ok(Weighting::TfIdf),
            _ => Err(BaselineError::BadConfig("weighting must be count or tfidf")),
        }
    }
}

/// N-gram range `1..=max`. Only 1, 2 and 3 are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct NgramRange(u8);

impl NgramRange {
    pub fn up_to(max: u8) -> Result<Self, BaselineError> {
        if (1..=3).contains(&max) {
            Ok(Self(max))
        } else {
            Err(BaselineError::BadConfig("ngram_max must be 1, 2 or 3"))
        }
    }

    pub fn max(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for NgramRange {
    type Error = BaselineError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::up_to(v)
    }
}

impl From<NgramRange> for u8 {
    fn from(r: NgramRange) -> u8 {
        r.0
    }
}

impl fmt::Display for NgramRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            1 => f.write_str("1"),
            n => write!(f, "1-{n}"),
        }
    }
}

/// Accepts `1`, `1-2`, `1-3` (and `2`, `3` as shorthand).
impl FromStr for NgramRange {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let max = match s.trim() {
            "1" | "1-1" => 1,
            "1-2" | "2" => 2,
            "1-3" | "3" => 3,
            _ => return Err(BaselineError::BadConfig("ngrams must be 1, 1-2 or 1-3")),
        };
        Self::up_to(max)
    }
}

/// Sparse, nonnegative feature weights over a fitted vocabulary.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Sorted by column, no duplicate columns, no zero weights.
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl FeatureVector {
    pub fn from_map(map: BTreeMap<usize, f64>, dim: usize) -> Self {
        Self {
            entries: map.into_iter().filter(|(_, w)| *w != 0.0).collect(),
            dim,
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, column: usize) -> f64 {
        self.entries
            .binary_search_by_key(&column, |(c, _)| *c)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|(_, w)| w * w).sum())
    }
}

/// A fitted vectorizer: weighting scheme, n-gram range and vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub weighting: Weighting,
    pub ngrams: NgramRange,
    /// n-gram -> column; columns are dense `0..V` in lexicographic n-gram order.
    pub vocabulary: BTreeMap<String, usize>,
    /// Smoothed idf per column; empty for `Count`.
    #[serde(default)]
    pub idf: Vec<f64>,
}

fn ngrams_of(text: &str, ngrams: NgramRange) -> Vec<String> {
    extract_ngrams(&tokenize(text), ngrams.max())
}

/// Fit the vocabulary (and idf table for TF-IDF) on training texts only.
///
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1
pub fn fit_vectorizer<S: AsRef<str>>(
    train_texts: &[S],
    weighting: Weighting,
    ngrams: NgramRange,
) -> Result<FeatureConfig, BaselineError> {
    if train_texts.is_empty() {
        return Err(BaselineError::EmptyTrainingSet);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for text in train_texts {
        let distinct: BTreeSet<String> = ngrams_of(text.as_ref(), ngrams).into_iter().collect();
        for g in distinct {
            *df.entry(g).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(BaselineError::EmptyVocabulary);
    }
    let n_docs = train_texts.len() as f64;
    let idf = match weighting {
        Weighting::Count => Vec::new(),
        Weighting::TfIdf => df
            .values()
            .map(|&d| libm::log((1.0 + n_docs) / (1.0 + d as f64)) + 1.0)
            .collect(),
    };
    let vocabulary = df.into_keys().enumerate().map(|(i, g)| (g, i)).collect();
    Ok(FeatureConfig {
        weighting,
        ngrams,
        vocabulary,
        idf,
    })
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// Raw counts, or L2-normalized tf-idf. Unseen n-grams are dropped.
    pub fn vectorize(&self, text: &str) -> FeatureVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams_of(text, self.ngrams) {
            if let Some(&col) = self.vocabulary.get(&g) {
                *counts.entry(col).or_default() += 1.0;
            }
        }
        if self.weighting == Weighting::TfIdf {
            for (col, w) in counts.iter_mut() {
                *w *= self.idf[*col];
            }
            let norm = libm::sqrt(counts.values().map(|w| w * w).sum());
            if norm > 0.0 {
                counts.values_mut().for_each(|w| *w /= norm);
            }
        }
        FeatureVector::from_map(counts, self.dim())
    }

    pub fn vectorize_all<S: AsRef<str>>(&self, texts: &[S]) -> Vec<FeatureVector> {
        texts.iter().map(|t| self.vectorize(t.as_ref())).collect()
    }
}
