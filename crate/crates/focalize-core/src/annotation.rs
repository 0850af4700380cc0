//! Annotation records and gold (consensus) datasets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::{FocalizationLabel, CLASSES};

/// One label assigned to one excerpt by one annotator (human, baseline or LLM run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub excerpt_id: String,
    /// e.g. `human:A`, `gpt-4o:run2:prompt-base`, `nb:count:1-2`
    pub annotator_id: String,
    pub label: FocalizationLabel,
    pub confidence: Option<f64>,
    pub raw_output: Option<String>,
    pub created_at: DateTime<Utc>,
    /// Set when a machine annotator failed and the label was forced to `Invalid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AnnotationRecord {
    pub fn new(
        excerpt_id: impl Into<String>,
        annotator_id: impl Into<String>,
        label: FocalizationLabel,
        created_at: DateTime<Utc>,
    ) -> Self {
        Self {
            excerpt_id: excerpt_id.into(),
            annotator_id: annotator_id.into(),
            label,
            confidence: None,
            raw_output: None,
            created_at,
            error: None,
        }
    }

    pub fn with_confidence(mut self, confidence: Option<f64>) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(DatasetError::ConfidenceOutOfRange {
                    excerpt_id: self.excerpt_id.clone(),
                    value: c,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("duplicate record for excerpt {excerpt_id:?} and annotator {annotator_id:?}")]
    DuplicateRecord {
        excerpt_id: String,
        annotator_id: String,
    },
    #[error("confidence {value} for excerpt {excerpt_id:?} is outside [0, 1]")]
    ConfidenceOutOfRange { excerpt_id: String, value: f64 },
    #[error("gold label for excerpt {0:?} is invalid")]
    InvalidGoldLabel(String),
    #[error("duplicate gold label for excerpt {0:?}")]
    DuplicateGold(String),
}

/// Check every record and the `(excerpt_id, annotator_id)` uniqueness rule.
pub fn validate_records(records: &[AnnotationRecord]) -> Result<(), DatasetError> {
    let mut seen = BTreeSet::new();
    for r in records {
        r.validate()?;
        if !seen.insert((r.excerpt_id.as_str(), r.annotator_id.as_str())) {
            return Err(DatasetError::DuplicateRecord {
                excerpt_id: r.excerpt_id.clone(),
                annotator_id: r.annotator_id.clone(),
            });
        }
    }
    Ok(())
}

/// Annotator ids in first-seen order.
pub fn annotator_ids(records: &[AnnotationRecord]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    records
        .iter()
        .filter(|r| seen.insert(r.annotator_id.as_str()))
        .map(|r| r.annotator_id.clone())
        .collect()
}

/// `excerpt_id -> label` for a single annotator.
pub fn labels_by_excerpt(
    records: &[AnnotationRecord],
    annotator_id: &str,
) -> BTreeMap<String, FocalizationLabel> {
    records
        .iter()
        .filter(|r| r.annotator_id == annotator_id)
        .map(|r| (r.excerpt_id.clone(), r.label))
        .collect()
}

/// Consensus labels. Never holds `Invalid`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoldDataset {
    pub name: String,
    entries: BTreeMap<String, FocalizationLabel>,
}

impl GoldDataset {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(
        &mut self,
        excerpt_id: impl Into<String>,
        label: FocalizationLabel,
    ) -> Result<(), DatasetError> {
        let id = excerpt_id.into();
        if !label.is_valid() {
            return Err(DatasetError::InvalidGoldLabel(id));
        }
        if self.entries.contains_key(&id) {
            return Err(DatasetError::DuplicateGold(id));
        }
        self.entries.insert(id, label);
        Ok(())
    }

    pub fn from_pairs<I, S>(name: impl Into<String>, pairs: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = (S, FocalizationLabel)>,
        S: Into<String>,
    {
        let mut gold = Self::new(name);
        for (id, label) in pairs {
            gold.insert(id, label)?;
        }
        Ok(gold)
    }

    pub fn entries(&self) -> &BTreeMap<String, FocalizationLabel> {
        &self.entries
    }

    pub fn get(&self, excerpt_id: &str) -> Option<FocalizationLabel> {
        self.entries.get(excerpt_id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Support per class, in [`CLASSES`] order.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for l in self.entries.values() {
            if let Some(i) = l.class_index() {
                counts[i] += 1;
            }
        }
        counts
    }

    pub fn class_count_map(&self) -> BTreeMap<FocalizationLabel, usize> {
        CLASSES.iter().copied().zip(self.class_counts()).collect()
    }
}
