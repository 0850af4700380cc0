//! Focalization labels and label-level aggregation.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The annotation target: one of Genette's three focalization modes, or
/// `Invalid` when a machine annotator produced an unusable reply.
///
/// The derived ordering (`Internal < External < Zero < Invalid`) is the
/// class order used for every deterministic tie-break in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FocalizationLabel {
    Internal,
    External,
    Zero,
    Invalid,
}

/// The three real classes, in tie-break order.
pub const CLASSES: [FocalizationLabel; 3] = [
    FocalizationLabel::Internal,
    FocalizationLabel::External,
    FocalizationLabel::Zero,
];

impl FocalizationLabel {
    pub fn name(self) -> &'static str {
        match self {
            FocalizationLabel::Internal => "internal",
            FocalizationLabel::External => "external",
            FocalizationLabel::Zero => "zero",
            FocalizationLabel::Invalid => "invalid",
        }
    }

    /// Column header used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            FocalizationLabel::Internal => "Internal",
            FocalizationLabel::External => "External",
            FocalizationLabel::Zero => "Zero",
            FocalizationLabel::Invalid => "Invalid",
        }
    }

    pub fn is_valid(self) -> bool {
        self != FocalizationLabel::Invalid
    }

    /// Position in [`CLASSES`]; `None` for `Invalid`.
    pub fn class_index(self) -> Option<usize> {
        match self {
            FocalizationLabel::Internal => Some(0),
            FocalizationLabel::External => Some(1),
            FocalizationLabel::Zero => Some(2),
            FocalizationLabel::Invalid => None,
        }
    }
}

impl fmt::Display for FocalizationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown focalization label {0:?}")]
pub struct UnknownLabel(pub alloc::string::String);

/// Strict parse of a canonical label name, as stored in data files.
impl FromStr for FocalizationLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "internal" => Ok(FocalizationLabel::Internal),
            "external" => Ok(FocalizationLabel::External),
            "zero" => Ok(FocalizationLabel::Zero),
            "invalid" => Ok(FocalizationLabel::Invalid),
            other => Err(UnknownLabel(other.into())),
        }
    }
}

/// Lenient parse of a model reply.
///
/// Only the leading word counts: surrounding whitespace and punctuation are
/// stripped and case is ignored. Anything else maps to `Invalid`.
pub fn parse_label(raw: &str) -> FocalizationLabel {
    let first = raw
        .split(|c: char| c.is_whitespace())
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .find(|w| !w.is_empty());
    let Some(word) = first else {
        return FocalizationLabel::Invalid;
    };
    // Reject words glued to more text by inner punctuation ("first-person").
    if !word.chars().all(char::is_alphabetic) {
        return FocalizationLabel::Invalid;
    }
    let lower = word.to_lowercase();
    match lower.as_str() {
        "internal" => FocalizationLabel::Internal,
        "external" => FocalizationLabel::External,
        "zero" => FocalizationLabel::Zero,
        _ => FocalizationLabel::Invalid,
    }
}

/// Outcome of a majority vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "label")]
pub enum Consensus {
    Label(FocalizationLabel),
    /// No label had a strict majority; needs a human adjudicator.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MajorityError {
    #[error("no labels to vote on")]
    Empty,
    #[error("every vote was invalid")]
    AllInvalid,
}

/// Strict-majority vote over the valid labels. `Invalid` votes are dropped
/// before counting.
pub fn majority_label(labels: &[FocalizationLabel]) -> Result<Consensus, MajorityError> {
    if labels.is_empty() {
        return Err(MajorityError::Empty);
    }
    let mut counts = [0usize; 3];
    for idx in labels.iter().filter_map(|l| l.class_index()) {
        counts[idx] += 1;
    }
    let valid: usize = counts.iter().sum();
    if valid == 0 {
        return Err(MajorityError::AllInvalid);
    }
    Ok(CLASSES
        .iter()
        .zip(counts)
        .find(|(_, c)| 2 * c > valid)
        .map_or(Consensus::Unresolved, |(l, _)| Consensus::Label(*l)))
}
