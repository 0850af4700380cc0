//! Corpus-level analyses: per-novel mode percentages, sensorimotor
//! profiles and their correlations, and confidence split by agreement.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::AnnotationRecord;
use crate::label::{FocalizationLabel, CLASSES};
use crate::metrics::{pearson, welch_t, MetricsError, TestResult};

/// Significance threshold used to star correlation cells.
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("document {0:?} has no valid labels")]
    AllInvalid(String),
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("lexicon entry {0:?} has a non-finite rating")]
    NonFiniteRating(String),
    #[error("no token of document {0:?} is in the lexicon")]
    NoLexiconMatches(String),
    #[error("need at least 3 documents, got {0}")]
    TooFewDocuments(usize),
    #[error("profiles and distributions cover different documents")]
    MismatchedDocuments,
    #[error("no excerpt has both a grouping decision and a target confidence")]
    NoTargetConfidence,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// `doc_id` part of an excerpt id of the form `doc_id:index`.
pub fn doc_id_of(excerpt_id: &str) -> &str {
    excerpt_id.rsplit_once(':').map_or(excerpt_id, |(doc, _)| doc)
}

/// Percentage of valid labels in each mode for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDistribution {
    pub doc_id: String,
    pub pct_internal: f64,
    pub pct_external: f64,
    pub pct_zero: f64,
    /// All labels seen, invalid included.
    pub n_excerpts: usize,
    pub n_invalid: usize,
}

impl ModeDistribution {
    pub fn pct(&self, mode: FocalizationLabel) -> f64 {
        match mode {
            FocalizationLabel::Internal => self.pct_internal,
            FocalizationLabel::External => self.pct_external,
            FocalizationLabel::Zero => self.pct_zero,
            FocalizationLabel::Invalid => 0.0,
        }
    }
}

pub fn mode_distribution(
    doc_id: &str,
    labels: &[FocalizationLabel],
) -> Result<ModeDistribution, AnalyticsError> {
    let mut counts = [0usize; 3];
    for i in labels.iter().filter_map(|l| l.class_index()) {
        counts[i] += 1;
    }
    let valid: usize = counts.iter().sum();
    if valid == 0 {
        return Err(AnalyticsError::AllInvalid(doc_id.into()));
    }
    let pct = |c: usize| 100.0 * counts[c] as f64 / valid as f64;
    Ok(ModeDistribution {
        doc_id: doc_id.into(),
        pct_internal: pct(0),
        pct_external: pct(1),
        pct_zero: pct(2),
        n_excerpts: labels.len(),
        n_invalid: labels.len() - valid,
    })
}

/// One distribution per document for a single annotator, ordered by doc id.
/// Documents are taken from the excerpt id prefix.
pub fn mode_distributions(
    records: &[AnnotationRecord],
    annotator_id: &str,
) -> Result<Vec<ModeDistribution>, AnalyticsError> {
    let mut by_doc: BTreeMap<&str, Vec<FocalizationLabel>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.annotator_id == annotator_id) {
        by_doc.entry(doc_id_of(&r.excerpt_id)).or_default().push(r.label);
    }
    by_doc
        .into_iter()
        .map(|(doc, labels)| mode_distribution(doc, &labels))
        .collect()
}

/// The six perceptual axes of the sensorimotor norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Touch,
    Hearing,
    Smell,
    Taste,
    Vision,
    Interoception,
}

pub const AXES: [Axis; 6] = [
    Axis::Touch,
    Axis::Hearing,
    Axis::Smell,
    Axis::Taste,
    Axis::Vision,
    Axis::Interoception,
];

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Touch => "touch",
            Axis::Hearing => "hearing",
            Axis::Smell => "smell",
            Axis::Taste => "taste",
            Axis::Vision => "vision",
            Axis::Interoception => "interoception",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Axis::Touch => "Touch",
            Axis::Hearing => "Hearing",
            Axis::Smell => "Smell",
            Axis::Taste => "Taste",
            Axis::Vision => "Vision",
            Axis::Interoception => "Interoception",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AXES.iter()
            .copied()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| alloc::format!("unknown axis {s:?}"))
    }
}

/// Word -> six axis ratings, keyed by lowercase word.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorimotorLexicon {
    entries: BTreeMap<String, [f64; 6]>,
}

impl SensorimotorLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Later entries for the same (case-folded) word replace earlier ones.
    pub fn insert(&mut self, word: &str, ratings: [f64; 6]) -> Result<(), AnalyticsError> {
        if ratings.iter().any(|r| !r.is_finite()) {
            return Err(AnalyticsError::NonFiniteRating(word.into()));
        }
        self.entries.insert(word.to_lowercase(), ratings);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[f64; 6]> {
        self.entries.get(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// (min, max) rating per axis.
    pub fn bounds(&self) -> [(f64, f64); 6] {
        let mut b = [(f64::INFINITY, f64::NEG_INFINITY); 6];
        for r in self.entries.values() {
            for (i, v) in r.iter().enumerate() {
                b[i].0 = b[i].0.min(*v);
                b[i].1 = b[i].1.max(*v);
            }
        }
        b
    }
}

/// Mean rating per axis over the lexicon-matched tokens of a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorimotorProfile {
    pub doc_id: String,
    pub means: [f64; 6],
    pub lexicon_token_count: usize,
}

impl SensorimotorProfile {
    pub fn mean(&self, axis: Axis) -> f64 {
        self.means[axis.index()]
    }
}

/// Sum each axis over tokens found in the lexicon and divide by the number
/// of matched tokens. Tokens are lowercased; unmatched tokens are ignored.
pub fn sensorimotor_profile<S: AsRef<str>>(
    doc_id: &str,
    tokens: &[S],
    lexicon: &SensorimotorLexicon,
) -> Result<SensorimotorProfile, AnalyticsError> {
    if lexicon.is_empty() {
        return Err(AnalyticsError::EmptyLexicon);
    }
    let mut sums = [0.0f64; 6];
    let mut matched = 0usize;
    for t in tokens {
        let t = t.as_ref();
        let hit = lexicon.get(t).or_else(|| lexicon.get(&t.to_lowercase()));
        if let Some(r) = hit {
            matched += 1;
            sums.iter_mut().zip(r).for_each(|(s, v)| *s += v);
        }
    }
    if matched == 0 {
        return Err(AnalyticsError::NoLexiconMatches(doc_id.into()));
    }
    Ok(SensorimotorProfile {
        doc_id: doc_id.into(),
        means: sums.map(|s| s / matched as f64),
        lexicon_token_count: matched,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseCorrelation {
    pub axis: Axis,
    pub mode: FocalizationLabel,
    pub result: TestResult,
    pub significant: bool,
}

/// Pearson r between every axis mean and every mode percentage across
/// documents: 18 cells, axis-major in [`AXES`] then [`CLASSES`] order.
pub fn correlate_senses(
    profiles: &[SensorimotorProfile],
    distributions: &[ModeDistribution],
) -> Result<Vec<SenseCorrelation>, AnalyticsError> {
    let by_doc: BTreeMap<&str, &ModeDistribution> =
        distributions.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let profile_docs: BTreeSet<&str> = profiles.iter().map(|p| p.doc_id.as_str()).collect();
    if profile_docs.len() != profiles.len()
        || by_doc.len() != distributions.len()
        || profile_docs.iter().ne(by_doc.keys())
    {
        return Err(AnalyticsError::MismatchedDocuments);
    }
    if profiles.len() < 3 {
        return Err(AnalyticsError::TooFewDocuments(profiles.len()));
    }
    let mut cells = Vec::with_capacity(18);
    for axis in AXES {
        let xs: Vec<f64> = profiles.iter().map(|p| p.mean(axis)).collect();
        for mode in CLASSES {
            let ys: Vec<f64> = profiles.iter().map(|p| by_doc[p.doc_id.as_str()].pct(mode)).collect();
            let result = pearson(&xs, &ys)?;
            cells.push(SenseCorrelation {
                axis,
                mode,
                significant: result.p_value < SIGNIFICANCE,
                result,
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl ConditionStats {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            libm::sqrt(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64)
        };
        Some(Self { mean, std, n })
    }
}

/// Target confidence split by whether a grouping subset was unanimous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementComparison {
    pub grouping: String,
    pub target: String,
    pub agree: Option<ConditionStats>,
    pub disagree: Option<ConditionStats>,
    /// Welch test agree vs disagree; absent when a side is empty or both
    /// sides have zero variance.
    pub test: Option<TestResult>,
}

impl AgreementComparison {
    /// One partition had no excerpts (the test is omitted).
    pub fn empty_partition(&self) -> bool {
        self.agree.is_none() || self.disagree.is_none()
    }
}

/// Partition excerpts by unanimity of the `grouping` annotators and compare
/// the `target` annotator's confidence across the two sides.
///
/// Excerpts with fewer than two grouping labels, or without a target
/// confidence, are skipped. An `Invalid` grouping label counts as
/// disagreement.
pub fn confidence_by_agreement(
    records: &[AnnotationRecord],
    grouping_name: &str,
    grouping: &[&str],
    target: &str,
) -> Result<AgreementComparison, AnalyticsError> {
    let members: BTreeSet<&str> = grouping.iter().copied().collect();
    let mut votes: BTreeMap<&str, Vec<FocalizationLabel>> = BTreeMap::new();
    let mut confidence: BTreeMap<&str, f64> = BTreeMap::new();
    for r in records {
        if members.contains(r.annotator_id.as_str()) {
            votes.entry(&r.excerpt_id).or_default().push(r.label);
        }
        if r.annotator_id == target {
            if let Some(c) = r.confidence {
                confidence.insert(&r.excerpt_id, c);
            }
        }
    }
    let mut agree = Vec::new();
    let mut disagree = Vec::new();
    for (excerpt, labels) in &votes {
        if labels.len() < 2 {
            continue;
        }
        let Some(&c) = confidence.get(excerpt) else {
            continue;
        };
        let unanimous = labels[0].is_valid() && labels.iter().all(|l| *l == labels[0]);
        if unanimous {
            agree.push(c);
        } else {
            disagree.push(c);
        }
    }
    if agree.is_empty() && disagree.is_empty() {
        return Err(AnalyticsError::NoTargetConfidence);
    }
    let test = if agree.len() >= 2 && disagree.len() >= 2 {
        welch_t(&agree, &disagree).ok()
    } else {
        None
    };
    Ok(AgreementComparison {
        grouping: grouping_name.to_string(),
        target: target.to_string(),
        agree: ConditionStats::of(&agree),
        disagree: ConditionStats::of(&disagree),
        test,
    })
}
