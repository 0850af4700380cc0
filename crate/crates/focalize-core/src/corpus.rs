//! Documents, paragraph segmentation and seeded excerpt sampling.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::count_words;

/// Minimum excerpt length used throughout the evaluation set.
pub const DEFAULT_MIN_WORDS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("document {0:?} has an empty body")]
    EmptyBody(String),
    #[error("document {doc_id:?}: matter offsets {front}..{back} do not fit a body of {len} characters")]
    BadMatterOffsets {
        doc_id: String,
        front: usize,
        back: usize,
        len: usize,
    },
    #[error("document {0:?} contains no paragraphs")]
    EmptyDocument(String),
    #[error("min_words must be at least 1")]
    ZeroMinWords,
    #[error("cannot sample {requested} excerpts from {available}")]
    SampleTooLarge { requested: usize, available: usize },
}

/// A raw text to segment. Matter offsets count characters (not bytes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    title: String,
    body: String,
    front_matter_end: Option<usize>,
    back_matter_start: Option<usize>,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        body: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let doc_id = doc_id.into();
        let body = body.into();
        if body.is_empty() {
            return Err(CorpusError::EmptyBody(doc_id));
        }
        Ok(Self {
            doc_id,
            title: title.into(),
            body,
            front_matter_end: None,
            back_matter_start: None,
        })
    }

    /// Restrict segmentation to `[front_matter_end, back_matter_start)`.
    pub fn with_matter(
        mut self,
        front_matter_end: Option<usize>,
        back_matter_start: Option<usize>,
    ) -> Result<Self, CorpusError> {
        let len = self.body.chars().count();
        let front = front_matter_end.unwrap_or(0);
        let back = back_matter_start.unwrap_or(len);
        if front > back || back > len {
            return Err(CorpusError::BadMatterOffsets {
                doc_id: self.doc_id,
                front,
                back,
                len,
            });
        }
        self.front_matter_end = front_matter_end;
        self.back_matter_start = back_matter_start;
        Ok(self)
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn body(&self) -> &str {
        &self.body
    }
}

/// A qualifying paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Excerpt {
    /// `doc_id:source_index`
    pub excerpt_id: String,
    pub doc_id: String,
    /// Index of the paragraph among all paragraphs of the document.
    pub source_index: usize,
    /// Position among the excerpts emitted for the document.
    pub ordinal: usize,
    pub word_count: usize,
    pub text: String,
}

struct Paragraph {
    start: usize,
    end: usize,
    text: String,
}

/// Paragraphs are maximal runs of non-blank lines. CRLF is treated as LF;
/// `start`/`end` are character offsets into the original body.
fn paragraphs(body: &str) -> Vec<Paragraph> {
    let mut out = Vec::new();
    let mut current: Option<Paragraph> = None;
    let mut offset = 0usize;
    for raw_line in body.split('\n') {
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let line_chars = line.chars().count();
        if line.trim().is_empty() {
            out.extend(current.take());
        } else {
            match current.as_mut() {
                Some(p) => {
                    p.text.push('\n');
                    p.text.push_str(line);
                    p.end = offset + line_chars;
                }
                None => {
                    current = Some(Paragraph {
                        start: offset,
                        end: offset + line_chars,
                        text: line.into(),
                    })
                }
            }
        }
        offset += raw_line.chars().count() + 1;
    }
    out.extend(current);
    out
}

/// Split a document into paragraphs and keep those inside the matter window
/// with at least `min_words` words.
///
/// A document with no paragraphs at all is an error; one whose paragraphs are
/// all too short yields an empty list.
pub fn segment(document: &Document, min_words: usize) -> Result<Vec<Excerpt>, CorpusError> {
    if min_words == 0 {
        return Err(CorpusError::ZeroMinWords);
    }
    let front = document.front_matter_end.unwrap_or(0);
    let back = document.back_matter_start.unwrap_or(usize::MAX);
    let all = paragraphs(&document.body);
    let window: Vec<(usize, Paragraph)> = all
        .into_iter()
        .enumerate()
        .filter(|(_, p)| p.start >= front && p.end <= back)
        .collect();
    if window.is_empty() {
        return Err(CorpusError::EmptyDocument(document.doc_id.clone()));
    }
    let mut excerpts = Vec::new();
    for (source_index, p) in window {
        let word_count = count_words(&p.text);
        if word_count < min_words {
            continue;
        }
        excerpts.push(Excerpt {
            excerpt_id: format!("{}:{}", document.doc_id, source_index),
            doc_id: document.doc_id.clone(),
            source_index,
            ordinal: excerpts.len(),
            word_count,
            text: p.text,
        });
    }
    Ok(excerpts)
}

/// Draw `n` distinct excerpts uniformly without replacement. The output
/// (including its order) is a pure function of `(excerpts, n, seed)`.
pub fn sample_excerpts(
    excerpts: &[Excerpt],
    n: usize,
    seed: u64,
) -> Result<Vec<Excerpt>, CorpusError> {
    if n > excerpts.len() {
        return Err(CorpusError::SampleTooLarge {
            requested: n,
            available: excerpts.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, excerpts.len(), n)
        .into_iter()
        .map(|i| excerpts[i].clone())
        .collect())
}
