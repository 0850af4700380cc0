//! Sensorimotor norms CSV loader.

use std::path::Path;

use focalize_core::analytics::{SensorimotorLexicon, AXES};
use serde::{Deserialize, Serialize};

use crate::io::DataError;

/// CSV header for the word column and each axis, in axis order
/// (touch, hearing, smell, taste, vision, interoception).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconColumns {
    pub word: String,
    pub axes: [String; 6],
}

impl Default for LexiconColumns {
    /// Headers of the published Lancaster norms.
    fn default() -> Self {
        Self {
            word: "Word".into(),
            axes: [
                "Haptic.mean".into(),
                "Auditory.mean".into(),
                "Olfactory.mean".into(),
                "Gustatory.mean".into(),
                "Visual.mean".into(),
                "Interoceptive.mean".into(),
            ],
        }
    }
}

impl LexiconColumns {
    /// Apply `axis=Header` overrides, e.g. `touch=Haptic`.
    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self, String> {
        for o in overrides {
            let (key, header) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| format!("expected axis=Header, got {:?}", o.as_ref()))?;
            if key.eq_ignore_ascii_case("word") {
                self.word = header.into();
                continue;
            }
            let axis: focalize_core::analytics::Axis = key.parse()?;
            self.axes[axis.index()] = header.into();
        }
        Ok(self)
    }
}

pub fn load_lexicon(path: &Path, columns: &LexiconColumns) -> Result<SensorimotorLexicon, DataError> {
    let schema = |line: usize, message: String| DataError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| schema(0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| schema(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| schema(1, format!("missing column {name:?}")))
    };
    let word_col = find(&columns.word)?;
    let mut axis_cols = [0usize; 6];
    for axis in AXES {
        axis_cols[axis.index()] = find(&columns.axes[axis.index()])?;
    }
    let mut lexicon = SensorimotorLexicon::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| schema(line, e.to_string()))?;
        let word = row.get(word_col).unwrap_or("").trim();
        if word.is_empty() {
            continue;
        }
        let mut ratings = [0.0; 6];
        for (slot, col) in ratings.iter_mut().zip(axis_cols) {
            let cell = row.get(col).unwrap_or("").trim();
            *slot = cell
                .parse()
                .map_err(|_| schema(line, format!("rating {cell:?} is not a number")))?;
        }
        lexicon
            .insert(word, ratings)
            .map_err(|e| schema(line, e.to_string()))?;
    }
    Ok(lexicon)
}
