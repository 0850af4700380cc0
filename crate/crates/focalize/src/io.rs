//! JSON Lines persistence for excerpts, annotations and gold labels, plus
//! plain-text document loading with optional matter sidecars.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use focalize_core::corpus::{CorpusError, Document, Excerpt};
use focalize_core::{AnnotationRecord, FocalizationLabel, GoldDataset};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: schema error: {message}", path.display())]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}:{line}: unknown label {label:?}", path.display())]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        label: String,
    },
    #[error("{}:{line}: duplicate record for excerpt {excerpt_id:?} and annotator {annotator_id:?}", path.display())]
    DuplicateRecord {
        path: PathBuf,
        line: usize,
        excerpt_id: String,
        annotator_id: String,
    },
    #[error("{}: {source}", path.display())]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("{0}")]
    Invalid(String),
}

impl DataError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn schema(path: &Path, line: usize, message: impl ToString) -> Self {
        DataError::Schema {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        }
    }
}

/// Non-empty lines of a file with 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, DataError> {
    let file = fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

/// Write one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DataError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)
            .map_err(|e| DataError::io(path, std::io::Error::other(e)))?;
        w.write_all(b"\n").map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

pub fn load_excerpts(path: &Path) -> Result<Vec<Excerpt>, DataError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, text) in read_lines(path)? {
        let e: Excerpt =
            serde_json::from_str(&text).map_err(|e| DataError::schema(path, line, e))?;
        if !seen.insert(e.excerpt_id.clone()) {
            return Err(DataError::schema(
                path,
                line,
                format!("duplicate excerpt_id {:?}", e.excerpt_id),
            ));
        }
        out.push(e);
    }
    Ok(out)
}

pub fn save_excerpts(path: &Path, excerpts: &[Excerpt]) -> Result<(), DataError> {
    write_jsonl(path, excerpts)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnnotation {
    excerpt_id: String,
    annotator_id: String,
    label: String,
    #[serde(default)]
    confidence: Option<f64>,
    #[serde(default)]
    raw_output: Option<String>,
    created_at: String,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Serialize)]
struct AnnotationLine<'a> {
    excerpt_id: &'a str,
    annotator_id: &'a str,
    label: FocalizationLabel,
    confidence: Option<f64>,
    raw_output: Option<&'a str>,
    created_at: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

/// Load and validate annotation records. Fails on the first bad line.
pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, DataError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, text) in read_lines(path)? {
        let raw: RawAnnotation =
            serde_json::from_str(&text).map_err(|e| DataError::schema(path, line, e))?;
        let label: FocalizationLabel =
            raw.label.parse().map_err(|_| DataError::UnknownLabel {
                path: path.to_path_buf(),
                line,
                label: raw.label.clone(),
            })?;
        let created_at = DateTime::parse_from_rfc3339(&raw.created_at)
            .map_err(|e| DataError::schema(path, line, format!("created_at: {e}")))?
            .with_timezone(&Utc);
        let record = AnnotationRecord {
            excerpt_id: raw.excerpt_id,
            annotator_id: raw.annotator_id,
            label,
            confidence: raw.confidence,
            raw_output: raw.raw_output,
            created_at,
            error: raw.error,
        };
        record
            .validate()
            .map_err(|e| DataError::schema(path, line, e))?;
        if !seen.insert((record.excerpt_id.clone(), record.annotator_id.clone())) {
            return Err(DataError::DuplicateRecord {
                path: path.to_path_buf(),
                line,
                excerpt_id: record.excerpt_id,
                annotator_id: record.annotator_id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn save_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<(), DataError> {
    focalize_core::annotation::validate_records(records)
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    let lines: Vec<AnnotationLine<'_>> = records
        .iter()
        .map(|r| AnnotationLine {
            excerpt_id: &r.excerpt_id,
            annotator_id: &r.annotator_id,
            label: r.label,
            confidence: r.confidence,
            raw_output: r.raw_output.as_deref(),
            created_at: r.created_at.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            error: r.error.as_deref(),
        })
        .collect();
    write_jsonl(path, &lines)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGold {
    excerpt_id: String,
    label: String,
}

#[derive(Serialize)]
struct GoldLine<'a> {
    excerpt_id: &'a str,
    label: FocalizationLabel,
}

/// Load consensus labels; the dataset is named after the file stem.
pub fn load_gold(path: &Path) -> Result<GoldDataset, DataError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut gold = GoldDataset::new(name);
    for (line, text) in read_lines(path)? {
        let raw: RawGold =
            serde_json::from_str(&text).map_err(|e| DataError::schema(path, line, e))?;
        let label = match raw.label.parse::<FocalizationLabel>() {
            Ok(l) if l.is_valid() => l,
            _ => {
                return Err(DataError::UnknownLabel {
                    path: path.to_path_buf(),
                    line,
                    label: raw.label,
                })
            }
        };
        if gold.get(&raw.excerpt_id).is_some() {
            return Err(DataError::DuplicateRecord {
                path: path.to_path_buf(),
                line,
                excerpt_id: raw.excerpt_id,
                annotator_id: "gold".into(),
            });
        }
        gold.insert(raw.excerpt_id, label)
            .map_err(|e| DataError::schema(path, line, e))?;
    }
    Ok(gold)
}

pub fn save_gold(path: &Path, gold: &GoldDataset) -> Result<(), DataError> {
    let lines: Vec<GoldLine<'_>> = gold
        .entries()
        .iter()
        .map(|(id, l)| GoldLine {
            excerpt_id: id,
            label: *l,
        })
        .collect();
    write_jsonl(path, &lines)
}

/// Per-document sidecar (`novel.toml` or `novel.json` next to `novel.txt`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentMeta {
    pub doc_id: Option<String>,
    pub title: Option<String>,
    pub front_matter_end: Option<usize>,
    pub back_matter_start: Option<usize>,
}

pub fn find_sidecar(text_path: &Path) -> Option<PathBuf> {
    ["toml", "json"]
        .iter()
        .map(|ext| text_path.with_extension(ext))
        .find(|p| p.is_file() && p != text_path)
}

pub fn load_sidecar(path: &Path) -> Result<DocumentMeta, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|m| DataError::schema(path, 0, m))
}

/// Read a UTF-8 text document. The doc id defaults to the file stem.
pub fn load_document(path: &Path) -> Result<Document, DataError> {
    let body = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let meta = match find_sidecar(path) {
        Some(side) => load_sidecar(&side)?,
        None => DocumentMeta::default(),
    };
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "doc".into());
    let doc_id = meta.doc_id.unwrap_or_else(|| stem.clone());
    let title = meta.title.unwrap_or(stem);
    let corpus_err = |source| DataError::Corpus {
        path: path.to_path_buf(),
        source,
    };
    Document::new(doc_id, title, body)
        .and_then(|d| d.with_matter(meta.front_matter_end, meta.back_matter_start))
        .map_err(corpus_err)
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String, DataError> {
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use focalize_core::FocalizationLabel::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    const LINE_A: &str = r#"{"excerpt_id":"d:1","annotator_id":"human:A","label":"internal","confidence":null,"raw_output":null,"created_at":"2024-05-01T12:00:00Z"}"#;
    const LINE_B: &str = r#"{"excerpt_id":"d:2","annotator_id":"human:A","label":"zero","confidence":0.75,"raw_output":"Zero","created_at":"2024-05-01T12:00:01Z"}"#;
    const LINE_C: &str = r#"{"excerpt_id":"d:1","annotator_id":"human:B","label":"invalid","confidence":null,"raw_output":"hm","created_at":"2024-05-01T12:00:02+02:00"}"#;

    #[test]
    fn loads_well_formed_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.jsonl", &format!("{LINE_A}\n{LINE_B}\n\n{LINE_C}\n"));
        let recs = load_annotations(&p).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].label, Zero);
        assert_eq!(recs[1].confidence, Some(0.75));
        assert_eq!(recs[2].label, Invalid);
    }

    #[test]
    fn unknown_label_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let bad = LINE_B.replace("\"zero\"", "\"omniscient\"");
        let p = write(dir.path(), "a.jsonl", &format!("{LINE_A}\n{bad}\n"));
        match load_annotations(&p) {
            Err(DataError::UnknownLabel { line, label, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(label, "omniscient");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_pair_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.jsonl", &format!("{LINE_A}\n{LINE_A}\n"));
        assert!(matches!(
            load_annotations(&p),
            Err(DataError::DuplicateRecord { line: 2, .. })
        ));
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.jsonl", &format!("{LINE_A}\n{{\"excerpt_id\": 3}}\n"));
        assert!(matches!(load_annotations(&p), Err(DataError::Schema { line: 2, .. })));
        let out_of_range = LINE_B.replace("0.75", "1.5");
        let p = write(dir.path(), "b.jsonl", &out_of_range);
        assert!(matches!(load_annotations(&p), Err(DataError::Schema { line: 1, .. })));
        let bad_time = LINE_A.replace("2024-05-01T12:00:00Z", "yesterday");
        let p = write(dir.path(), "c.jsonl", &bad_time);
        assert!(matches!(load_annotations(&p), Err(DataError::Schema { line: 1, .. })));
    }

    #[test]
    fn gold_rejects_invalid_label() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "gold.jsonl",
            "{\"excerpt_id\":\"a\",\"label\":\"internal\"}\n{\"excerpt_id\":\"b\",\"label\":\"invalid\"}\n",
        );
        assert!(matches!(load_gold(&p), Err(DataError::UnknownLabel { line: 2, .. })));
        let p = write(
            dir.path(),
            "gold2.jsonl",
            "{\"excerpt_id\":\"a\",\"label\":\"internal\"}\n{\"excerpt_id\":\"b\",\"label\":\"external\"}\n",
        );
        let g = load_gold(&p).unwrap();
        assert_eq!(g.name, "gold2");
        assert_eq!(g.class_counts(), [1, 1, 0]);
        let out = dir.path().join("gold3.jsonl");
        save_gold(&out, &g).unwrap();
        assert_eq!(load_gold(&out).unwrap().entries(), g.entries());
    }

    #[test]
    fn document_with_toml_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let body = "TITLE PAGE\n\nthe body paragraph\n\nTHE END";
        let p = write(dir.path(), "novel.txt", body);
        let front = body.find("the body").unwrap();
        let back = body.find("THE END").unwrap();
        write(
            dir.path(),
            "novel.toml",
            &format!("doc_id = \"nov\"\nfront_matter_end = {front}\nback_matter_start = {back}\n"),
        );
        let doc = load_document(&p).unwrap();
        assert_eq!(doc.doc_id(), "nov");
        let ex = focalize_core::corpus::segment(&doc, 1).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].excerpt_id, "nov:1");
    }

    #[test]
    fn digest_is_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x", "abc");
        assert_eq!(
            file_digest(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
