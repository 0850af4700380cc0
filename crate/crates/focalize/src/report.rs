//! Results bundle and its Markdown, CSV and JSON renderings.
//!
//! Rendering is a pure function of the bundle. Percentages and F1 scores are
//! printed with 2 decimals, correlations and confidences with 4.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use focalize_core::analytics::{AgreementComparison, ModeDistribution, SenseCorrelation, AXES};
use focalize_core::label::{FocalizationLabel, CLASSES};
use focalize_core::metrics::PrfReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scores of one model, averaged over its runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub model: String,
    pub runs: usize,
    pub report: PrfReport,
}

/// Krippendorff's alpha over a named set of annotators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub name: String,
    pub annotators: Vec<String>,
    pub alpha: f64,
    pub units: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsBundle {
    #[serde(default)]
    pub evaluation: Vec<EvaluationRow>,
    #[serde(default)]
    pub agreement: Vec<AgreementRow>,
    #[serde(default)]
    pub confidence: Vec<AgreementComparison>,
    #[serde(default)]
    pub modes: Vec<ModeDistribution>,
    #[serde(default)]
    pub senses: Vec<SenseCorrelation>,
}

impl ResultsBundle {
    pub fn is_empty(&self) -> bool {
        self.evaluation.is_empty()
            && self.agreement.is_empty()
            && self.confidence.is_empty()
            && self.modes.is_empty()
            && self.senses.is_empty()
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.is_empty() {
            return Err(ReportError::EmptyBundle);
        }
        if !self.senses.is_empty() && self.senses.len() != AXES.len() * CLASSES.len() {
            return Err(ReportError::Invalid(format!(
                "expected {} sense correlations, got {}",
                AXES.len() * CLASSES.len(),
                self.senses.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown format {s:?} (expected markdown, csv or json)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("results bundle is empty")]
    EmptyBundle,
    #[error("invalid results bundle: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn p_value(p: f64) -> String {
    format!("{p:.4e}")
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(header));
    let mut rule = String::from("|");
    for (i, _) in header.iter().enumerate() {
        rule.push_str(if i == 0 { " --- |" } else { " ---: |" });
    }
    out.push_str(&rule);
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
    }
    out.push('\n');
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn class_f1(r: &PrfReport, l: FocalizationLabel) -> f64 {
    r.class(l).map_or(0.0, |c| c.f1)
}

/// Highest internal percentage first, ties by document id.
fn sorted_modes(modes: &[ModeDistribution]) -> Vec<&ModeDistribution> {
    let mut v: Vec<&ModeDistribution> = modes.iter().collect();
    v.sort_by(|a, b| {
        b.pct_internal
            .total_cmp(&a.pct_internal)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    v
}

fn stats_cell(s: Option<&focalize_core::analytics::ConditionStats>) -> String {
    match s {
        Some(s) => format!("{:.4} (±{:.4})", s.mean, s.std),
        None => "n/a".into(),
    }
}

fn sense_cell(c: &SenseCorrelation) -> String {
    let star = if c.significant { "*" } else { "" };
    format!("{star}{:.4}", c.result.statistic)
}

fn find_sense(senses: &[SenseCorrelation], axis: focalize_core::analytics::Axis, mode: FocalizationLabel) -> Option<&SenseCorrelation> {
    senses.iter().find(|c| c.axis == axis && c.mode == mode)
}

fn unique<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen: Vec<&str> = Vec::new();
    for i in items {
        if !seen.contains(&i) {
            seen.push(i);
        }
    }
    seen
}

pub fn render_markdown(bundle: &ResultsBundle) -> Result<String, ReportError> {
    bundle.validate()?;
    let mut out = String::from("# Focalization report\n\n");
    if !bundle.evaluation.is_empty() {
        out.push_str("## Model performance\n\n");
        let rows: Vec<Vec<String>> = bundle
            .evaluation
            .iter()
            .map(|e| {
                let r = &e.report;
                vec![
                    e.model.clone(),
                    pct(class_f1(r, FocalizationLabel::Internal)),
                    pct(class_f1(r, FocalizationLabel::External)),
                    pct(class_f1(r, FocalizationLabel::Zero)),
                    pct(r.weighted_precision),
                    pct(r.weighted_recall),
                    pct(r.weighted_f1),
                ]
            })
            .collect();
        table(
            &mut out,
            &strings(&["Model", "Internal F1", "External F1", "Zero F1", "Precision", "Recall", "F1"]),
            &rows,
        );
        out.push_str("Overall scores are weighted by class size; multi-run models are averaged over runs.\n\n");
    }
    if !bundle.agreement.is_empty() {
        out.push_str("## Inter-annotator agreement\n\n");
        let rows: Vec<Vec<String>> = bundle
            .agreement
            .iter()
            .map(|a| {
                vec![
                    a.name.clone(),
                    a.annotators.len().to_string(),
                    a.units.to_string(),
                    format!("{:.4}", a.alpha),
                ]
            })
            .collect();
        table(&mut out, &strings(&["Annotators", "Count", "Units", "Alpha"]), &rows);
    }
    if !bundle.confidence.is_empty() {
        out.push_str("## Confidence by agreement\n\n");
        let targets = unique(bundle.confidence.iter().map(|c| c.target.as_str()));
        let groupings = unique(bundle.confidence.iter().map(|c| c.grouping.as_str()));
        let mut header = vec!["Grouping".to_string()];
        for t in &targets {
            header.push(format!("{t} Agree"));
            header.push(format!("{t} Disagree"));
        }
        let rows: Vec<Vec<String>> = groupings
            .iter()
            .map(|g| {
                let mut row = vec![g.to_string()];
                for t in &targets {
                    match bundle.confidence.iter().find(|c| c.grouping == *g && c.target == *t) {
                        Some(c) => {
                            let star = match &c.test {
                                Some(t) if t.p_value < focalize_core::analytics::SIGNIFICANCE => "*",
                                _ => "",
                            };
                            row.push(stats_cell(c.agree.as_ref()));
                            row.push(format!("{star}{}", stats_cell(c.disagree.as_ref())));
                        }
                        None => row.extend(["n/a".to_string(), "n/a".to_string()]),
                    }
                }
                row
            })
            .collect();
        table(&mut out, &header, &rows);
        out.push_str("Mean confidence with standard deviation in parentheses; starred differences have p < 0.05.\n\n");
    }
    if !bundle.modes.is_empty() {
        out.push_str("## Focalization modes per novel\n\n");
        let rows: Vec<Vec<String>> = sorted_modes(&bundle.modes)
            .into_iter()
            .map(|m| {
                vec![
                    m.doc_id.clone(),
                    format!("{:.2}", m.pct_internal),
                    format!("{:.2}", m.pct_external),
                    format!("{:.2}", m.pct_zero),
                ]
            })
            .collect();
        table(&mut out, &strings(&["Novel", "% Internal", "% External", "% Zero"]), &rows);
    }
    if !bundle.senses.is_empty() {
        out.push_str("## Sensorimotor correlations\n\n");
        let rows: Vec<Vec<String>> = AXES
            .iter()
            .map(|&axis| {
                let mut row = vec![axis.title().to_string()];
                for mode in CLASSES {
                    row.push(find_sense(&bundle.senses, axis, mode).map_or("n/a".into(), sense_cell));
                }
                row
            })
            .collect();
        table(&mut out, &strings(&["Sense", "Internal", "External", "Zero"]), &rows);
        out.push_str("Pearson's r across novels; starred correlations have p < 0.05.\n");
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    Ok(out)
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// One `(file name, contents)` pair per non-empty section.
pub fn render_csv(bundle: &ResultsBundle) -> Result<Vec<(&'static str, String)>, ReportError> {
    bundle.validate()?;
    let mut files = Vec::new();
    if !bundle.evaluation.is_empty() {
        let rows = bundle
            .evaluation
            .iter()
            .map(|e| {
                let r = &e.report;
                vec![
                    e.model.clone(),
                    e.runs.to_string(),
                    pct(class_f1(r, FocalizationLabel::Internal)),
                    pct(class_f1(r, FocalizationLabel::External)),
                    pct(class_f1(r, FocalizationLabel::Zero)),
                    pct(r.weighted_precision),
                    pct(r.weighted_recall),
                    pct(r.weighted_f1),
                ]
            })
            .collect();
        files.push((
            "evaluation.csv",
            csv_text(
                &["model", "runs", "internal_f1", "external_f1", "zero_f1", "precision", "recall", "f1"],
                rows,
            ),
        ));
    }
    if !bundle.agreement.is_empty() {
        let rows = bundle
            .agreement
            .iter()
            .map(|a| {
                vec![
                    a.name.clone(),
                    a.annotators.join(" "),
                    a.units.to_string(),
                    format!("{:.4}", a.alpha),
                ]
            })
            .collect();
        files.push(("agreement.csv", csv_text(&["name", "annotators", "units", "alpha"], rows)));
    }
    if !bundle.confidence.is_empty() {
        let side = |s: Option<&focalize_core::analytics::ConditionStats>| match s {
            Some(s) => [format!("{:.4}", s.mean), format!("{:.4}", s.std), s.n.to_string()],
            None => [String::new(), String::new(), "0".into()],
        };
        let rows = bundle
            .confidence
            .iter()
            .map(|c| {
                let mut row = vec![c.grouping.clone(), c.target.clone()];
                row.extend(side(c.agree.as_ref()));
                row.extend(side(c.disagree.as_ref()));
                match &c.test {
                    Some(t) => row.extend([format!("{:.4}", t.statistic), format!("{:.4}", t.df), p_value(t.p_value)]),
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
                row
            })
            .collect();
        files.push((
            "confidence.csv",
            csv_text(
                &[
                    "grouping", "target", "agree_mean", "agree_std", "agree_n", "disagree_mean",
                    "disagree_std", "disagree_n", "t", "df", "p",
                ],
                rows,
            ),
        ));
    }
    if !bundle.modes.is_empty() {
        let rows = sorted_modes(&bundle.modes)
            .into_iter()
            .map(|m| {
                vec![
                    m.doc_id.clone(),
                    format!("{:.2}", m.pct_internal),
                    format!("{:.2}", m.pct_external),
                    format!("{:.2}", m.pct_zero),
                    m.n_excerpts.to_string(),
                    m.n_invalid.to_string(),
                ]
            })
            .collect();
        files.push((
            "modes.csv",
            csv_text(
                &["doc_id", "pct_internal", "pct_external", "pct_zero", "n_excerpts", "n_invalid"],
                rows,
            ),
        ));
    }
    if !bundle.senses.is_empty() {
        let rows = bundle
            .senses
            .iter()
            .map(|c| {
                vec![
                    c.axis.name().to_string(),
                    c.mode.name().to_string(),
                    format!("{:.4}", c.result.statistic),
                    p_value(c.result.p_value),
                    c.significant.to_string(),
                ]
            })
            .collect();
        files.push(("senses.csv", csv_text(&["axis", "mode", "r", "p", "significant"], rows)));
    }
    Ok(files)
}

pub fn render_json(bundle: &ResultsBundle) -> Result<String, ReportError> {
    bundle.validate()?;
    let mut s = serde_json::to_string_pretty(bundle).expect("bundle serializes");
    s.push('\n');
    Ok(s)
}

/// Write the bundle into `out_dir` and return the written paths.
pub fn emit_report(
    bundle: &ResultsBundle,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let files: Vec<(String, String)> = match format {
        ReportFormat::Markdown => vec![("report.md".into(), render_markdown(bundle)?)],
        ReportFormat::Json => vec![("report.json".into(), render_json(bundle)?)],
        ReportFormat::Csv => render_csv(bundle)?
            .into_iter()
            .map(|(n, c)| (n.to_string(), c))
            .collect(),
    };
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Plain-text summary used by subcommands that print to stdout.
pub fn summarize(bundle: &ResultsBundle) -> String {
    let mut s = String::new();
    for e in &bundle.evaluation {
        let _ = writeln!(s, "{}: weighted F1 {}", e.model, pct(e.report.weighted_f1));
    }
    for a in &bundle.agreement {
        let _ = writeln!(s, "{}: alpha {:.4} over {} units", a.name, a.alpha, a.units);
    }
    s
}
