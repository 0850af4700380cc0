//! `focalize` command line. Exit codes: 0 success, 1 usage or configuration
//! error, 2 data error, 3 backend error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use focalize_core::analytics::{
    confidence_by_agreement, correlate_senses, mode_distributions, sensorimotor_profile,
    AnalyticsError, ModeDistribution,
};
use focalize_core::annotation::{annotator_ids, labels_by_excerpt, DatasetError};
use focalize_core::baseline::{BaselineError, BaselineModel, ClassifierKind, NgramRange, Weighting};
use focalize_core::corpus::{sample_excerpts, segment, CorpusError, Excerpt};
use focalize_core::metrics::{
    average_reports, confusion, krippendorff_alpha, prf, MetricsError, ReliabilityMatrix,
};
use focalize_core::prompt::{PromptId, PromptTemplate};
use focalize_core::text::lexicon_tokens;
use focalize_core::{AnnotationRecord, FocalizationLabel};
use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::config::{load_config, BackendOverrides, ConfigError};
use crate::gateway::{Gateway, GatewayError, ResponseCache};
use crate::io::{
    load_annotations, load_document, load_excerpts, load_gold, save_annotations, save_excerpts,
    DataError,
};
use crate::lexicon::{load_lexicon, LexiconColumns};
use crate::manifest::RunManifest;
use crate::report::{emit_report, AgreementRow, EvaluationRow, ReportError, ReportFormat, ResultsBundle};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Backend(#[from] GatewayError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Backend(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "focalize", version, about = "Focalization annotation and analysis pipeline")]
pub struct Cli {
    /// Manifest file to append to (default: manifest.jsonl next to the output).
    #[arg(long, global = true, env = "FOCALIZE_MANIFEST")]
    pub manifest: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split documents into paragraph excerpts.
    Segment(SegmentArgs),
    /// Draw a seeded random sample of excerpts.
    Sample(SampleArgs),
    /// Train a Naive Bayes or logistic regression baseline and annotate with it.
    TrainBaseline(TrainArgs),
    /// Annotate excerpts with an OpenAI-compatible chat model.
    Annotate(AnnotateArgs),
    /// Score annotators against gold labels.
    Evaluate(EvaluateArgs),
    /// Krippendorff's alpha over sets of annotators.
    Agreement(AgreementArgs),
    /// Per-document focalization mode percentages.
    AnalyzeModes(ModesArgs),
    /// Correlate sensorimotor profiles with mode percentages.
    Sensorimotor(SensorimotorArgs),
    /// Confidence when annotator subsets agree or disagree.
    ConfidenceTable(ConfidenceArgs),
    /// Render result files as Markdown, CSV or JSON reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Plain-text documents; a same-stem .toml/.json sidecar may set matter offsets.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = focalize_core::corpus::DEFAULT_MIN_WORDS)]
    pub min_words: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Nb,
    Logreg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training excerpts; those with a gold label are used.
    #[arg(long)]
    pub excerpts: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// count or tfidf
    #[arg(long, default_value = "count")]
    pub weighting: Weighting,
    /// 1, 1-2 or 1-3
    #[arg(long, default_value = "1")]
    pub ngrams: NgramRange,
    /// Excerpts to annotate (default: the training excerpts).
    #[arg(long)]
    pub predict: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub excerpts: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// TOML or JSON config with a [backend] table and cache_dir.
    #[arg(long, env = "FOCALIZE_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "FOCALIZE_BACKEND_URL")]
    pub backend_url: Option<String>,
    #[arg(long, env = "FOCALIZE_MODEL")]
    pub model: Option<String>,
    #[arg(long, default_value = "base")]
    pub prompt: PromptId,
    #[arg(long, default_value_t = 1)]
    pub runs: u32,
    /// Name of the environment variable holding the API key.
    #[arg(long, env = "FOCALIZE_API_KEY_ENV")]
    pub api_key_env: Option<String>,
    #[arg(long, env = "FOCALIZE_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long)]
    pub no_logprobs: bool,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// First retry delay in seconds.
    #[arg(long)]
    pub backoff: Option<f64>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub requests_per_second: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long = "annotations", required = true, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long = "annotations", required = true, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    /// NAME=ID,ID,... (repeatable; default: every annotator as "all").
    #[arg(long = "set")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[arg(long = "annotations", required = true, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    /// Required when the files hold more than one annotator.
    #[arg(long)]
    pub annotator: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensorimotorArgs {
    #[arg(long = "documents", required = true, num_args = 1..)]
    pub documents: Vec<PathBuf>,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Column override, e.g. touch=Haptic.mean or word=Word (repeatable).
    #[arg(long = "column")]
    pub columns: Vec<String>,
    /// Output of analyze-modes.
    #[arg(long)]
    pub modes: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub profiles_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConfidenceArgs {
    #[arg(long = "annotations", required = true, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    /// NAME=ID,ID,... (repeatable).
    #[arg(long = "grouping", required = true)]
    pub groupings: Vec<String>,
    /// ID or NAME=ID of the annotator whose confidence is compared (repeatable).
    #[arg(long = "target", required = true)]
    pub targets: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub evaluation: Option<PathBuf>,
    #[arg(long)]
    pub agreement: Option<PathBuf>,
    #[arg(long)]
    pub confidence: Option<PathBuf>,
    #[arg(long)]
    pub modes: Option<PathBuf>,
    #[arg(long)]
    pub senses: Option<PathBuf>,
    /// markdown, csv or json (repeatable).
    #[arg(long = "format", default_value = "markdown")]
    pub formats: Vec<ReportFormat>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match dispatch(&cli, args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Segment(_) => "segment",
        Command::Sample(_) => "sample",
        Command::TrainBaseline(_) => "train-baseline",
        Command::Annotate(_) => "annotate",
        Command::Evaluate(_) => "evaluate",
        Command::Agreement(_) => "agreement",
        Command::AnalyzeModes(_) => "analyze-modes",
        Command::Sensorimotor(_) => "sensorimotor",
        Command::ConfidenceTable(_) => "confidence-table",
        Command::Report(_) => "report",
    }
}

fn manifest_path(cli: &Cli, first_output: &Path) -> PathBuf {
    cli.manifest.clone().unwrap_or_else(|| {
        let dir = if first_output.is_dir() {
            first_output
        } else {
            first_output.parent().unwrap_or(Path::new(""))
        };
        dir.join("manifest.jsonl")
    })
}

fn dispatch(cli: &Cli, args: Vec<String>) -> Result<(), CliError> {
    let mut m = RunManifest::start(command_name(&cli.command), args);
    let outputs = match &cli.command {
        Command::Segment(a) => cmd_segment(a, &mut m)?,
        Command::Sample(a) => cmd_sample(a, &mut m)?,
        Command::TrainBaseline(a) => cmd_train(a, &mut m)?,
        Command::Annotate(a) => cmd_annotate(a, &mut m)?,
        Command::Evaluate(a) => cmd_evaluate(a, &mut m)?,
        Command::Agreement(a) => cmd_agreement(a, &mut m)?,
        Command::AnalyzeModes(a) => cmd_modes(a, &mut m)?,
        Command::Sensorimotor(a) => cmd_sensorimotor(a, &mut m)?,
        Command::ConfidenceTable(a) => cmd_confidence(a, &mut m)?,
        Command::Report(a) => cmd_report(a, &mut m)?,
    };
    for p in &outputs {
        m.add_output(p)?;
    }
    let log = manifest_path(cli, &outputs[0]);
    m.finish(&log)?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<(), DataError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|source| DataError::Io {
            path: dir.to_path_buf(),
            source,
        }),
        None => Ok(()),
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), DataError> {
    ensure_parent(path)?;
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    fs::write(path, s).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| DataError::Schema {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn load_all_annotations(paths: &[PathBuf], m: &mut RunManifest) -> Result<Vec<AnnotationRecord>, CliError> {
    let mut all = Vec::new();
    for p in paths {
        m.add_input(p)?;
        all.extend(load_annotations(p)?);
    }
    focalize_core::annotation::validate_records(&all)?;
    Ok(all)
}

/// `NAME=ID,ID,...`
fn parse_set(spec: &str) -> Result<(String, Vec<String>), CliError> {
    let (name, ids) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected NAME=ID,ID,..., got {spec:?}")))?;
    let ids: Vec<String> = ids
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    if name.is_empty() || ids.is_empty() {
        return Err(CliError::Usage(format!("expected NAME=ID,ID,..., got {spec:?}")));
    }
    Ok((name.to_string(), ids))
}

fn check_known(ids: &[String], records: &[AnnotationRecord]) -> Result<(), CliError> {
    let known = annotator_ids(records);
    match ids.iter().find(|id| !known.contains(id)) {
        Some(id) => Err(CliError::Usage(format!(
            "unknown annotator {id:?}; known: {}",
            known.join(", ")
        ))),
        None => Ok(()),
    }
}

fn cmd_segment(a: &SegmentArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let mut excerpts = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for p in &a.inputs {
        m.add_input(p)?;
        let doc = load_document(p)?;
        if !seen.insert(doc.doc_id().to_string()) {
            return Err(DataError::Invalid(format!("duplicate document id {:?}", doc.doc_id())).into());
        }
        let ex = segment(&doc, a.min_words).map_err(|source| DataError::Corpus {
            path: p.clone(),
            source,
        })?;
        info!("{}: {} excerpts", doc.doc_id(), ex.len());
        excerpts.extend(ex);
    }
    ensure_parent(&a.out)?;
    save_excerpts(&a.out, &excerpts)?;
    println!("{} excerpts written to {}", excerpts.len(), a.out.display());
    Ok(vec![a.out.clone()])
}

fn cmd_sample(a: &SampleArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    m.add_input(&a.input)?;
    let excerpts = load_excerpts(&a.input)?;
    let sample = sample_excerpts(&excerpts, a.n, a.seed)?;
    ensure_parent(&a.out)?;
    save_excerpts(&a.out, &sample)?;
    println!("{} of {} excerpts sampled", sample.len(), excerpts.len());
    Ok(vec![a.out.clone()])
}

fn cmd_train(a: &TrainArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    m.add_input(&a.excerpts)?;
    m.add_input(&a.gold)?;
    let excerpts = load_excerpts(&a.excerpts)?;
    let gold = load_gold(&a.gold)?;
    let (texts, labels): (Vec<&str>, Vec<FocalizationLabel>) = excerpts
        .iter()
        .filter_map(|e| gold.get(&e.excerpt_id).map(|l| (e.text.as_str(), l)))
        .unzip();
    if texts.is_empty() {
        return Err(DataError::Invalid("no training excerpt has a gold label".into()).into());
    }
    let kind = match a.kind {
        KindArg::Nb => ClassifierKind::NaiveBayes,
        KindArg::Logreg => ClassifierKind::LogReg,
    };
    let (model, warning) = BaselineModel::train(&texts, &labels, kind, a.weighting, a.ngrams)?;
    if let Some(w) = warning {
        warn!("{w}");
    }
    let targets = match &a.predict {
        Some(p) => {
            m.add_input(p)?;
            load_excerpts(p)?
        }
        None => excerpts.clone(),
    };
    let id = model.annotator_id();
    let now = Utc::now();
    let records: Vec<AnnotationRecord> = targets
        .iter()
        .map(|e| AnnotationRecord::new(e.excerpt_id.clone(), id.clone(), model.predict(&e.text).label, now))
        .collect();
    ensure_parent(&a.out)?;
    save_annotations(&a.out, &records)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(p) = &a.model_out {
        write_json(p, &model)?;
        outputs.push(p.clone());
    }
    println!("{id}: trained on {} excerpts, {} records written", texts.len(), records.len());
    Ok(outputs)
}

fn cmd_annotate(a: &AnnotateArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let file = match &a.config {
        Some(p) => load_config(p)?,
        None => Default::default(),
    };
    let flags = BackendOverrides {
        base_url: a.backend_url.clone(),
        model_name: a.model.clone(),
        top_p: a.top_p,
        want_logprobs: a.no_logprobs.then_some(false),
        system_message: None,
        max_retries: a.max_retries,
        timeout: a.timeout,
        api_key_env: a.api_key_env.clone(),
        backoff_base: a.backoff,
        max_in_flight: a.max_in_flight,
        requests_per_second: a.requests_per_second,
    };
    let config = flags.over(file.backend).build()?;
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let cache_dir = a
        .cache_dir
        .clone()
        .or(file.cache_dir)
        .unwrap_or_else(|| a.out.parent().unwrap_or(Path::new("")).join("cache"));
    m.add_input(&a.excerpts)?;
    let excerpts: Vec<Excerpt> = load_excerpts(&a.excerpts)?;
    m.backend = Some((&config).into());
    m.prompt_id = Some(a.prompt.name().into());
    let gateway = Gateway::new(config, Some(ResponseCache::open(&cache_dir)?))?;
    let template = PromptTemplate::builtin(a.prompt);
    let batch = gateway.annotate_corpus(&template, &excerpts, a.runs)?;
    ensure_parent(&a.out)?;
    save_annotations(&a.out, &batch.records)?;
    let s = batch.stats;
    println!(
        "{} records written to {} ({} network calls, {} retries, {} cache hits, {} failed)",
        batch.records.len(),
        a.out.display(),
        s.network_calls,
        s.retries,
        s.cache_hits,
        s.failed
    );
    if s.failed > 0 && s.failed as usize == batch.records.len() {
        return Err(GatewayError::Transport("every request failed".into()).into());
    }
    Ok(vec![a.out.clone()])
}

/// Annotator id with its `runN` segment removed, so runs of one model group together.
pub fn model_of(annotator_id: &str) -> String {
    let is_run = |s: &str| s.strip_prefix("run").is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()));
    annotator_id
        .split(':')
        .filter(|s| !is_run(s))
        .collect::<Vec<_>>()
        .join(":")
}

fn cmd_evaluate(a: &EvaluateArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    m.add_input(&a.gold)?;
    let gold = load_gold(&a.gold)?;
    let records = load_all_annotations(&a.annotations, m)?;
    let mut models: Vec<String> = Vec::new();
    let mut reports: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for id in annotator_ids(&records) {
        let model = model_of(&id);
        if !models.contains(&model) {
            models.push(model.clone());
        }
        let preds = labels_by_excerpt(&records, &id);
        reports.entry(model).or_default().push(prf(&confusion(&gold, &preds)?));
    }
    let rows: Vec<EvaluationRow> = models
        .into_iter()
        .map(|model| {
            let runs = &reports[&model];
            EvaluationRow {
                runs: runs.len(),
                report: average_reports(runs).expect("at least one run"),
                model,
            }
        })
        .collect();
    write_json(&a.out, &rows)?;
    for r in &rows {
        println!("{}: weighted F1 {:.2}", r.model, 100.0 * r.report.weighted_f1);
    }
    Ok(vec![a.out.clone()])
}

fn cmd_agreement(a: &AgreementArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let records = load_all_annotations(&a.annotations, m)?;
    let sets = if a.sets.is_empty() {
        vec![("all".to_string(), annotator_ids(&records))]
    } else {
        a.sets.iter().map(|s| parse_set(s)).collect::<Result<_, _>>()?
    };
    let mut rows = Vec::new();
    for (name, ids) in sets {
        check_known(&ids, &records)?;
        let per: Vec<BTreeMap<String, FocalizationLabel>> =
            ids.iter().map(|id| labels_by_excerpt(&records, id)).collect();
        let units: std::collections::BTreeSet<&String> = per.iter().flat_map(|p| p.keys()).collect();
        let rows_m: Vec<Vec<Option<FocalizationLabel>>> = units
            .iter()
            .map(|u| {
                per.iter()
                    .map(|p| p.get(*u).copied().filter(|l| l.is_valid()))
                    .collect()
            })
            .collect();
        let result = krippendorff_alpha(&ReliabilityMatrix::from_rows(rows_m)?)?;
        println!("{name}: alpha {:.4} over {} units", result.alpha, result.units_retained);
        rows.push(AgreementRow {
            name,
            annotators: ids,
            alpha: result.alpha,
            units: result.units_retained,
        });
    }
    write_json(&a.out, &rows)?;
    Ok(vec![a.out.clone()])
}

fn cmd_modes(a: &ModesArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let records = load_all_annotations(&a.annotations, m)?;
    let ids = annotator_ids(&records);
    let annotator = match (&a.annotator, ids.as_slice()) {
        (Some(id), _) => {
            check_known(std::slice::from_ref(id), &records)?;
            id.clone()
        }
        (None, [only]) => only.clone(),
        (None, _) => {
            return Err(CliError::Usage(format!(
                "--annotator is required when several annotators are present: {}",
                ids.join(", ")
            )))
        }
    };
    let dists = mode_distributions(&records, &annotator)?;
    write_json(&a.out, &dists)?;
    println!("{} documents analysed for {annotator}", dists.len());
    Ok(vec![a.out.clone()])
}

fn cmd_sensorimotor(a: &SensorimotorArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let columns = LexiconColumns::default()
        .with_overrides(&a.columns)
        .map_err(CliError::Usage)?;
    m.add_input(&a.lexicon)?;
    let lexicon = load_lexicon(&a.lexicon, &columns)?;
    m.add_input(&a.modes)?;
    let modes: Vec<ModeDistribution> = read_json(&a.modes)?;
    let mut profiles = Vec::new();
    for p in &a.documents {
        m.add_input(p)?;
        let doc = load_document(p)?;
        let paragraphs = segment(&doc, 1).map_err(|source| DataError::Corpus {
            path: p.clone(),
            source,
        })?;
        let tokens: Vec<String> = paragraphs.iter().flat_map(|e| lexicon_tokens(&e.text)).collect();
        profiles.push(sensorimotor_profile(doc.doc_id(), &tokens, &lexicon)?);
    }
    profiles.sort_by(|x, y| x.doc_id.cmp(&y.doc_id));
    let cells = correlate_senses(&profiles, &modes)?;
    write_json(&a.out, &cells)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(p) = &a.profiles_out {
        write_json(p, &profiles)?;
        outputs.push(p.clone());
    }
    println!("{} correlations over {} documents", cells.len(), profiles.len());
    Ok(outputs)
}

fn cmd_confidence(a: &ConfidenceArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let records = load_all_annotations(&a.annotations, m)?;
    let groupings: Vec<(String, Vec<String>)> =
        a.groupings.iter().map(|s| parse_set(s)).collect::<Result<_, _>>()?;
    let targets: Vec<(String, String)> = a
        .targets
        .iter()
        .map(|t| match t.split_once('=') {
            Some((name, id)) => (name.to_string(), id.to_string()),
            None => (t.clone(), t.clone()),
        })
        .collect();
    let mut rows = Vec::new();
    for (gname, ids) in &groupings {
        check_known(ids, &records)?;
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        for (tname, tid) in &targets {
            check_known(std::slice::from_ref(tid), &records)?;
            let mut c = confidence_by_agreement(&records, gname, &refs, tid)?;
            c.target = tname.clone();
            rows.push(c);
        }
    }
    write_json(&a.out, &rows)?;
    println!("{} comparisons written", rows.len());
    Ok(vec![a.out.clone()])
}

fn cmd_report(a: &ReportArgs, m: &mut RunManifest) -> Result<Vec<PathBuf>, CliError> {
    fn section<T: DeserializeOwned>(p: &Option<PathBuf>, m: &mut RunManifest) -> Result<Vec<T>, CliError> {
        match p {
            Some(p) => {
                m.add_input(p)?;
                Ok(read_json(p)?)
            }
            None => Ok(Vec::new()),
        }
    }
    let bundle = ResultsBundle {
        evaluation: section(&a.evaluation, m)?,
        agreement: section(&a.agreement, m)?,
        confidence: section(&a.confidence, m)?,
        modes: section(&a.modes, m)?,
        senses: section(&a.senses, m)?,
    };
    if bundle.is_empty() {
        return Err(CliError::Usage(
            "nothing to report; pass at least one of --evaluation, --agreement, --confidence, --modes, --senses".into(),
        ));
    }
    let mut formats = a.formats.clone();
    formats.sort();
    formats.dedup();
    let mut written = Vec::new();
    for f in formats {
        written.extend(emit_report(&bundle, f, &a.out_dir)?);
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_segments_are_stripped() {
        assert_eq!(model_of("gpt-4o:run2:prompt-base"), "gpt-4o:prompt-base");
        assert_eq!(model_of("nb:count:1-2"), "nb:count:1-2");
        assert_eq!(model_of("human:runner"), "human:runner");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["focalize", "segment", "--bogus"]), 1);
        assert_eq!(run(["focalize", "frobnicate"]), 1);
        assert_eq!(run(["focalize", "--help"]), 0);
    }

    #[test]
    fn data_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.jsonl");
        let missing = dir.path().join("missing.txt");
        let argv = ["focalize", "segment", "--in", missing.to_str().unwrap(), "--out", out.to_str().unwrap()];
        assert_eq!(run(argv), 2);
    }

    #[test]
    fn sets_parse() {
        assert_eq!(
            parse_set("gpt=a, b").unwrap(),
            ("gpt".to_string(), vec!["a".to_string(), "b".to_string()])
        );
        assert!(parse_set("novalue").is_err());
        assert!(parse_set("x=").is_err());
    }
}
