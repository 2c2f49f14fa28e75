//! The `ami-screen` command line.
//!
//! ```text
//! ami-screen select   --data cohort.csv [--k 10,15,20,25,30] [--vote-threshold 3]
//! ami-screen train    --data cohort.csv [--family SVM] [--grid SVM|none] [--folds 5]
//! ami-screen evaluate --artifact out/model.amiscrn --data cohort.csv
//! ami-screen predict  --artifact out/model.amiscrn --answers answers.csv
//! ami-screen serve    [--artifact out/model.amiscrn] [--catalog catalog.json] [--bind 127.0.0.1:8080]
//! ```
//!
//! Every flag can also be set through an `AMISCREEN_` environment variable
//! (`AMISCREEN_SEED`, `AMISCREEN_DATA`, ...).
//!
//! | exit | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success                                              |
//! | 1    | usage error, unknown family, I/O failure             |
//! | 2    | schema or data error                                 |
//! | 3    | feature selection error                              |
//! | 4    | a classifier failed to converge                      |
//! | 5    | artifact schema hash differs from the data's schema  |
//! | 6    | answers file is missing, has or misreads a feature   |

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{ArtifactError, ModelArtifact, TrainingMetadata};
use crate::catalog::QuestionCatalog;
use crate::classifiers::{label_from_proba, ClassifierSpec, Family, ModelError};
use crate::data::{self, label_name, DataError, Dataset, Schema, ID_COLUMN};
use crate::evaluation::{self, EvaluationReport, Phase};
use crate::model_selection::{self, FoldPlan, Metric, ParamGrid, SearchError, SearchResult};
use crate::pipeline::{FittedPipeline, FittedScaler, PipelineError, ScalingConfig, StandardizeScope};
use crate::selection::{self, SelectionConfig, SelectionError, SelectionReport, DEFAULT_FEATURE_MASK, DEFAULT_KS};
use crate::service::{self, ServiceState};

pub const SELECTION_FILE: &str = "selection.json";
pub const MODEL_FILE: &str = "model.amiscrn";
pub const SEARCH_FILE: &str = "search.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Search(SearchError),
    #[error(transparent)]
    Artifact(ArtifactError),
    #[error("{0}")]
    Answers(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Other(_) => 1,
            CliError::Data(_) => 2,
            CliError::Selection(_) => 3,
            CliError::Model(e) => model_exit(e),
            CliError::Search(e) => match e.model_error() {
                Some(m) => model_exit(m),
                None => match e {
                    SearchError::Fold { source: PipelineError::Data(_), .. } | SearchError::Folds { .. } => 2,
                    _ => 1,
                },
            },
            CliError::Artifact(ArtifactError::SchemaMismatch { .. }) => 5,
            CliError::Artifact(_) => 1,
            CliError::Answers(_) => 6,
        }
    }
}

fn model_exit(e: &ModelError) -> i32 {
    match e {
        ModelError::Convergence { .. } => 4,
        _ => 1,
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Data(d) => CliError::Data(d),
            PipelineError::Model(m) => CliError::Model(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Debug, Parser)]
#[command(name = "ami-screen", version, about = "Train, evaluate and serve questionnaire-based ASD screening models")]
pub struct Cli {
    /// Seed for every split, fold plan and stochastic learner.
    #[arg(long, global = true, env = "AMISCREEN_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Schema JSON; defaults to the shipped AMI schema.
    #[arg(long, global = true, env = "AMISCREEN_SCHEMA")]
    pub schema: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "AMISCREEN_OUT", default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep K, run the three selectors on the training split and vote.
    Select(SelectArgs),
    /// Tune and fit a classifier, then write the model artifact.
    Train(TrainArgs),
    /// Score an artifact on the train and test parts of a dataset.
    Evaluate(EvaluateArgs),
    /// Screen rows of answers with an artifact.
    Predict(PredictArgs),
    /// Run the HTTP screening service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long, env = "AMISCREEN_DATA")]
    pub data: PathBuf,
    /// Comma-separated K values.
    #[arg(long, env = "AMISCREEN_K", value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Selectors that must agree (default: all three).
    #[arg(long, env = "AMISCREEN_VOTE_THRESHOLD")]
    pub vote_threshold: Option<usize>,
    #[arg(long, env = "AMISCREEN_TEST_FRACTION", default_value_t = 0.2)]
    pub test_fraction: f64,
    /// `all` or `numeric`: which columns the z-score step touches.
    #[arg(long, env = "AMISCREEN_STANDARDIZE", default_value = "all", value_parser = parse_scope)]
    pub standardize: StandardizeScope,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, env = "AMISCREEN_DATA")]
    pub data: PathBuf,
    #[arg(long, env = "AMISCREEN_FAMILY", default_value = "SVM")]
    pub family: Family,
    /// Grid preset (a family code) or `none` to skip the search.
    #[arg(long, env = "AMISCREEN_GRID")]
    pub grid: Option<String>,
    #[arg(long, env = "AMISCREEN_FOLDS", default_value_t = model_selection::DEFAULT_FOLDS)]
    pub folds: usize,
    /// Plain K-fold instead of stratified.
    #[arg(long, env = "AMISCREEN_NO_STRATIFY")]
    pub no_stratify: bool,
    #[arg(long, env = "AMISCREEN_TEST_FRACTION", default_value_t = 0.2)]
    pub test_fraction: f64,
    /// `vote` (the K-voted set), `shipped` (the fixed 20-item mask), `all`,
    /// or comma-separated codes.
    #[arg(long, env = "AMISCREEN_MASK", default_value = "vote")]
    pub mask: String,
    /// K used by `--mask vote`.
    #[arg(long, env = "AMISCREEN_K", default_value_t = 25)]
    pub k: usize,
    #[arg(long, env = "AMISCREEN_VOTE_THRESHOLD")]
    pub vote_threshold: Option<usize>,
    #[arg(long, env = "AMISCREEN_METRIC", default_value = "accuracy")]
    pub metric: Metric,
    #[arg(long, env = "AMISCREEN_STANDARDIZE", default_value = "all", value_parser = parse_scope)]
    pub standardize: StandardizeScope,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, env = "AMISCREEN_ARTIFACT")]
    pub artifact: PathBuf,
    #[arg(long, env = "AMISCREEN_DATA")]
    pub data: PathBuf,
    /// Overrides the split recorded in the artifact.
    #[arg(long, env = "AMISCREEN_TEST_FRACTION")]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, env = "AMISCREEN_ARTIFACT")]
    pub artifact: PathBuf,
    /// CSV with one column per mask feature (an ID column is allowed).
    #[arg(long, env = "AMISCREEN_ANSWERS")]
    pub answers: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "AMISCREEN_ARTIFACT")]
    pub artifact: Option<PathBuf>,
    #[arg(long, env = "AMISCREEN_CATALOG")]
    pub catalog: Option<PathBuf>,
    #[arg(long, env = "AMISCREEN_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Serve every catalog item rather than the model's mask.
    #[arg(long, env = "AMISCREEN_FULL_CATALOG")]
    pub full_catalog: bool,
}

fn parse_scope(s: &str) -> Result<StandardizeScope, String> {
    match s {
        "all" => Ok(StandardizeScope::AllColumns),
        "numeric" => Ok(StandardizeScope::NumericOnly),
        _ => Err(format!("expected `all` or `numeric`, got `{s}`")),
    }
}

/// Which features a model is trained on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskChoice {
    Shipped,
    Vote { k: usize },
    All,
    Codes(Vec<String>),
}

impl MaskChoice {
    pub fn parse(s: &str, k: usize) -> Self {
        match s {
            "shipped" => MaskChoice::Shipped,
            "vote" => MaskChoice::Vote { k },
            "all" => MaskChoice::All,
            list => MaskChoice::Codes(list.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect()),
        }
    }
}

/// Settings shared by the library entry points behind the subcommands.
/// The defaults follow the reference protocol: 80:20 stratified split,
/// K sweep {10, 15, 20, 25, 30} with a unanimous vote, the K = 25 voted
/// mask, 5-fold stratified grid search on accuracy, then a refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub ks: Vec<usize>,
    pub vote_threshold: Option<usize>,
    pub family: Family,
    /// `None` trains without search.
    pub grid: Option<Family>,
    pub n_folds: usize,
    pub stratified: bool,
    pub test_fraction: f64,
    pub mask: MaskChoice,
    pub metric: Metric,
    pub scaling: ScalingConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ks: DEFAULT_KS.to_vec(),
            vote_threshold: None,
            family: Family::Svm,
            grid: Some(Family::Svm),
            n_folds: model_selection::DEFAULT_FOLDS,
            stratified: true,
            test_fraction: 0.2,
            mask: MaskChoice::Vote { k: 25 },
            metric: Metric::Accuracy,
            scaling: ScalingConfig::default(),
            seed: 42,
        }
    }
}

impl PipelineConfig {
    /// Default config for `family`, searching its preset grid (none for
    /// naive Bayes, which has nothing to tune).
    pub fn for_family(family: Family) -> Self {
        PipelineConfig { family, grid: (family != Family::Gnb).then_some(family), ..Self::default() }
    }
}

/// Train/test parts under `config`; a zero fraction keeps every row for training.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Option<Dataset>), CliError> {
    if test_fraction == 0.0 {
        return Ok((data.clone(), None));
    }
    let (train, test) = data::stratified_split(data, test_fraction, seed)?;
    Ok((train, Some(test)))
}

/// Runs the K sweep on the training part of `data`.
pub fn cmd_select(config: &PipelineConfig, data: &Dataset) -> Result<SelectionReport, CliError> {
    let (train, _) = split(data, config.test_fraction, config.seed)?;
    let scaler = FittedScaler::fit(train.x(), &train.schema().kinds(), &config.scaling)?;
    let scaled = scaler.transform(train.x())?;
    let selection_config = SelectionConfig {
        ks: config.ks.clone(),
        vote_threshold: config.vote_threshold,
        rfe_estimator: selection::rfe_estimator(),
    };
    Ok(selection::sweep_k(train.x(), scaled.view(), train.y(), train.schema(), &selection_config)?)
}

fn resolve_mask(config: &PipelineConfig, train: &Dataset) -> Result<Vec<String>, CliError> {
    let schema = train.schema();
    let codes = match &config.mask {
        MaskChoice::Shipped => DEFAULT_FEATURE_MASK.iter().map(|s| s.to_string()).collect(),
        MaskChoice::All => schema.codes(),
        MaskChoice::Codes(c) => c.clone(),
        MaskChoice::Vote { k } => {
            let scaler = FittedScaler::fit(train.x(), &schema.kinds(), &config.scaling)?;
            let scaled = scaler.transform(train.x())?;
            let sc = SelectionConfig { ks: vec![*k], vote_threshold: config.vote_threshold, rfe_estimator: selection::rfe_estimator() };
            let report = selection::sweep_k(train.x(), scaled.view(), train.y(), schema, &sc)?;
            let voted = report.voted(*k).unwrap_or_default().to_vec();
            if voted.is_empty() {
                return Err(CliError::Selection(SelectionError::Threshold { threshold: config.vote_threshold.unwrap_or(3), sets: 3 }));
            }
            voted
        }
    };
    if codes.is_empty() {
        return Err(CliError::Usage("the feature mask is empty".into()));
    }
    // Mask columns follow schema order.
    let mut indexed = Vec::with_capacity(codes.len());
    for code in codes {
        let idx = schema.index_of(&code).ok_or_else(|| DataError::Schema(format!("mask feature `{code}` is not in schema {}", schema.name)))?;
        indexed.push((idx, code));
    }
    indexed.sort();
    indexed.dedup();
    Ok(indexed.into_iter().map(|(_, c)| c).collect())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub search: Option<SearchResult>,
}

/// Split, mask, search (unless disabled) and refit on the training part.
pub fn cmd_train(config: &PipelineConfig, data: &Dataset) -> Result<TrainOutcome, CliError> {
    let (train, _) = split(data, config.test_fraction, config.seed)?;
    let mask = resolve_mask(config, &train)?;
    let masked = train.select_features(&mask)?;
    let (model, search): (FittedPipeline, Option<SearchResult>) = match config.grid {
        None => {
            let spec = ClassifierSpec::production_default(config.family, config.seed);
            (FittedPipeline::fit(&spec, &train, &mask, &config.scaling)?, None)
        }
        Some(grid_family) => {
            if grid_family != config.family {
                return Err(CliError::Usage(format!("grid preset {grid_family} does not match family {}", config.family)));
            }
            let grid = ParamGrid::preset(grid_family);
            let plan: FoldPlan = if config.stratified {
                model_selection::make_folds(masked.y(), config.n_folds, config.seed)
            } else {
                model_selection::make_folds_unstratified(masked.n_rows(), config.n_folds, config.seed)
            }
            .map_err(CliError::Search)?;
            let (result, model) =
                model_selection::grid_search(&grid, &masked, &plan, config.metric, &config.scaling, config.seed).map_err(CliError::Search)?;
            (model, Some(result))
        }
    };
    let metadata = TrainingMetadata {
        seed: config.seed,
        test_fraction: config.test_fraction,
        n_train_rows: train.n_rows(),
        scaling: config.scaling,
        grid_preset: config.grid.map(|f| f.code().to_string()),
        cv_metric: search.as_ref().map(|s| s.metric),
        cv_score: search.as_ref().map(|s| s.best_mean_score),
    };
    Ok(TrainOutcome { artifact: ModelArtifact::new(model, data.schema(), metadata), search })
}

/// Train and (when the artifact recorded a split) test reports.
pub fn cmd_evaluate(artifact: &ModelArtifact, data: &Dataset, test_fraction: Option<f64>) -> Result<Vec<EvaluationReport>, CliError> {
    artifact.check_schema(data.schema()).map_err(CliError::Artifact)?;
    let fraction = test_fraction.unwrap_or(artifact.header.metadata.test_fraction);
    let (train, test) = split(data, fraction, artifact.header.metadata.seed)?;
    let mut reports = Vec::new();
    for (part, phase) in [(Some(train), Phase::Train), (test, Phase::Test)] {
        let Some(part) = part else { continue };
        let p = artifact.pipeline.positive_proba_dataset(&part)?;
        reports.push(evaluation::report_from_proba(part.y(), &p, phase).map_err(|e| CliError::Other(e.to_string()))?);
    }
    Ok(reports)
}

/// One `LABEL p=0.9712` line per answer row; `p` is the probability of
/// the printed label.
pub fn cmd_predict(artifact: &ModelArtifact, schema: &Schema, answers: &str) -> Result<Vec<String>, CliError> {
    artifact.check_schema(schema).map_err(CliError::Artifact)?;
    if answers.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(answers.as_bytes());
    let headers: Vec<String> = reader.headers().map_err(|e| CliError::Answers(e.to_string()))?.iter().map(str::to_string).collect();
    let mask = artifact.mask();
    if let Some(unknown) = headers.iter().find(|h| *h != ID_COLUMN && !mask.contains(h)) {
        return Err(CliError::Answers(format!("column `{unknown}` is not a feature of this model")));
    }
    let mut columns = Vec::with_capacity(mask.len());
    for code in mask {
        let col = headers.iter().position(|h| h == code).ok_or_else(|| CliError::Answers(format!("missing answer column `{code}`")))?;
        let spec = schema.feature(code).ok_or_else(|| CliError::Answers(format!("feature `{code}` is not in the schema")))?;
        columns.push((col, spec));
    }
    let mut lines = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Answers(e.to_string()))?;
        let mut values = Vec::with_capacity(columns.len());
        for (col, spec) in &columns {
            let raw = record.get(*col).unwrap_or("");
            let v = spec.encode(raw).map_err(|m| CliError::Answers(format!("row {}: feature `{}`: {m}", row + 1, spec.code)))?;
            values.push(v);
        }
        let x = Array2::from_shape_vec((1, values.len()), values).expect("one value per mask feature");
        let p = artifact.pipeline.positive_proba(x.view())?[0];
        let label = label_from_proba(p);
        let p_label = if label == data::ASD { p } else { 1.0 - p };
        lines.push(format!("{} p={p_label:.4}", label_name(label)));
    }
    Ok(lines)
}

fn load_schema(path: Option<&Path>) -> Result<Schema, CliError> {
    match path {
        Some(p) => Ok(Schema::from_json_file(p)?),
        None => Ok(Schema::ami()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(io(format!("cannot write {}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(format!("cannot create {}", dir.display())))
}

fn load_artifact(path: &Path) -> Result<ModelArtifact, CliError> {
    ModelArtifact::load(path).map_err(CliError::Artifact)
}

fn check_fraction(f: f64) -> Result<(), CliError> {
    if (0.0..1.0).contains(&f) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--test-fraction {f} must lie in [0, 1)")))
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let w = |out: &mut dyn Write, text: String| writeln!(out, "{text}").map_err(io("cannot write output"));
    match cli.command {
        Command::Select(a) => {
            check_fraction(a.test_fraction)?;
            let schema = load_schema(cli.schema.as_deref())?;
            let data = data::load_csv(&a.data, &schema)?;
            let config = PipelineConfig {
                ks: if a.k.is_empty() { DEFAULT_KS.to_vec() } else { a.k },
                vote_threshold: a.vote_threshold,
                test_fraction: a.test_fraction,
                scaling: ScalingConfig { standardize: a.standardize },
                seed: cli.seed,
                ..PipelineConfig::default()
            };
            let report = cmd_select(&config, &data)?;
            ensure_dir(&cli.out)?;
            write_json(&cli.out.join(SELECTION_FILE), &report)?;
            for (k, size) in report.voted_sizes() {
                w(out, format!("K={k:<3} voted={size}"))?;
            }
        }
        Command::Train(a) => {
            check_fraction(a.test_fraction)?;
            let grid = match a.grid.as_deref() {
                None => (a.family != Family::Gnb).then_some(a.family),
                Some(g) if g.eq_ignore_ascii_case("none") => None,
                Some(g) => Some(g.parse::<Family>().map_err(CliError::Usage)?),
            };
            let schema = load_schema(cli.schema.as_deref())?;
            let data = data::load_csv(&a.data, &schema)?;
            let config = PipelineConfig {
                vote_threshold: a.vote_threshold,
                family: a.family,
                grid,
                n_folds: a.folds,
                stratified: !a.no_stratify,
                test_fraction: a.test_fraction,
                mask: MaskChoice::parse(&a.mask, a.k),
                metric: a.metric,
                scaling: ScalingConfig { standardize: a.standardize },
                seed: cli.seed,
                ..PipelineConfig::default()
            };
            let outcome = cmd_train(&config, &data)?;
            ensure_dir(&cli.out)?;
            let model_path = cli.out.join(MODEL_FILE);
            outcome.artifact.save(&model_path).map_err(CliError::Artifact)?;
            match &outcome.search {
                Some(s) => {
                    write_json(&cli.out.join(SEARCH_FILE), s)?;
                    w(out, format!("searched {} candidates x {} folds", s.candidates.len(), s.n_folds))?;
                    w(out, format!("best {} mean {} {:.4}", s.best_spec.describe(), s.metric, s.best_mean_score))?;
                }
                None => w(out, format!("{} trained without search", a.family))?,
            }
            w(out, format!("wrote {}", model_path.display()))?;
        }
        Command::Evaluate(a) => {
            if let Some(f) = a.test_fraction {
                check_fraction(f)?;
            }
            let schema = load_schema(cli.schema.as_deref())?;
            let artifact = load_artifact(&a.artifact)?;
            let data = data::load_csv(&a.data, &schema)?;
            let reports = cmd_evaluate(&artifact, &data, a.test_fraction)?;
            ensure_dir(&cli.out)?;
            for r in &reports {
                write_json(&cli.out.join(format!("report_{}.json", r.phase)), r)?;
                let path = cli.out.join(format!("roc_{}.csv", r.phase));
                let file = fs::File::create(&path).map_err(io(format!("cannot write {}", path.display())))?;
                evaluation::write_roc_csv(file, &r.roc_points).map_err(|e| CliError::Other(e.to_string()))?;
            }
            let name = artifact.header.spec.family.code().to_string();
            let rows: Vec<(String, &EvaluationReport)> = reports.iter().map(|r| (name.clone(), r)).collect();
            write!(out, "{}", evaluation::render_table(&rows)).map_err(io("cannot write output"))?;
        }
        Command::Predict(a) => {
            let schema = load_schema(cli.schema.as_deref())?;
            let artifact = load_artifact(&a.artifact)?;
            let text = fs::read_to_string(&a.answers).map_err(|e| CliError::Answers(format!("cannot read {}: {e}", a.answers.display())))?;
            for line in cmd_predict(&artifact, &schema, &text)? {
                w(out, line)?;
            }
        }
        Command::Serve(a) => {
            let artifact = a.artifact.as_deref().map(load_artifact).transpose()?;
            let catalog = match &a.catalog {
                Some(p) => QuestionCatalog::from_file(p),
                None => Ok(QuestionCatalog::shipped()),
            }
            .map_err(|e| CliError::Data(DataError::Schema(e.to_string())))?;
            let state = ServiceState::new(artifact, catalog, a.full_catalog).map_err(|e| CliError::Data(DataError::Schema(e.to_string())))?;
            let runtime = tokio::runtime::Runtime::new().map_err(io("cannot start the async runtime"))?;
            runtime.block_on(service::serve(a.bind, Arc::new(state))).map_err(io(format!("cannot serve on {}", a.bind)))?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. Regular output goes to `out`, diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_with(std::env::args_os(), &mut out, &mut err)
}
