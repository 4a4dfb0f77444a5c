//! Command-line front end: generate, featurize, train, predict, evaluate,
//! explain.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::dataset;
use crate::ebm::{self, EbmModel, Profile, TrainConfig};
use crate::error::{Error, Result};
use crate::eval;
use crate::explain::{self, ReportDocument, ReportFormat};
use crate::features::{self, Case, FeatureConfig, FeatureMatrix};
use crate::synthgen::{self, SynthConfig};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (model format 1)");

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pestcast", version = VERSION, about = "Pest-presence prediction with an explainable boosting machine")]
pub struct Cli {
    /// Worker threads for training and evaluation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with `features`, `train` and `synth` sections; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic trap network as CSV files.
    Generate(GenerateArgs),
    /// Join raw CSVs and build the feature matrix.
    Featurize(FeaturizeArgs),
    /// Train a model on a feature matrix.
    Train(TrainArgs),
    /// Predict presence probabilities for every matrix row.
    Predict(PredictArgs),
    /// Repeated random splits or leave-one-trap-out evaluation.
    Evaluate(EvaluateArgs),
    /// Global importance, or a local explanation of one row.
    Explain(ExplainArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Zero every covariate coefficient.
    #[arg(long)]
    pub null_signal: bool,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub traps: PathBuf,
    #[arg(long)]
    pub weather: PathBuf,
    #[arg(long)]
    pub vi: PathBuf,
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub window_days: Option<u32>,
    #[arg(long)]
    pub n_lags: Option<usize>,
    #[arg(long)]
    pub action_threshold: Option<u32>,
    /// Label presence only when catches exceed the threshold.
    #[arg(long)]
    pub strict_threshold: bool,
    /// Also write the rejected instances with reasons.
    #[arg(long)]
    pub rejected_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    A,
    B,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Case {
        match c {
            CaseArg::A => Case::A,
            CaseArg::B => Case::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Desk,
    Full,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Profile {
        match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Full => Profile::Full,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct ModelOptions {
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub outer_bags: Option<usize>,
    #[arg(long)]
    pub inner_bags: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub interactions: Option<usize>,
    #[arg(long)]
    pub max_bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    #[arg(long)]
    pub model_out: PathBuf,
    #[command(flatten)]
    pub model: ModelOptions,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Random,
    Loto,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    #[arg(long, value_enum, default_value = "random")]
    pub mode: EvalMode,
    #[arg(long, default_value_t = 10)]
    pub splits: usize,
    #[arg(long, default_value_t = 0.7)]
    pub train_frac: f64,
    /// Held-out trap for `--mode loto`.
    #[arg(long)]
    pub trap_id: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Error and all-instance catch histograms of the random-split test sets.
    #[arg(long)]
    pub histogram_out: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub bin_width: u32,
    #[command(flatten)]
    pub model: ModelOptions,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub matrix: PathBuf,
    /// Row index for a local explanation; global importance when absent.
    #[arg(long)]
    pub row: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "json")]
    pub format: String,
}

/// Contents of the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub features: Option<FeatureConfig>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Argument(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Argument(format!("config {}: {e}", path.display())))
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Argument(format!("input file {} does not exist", path.display())))
    }
}

fn train_config(file: &FileConfig, opts: &ModelOptions) -> Result<TrainConfig> {
    let mut cfg = file.train.clone().unwrap_or_else(TrainConfig::desk);
    if let Some(p) = opts.profile {
        let prof = TrainConfig::for_profile(p.into());
        cfg.outer_bags = prof.outer_bags;
        cfg.inner_bags = prof.inner_bags;
        cfg.boosting_rounds = prof.boosting_rounds;
    }
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if let Some(v) = opts.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = opts.outer_bags {
        cfg.outer_bags = v;
    }
    if let Some(v) = opts.inner_bags {
        cfg.inner_bags = v;
    }
    if let Some(v) = opts.rounds {
        cfg.boosting_rounds = v;
    }
    if let Some(v) = opts.interactions {
        cfg.n_interactions = v;
    }
    if let Some(v) = opts.max_bins {
        cfg.max_bins = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_matrix(path: &Path, case: Option<CaseArg>) -> Result<FeatureMatrix> {
    let m = FeatureMatrix::load(path)?;
    match case {
        Some(c) => m.for_case(c.into()),
        None => Ok(m),
    }
}

fn cmd_generate(file: &FileConfig, a: &GenerateArgs) -> Result<()> {
    let mut cfg = file.synth.clone().unwrap_or_default();
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.null_signal {
        cfg = cfg.null_signal();
    }
    let data = synthgen::generate(&cfg)?;
    data.write_to_dir(&a.out_dir)?;
    eprintln!(
        "wrote {} visits, {} weather days, {} index records to {}",
        data.traps.len(),
        data.weather.len(),
        data.vi.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn cmd_featurize(file: &FileConfig, a: &FeaturizeArgs) -> Result<()> {
    for p in [&a.traps, &a.weather, &a.vi] {
        require_file(p)?;
    }
    let mut cfg = file.features.clone().unwrap_or_default();
    if let Some(c) = a.case {
        cfg.case = c.into();
    }
    if let Some(v) = a.window_days {
        cfg.window_days = v;
    }
    if let Some(v) = a.n_lags {
        cfg.n_lags = v;
    }
    if let Some(v) = a.action_threshold {
        cfg.action_threshold = v;
    }
    if a.strict_threshold {
        cfg.strict_threshold = true;
    }
    cfg.validate()?;
    let traps = dataset::load_trap_csv(&a.traps)?;
    let weather = dataset::load_weather_csv(&a.weather)?;
    let vi = dataset::load_vi_csv(&a.vi)?;
    let assembly = dataset::assemble_raw_instances(&traps, &weather, &vi, cfg.window_days, cfg.n_lags)?;
    let matrix = features::build_feature_matrix(&assembly.instances, &cfg)?;
    matrix.save(&a.out)?;
    if let Some(path) = &a.rejected_out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["trap_id", "date", "reason"])?;
        for r in &assembly.rejected {
            w.write_record([r.trap_id.clone(), r.date.format("%Y-%m-%d").to_string(), r.reason.to_string()])?;
        }
        w.flush()?;
    }
    eprintln!(
        "{} instances ({} rejected), {} columns, prevalence {:.3}",
        matrix.n_rows(),
        assembly.rejected.len(),
        matrix.n_cols(),
        matrix.prevalence()
    );
    Ok(())
}

fn cmd_train(file: &FileConfig, a: &TrainArgs) -> Result<()> {
    require_file(&a.matrix)?;
    let cfg = train_config(file, &a.model)?;
    let matrix = load_matrix(&a.matrix, a.case)?;
    let report = ebm::train_with_report(&matrix, &cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    report.model.save(&a.model_out)?;
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    require_file(&a.model)?;
    require_file(&a.matrix)?;
    let model = EbmModel::load(&a.model)?;
    let matrix = FeatureMatrix::load(&a.matrix)?;
    let rows = model.aligned_rows(&matrix)?;
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["trap_id", "date", "logit", "pred_proba", "pred_class"])?;
    for (row, meta) in rows.iter().zip(&matrix.meta) {
        let logit = model.predict_logit(row)?;
        let p = ebm::sigmoid(logit);
        w.write_record([
            meta.trap_id.clone(),
            meta.date.format("%Y-%m-%d").to_string(),
            format!("{logit:.16e}"),
            format!("{p:.16e}"),
            u8::from(p >= eval::CUTOFF).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_evaluate(file: &FileConfig, a: &EvaluateArgs) -> Result<()> {
    require_file(&a.matrix)?;
    let cfg = train_config(file, &a.model)?;
    let matrix = load_matrix(&a.matrix, a.case)?;
    match a.mode {
        EvalMode::Random => {
            let result = eval::repeated_random_split_eval(&matrix, &cfg, a.splits, a.train_frac, cfg.seed)?;
            result.summary.save(&a.out)?;
            if let Some(path) = &a.histogram_out {
                let hist = eval::error_catch_histogram(&result.predictions(&matrix), a.bin_width)?;
                crate::json::write_file(path, &hist)?;
            }
            let s = &result.summary;
            eprintln!(
                "case {}: accuracy {:.3} ± {:.3}, auc {:.3} ± {:.3}",
                s.case, s.accuracy.mean, s.accuracy.std, s.auc.mean, s.auc.std
            );
        }
        EvalMode::Loto => {
            let trap = a
                .trap_id
                .as_deref()
                .ok_or_else(|| Error::Argument("--mode loto requires --trap-id".into()))?;
            let series = eval::leave_one_trap_out_eval(&matrix, &cfg, trap)?;
            series.write_csv(&a.out)?;
        }
    }
    Ok(())
}

fn cmd_explain(a: &ExplainArgs) -> Result<()> {
    require_file(&a.model)?;
    require_file(&a.matrix)?;
    let format: ReportFormat = a.format.parse()?;
    let model = EbmModel::load(&a.model)?;
    let matrix = FeatureMatrix::load(&a.matrix)?;
    let doc = match a.row {
        None => ReportDocument::from(&explain::global_importance(&model, &matrix)?),
        Some(k) => {
            let rows = model.aligned_rows(&matrix)?;
            let row = rows
                .get(k)
                .ok_or_else(|| Error::Argument(format!("row {k} out of range (matrix has {} rows)", rows.len())))?;
            ReportDocument::from(&explain::local_explanation(&model, row)?)
        }
    };
    explain::export_report(&doc, &a.out, format)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let dispatch = || match &cli.command {
        Command::Generate(a) => cmd_generate(&file, a),
        Command::Featurize(a) => cmd_featurize(&file, a),
        Command::Train(a) => cmd_train(&file, a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(&file, a),
        Command::Explain(a) => cmd_explain(a),
    };
    match cli.threads {
        Some(0) => Err(Error::Argument("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?
            .install(dispatch),
        None => dispatch(),
    }
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}
