//! Command-line front end.
//!
//! Settings precedence, lowest first: built-in defaults, the JSON file given
//! with `--config`, then explicit flags.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use survconf_core::sim::StudyConfig;
use survconf_core::{
    split_validate, CensoringKind, ConformalConfig, RandomStream, Sidedness, SplitSummary, WorkingModelKind,
};

use crate::error::{AppError, AppResult};
use crate::io::{comment_header, ingest_covariates, ingest_csv, lengths_csv, report_csv, write_intervals};
use crate::model::{FitSettings, ModelRecord};
use crate::study::{preset, run_study_parallel, PRESETS};

#[derive(Debug, Parser)]
#[command(
    name = "survconf",
    version,
    about = "Bootstrap conformal prediction intervals for right-censored survival times"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a working model, calibrate it and write a model file.
    Fit(FitArgs),
    /// Write one interval per covariate row of a CSV.
    Predict(PredictArgs),
    /// Run a synthetic coverage study.
    Simulate(SimulateArgs),
    /// Repeated train/test split validation on a dataset.
    Validate(ValidateArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WorkingModelArg {
    Cox,
    Weibull,
    Lognormal,
}

impl From<WorkingModelArg> for WorkingModelKind {
    fn from(a: WorkingModelArg) -> Self {
        match a {
            WorkingModelArg::Cox => WorkingModelKind::Cox,
            WorkingModelArg::Weibull => WorkingModelKind::Weibull,
            WorkingModelArg::Lognormal => WorkingModelKind::Lognormal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CensoringArg {
    Marginal,
    Stratified,
    Regression,
}

impl From<CensoringArg> for CensoringKind {
    fn from(a: CensoringArg) -> Self {
        match a {
            CensoringArg::Marginal => CensoringKind::Marginal,
            CensoringArg::Stratified => CensoringKind::Stratified,
            CensoringArg::Regression => CensoringKind::Regression,
        }
    }
}

/// Calibration settings shared by `fit` and `validate`.
#[derive(Debug, Args)]
pub struct CalibrationFlags {
    /// JSON settings file (seed, alpha, B, working_model, censoring, sidedness,
    /// truncate_at_eta, refit_per_replicate). Flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Miscoverage level in (0, 1] [default: 0.1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of bootstrap scores, at least 100 [default: 2000]
    #[arg(long = "B", value_name = "B")]
    pub b: Option<usize>,
    /// Working model [default: cox]
    #[arg(long, value_enum)]
    pub working_model: Option<WorkingModelArg>,
    /// Censoring distribution estimate used for the weights [default: marginal]
    #[arg(long, value_enum)]
    pub censoring: Option<CensoringArg>,
    /// Predict min(T, eta) instead of T.
    #[arg(long)]
    pub truncate_at_eta: bool,
    /// Lower prediction bound only.
    #[arg(long)]
    pub one_sided: bool,
    /// Refit the working model for every bootstrap score.
    #[arg(long)]
    pub refit_per_replicate: bool,
    /// Random seed [default: 2024]
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CalibrationFlags {
    fn as_settings(&self) -> FitSettings {
        FitSettings {
            seed: self.seed,
            alpha: self.alpha,
            b: self.b,
            working_model: self.working_model.map(Into::into),
            censoring: self.censoring.map(Into::into),
            sidedness: self.one_sided.then_some(Sidedness::LowerOnly),
            truncate_at_eta: self.truncate_at_eta.then_some(true),
            refit_per_replicate: self.refit_per_replicate.then_some(true),
        }
    }

    pub fn resolve(&self) -> AppResult<(ConformalConfig, u64)> {
        let file = match &self.config {
            Some(p) => FitSettings::from_json(&read_text(p)?)?,
            None => FitSettings::default(),
        };
        let s = file.overlay(self.as_settings());
        Ok((s.conformal()?, s.seed()))
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training CSV with time, event, optional site and covariate columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub calibration: CalibrationFlags,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of covariate rows, columns named as in the training data.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Miscoverage level, overriding the model's.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Elapsed survival time; intervals are for T given T > c_L.
    #[arg(long = "c-l", value_name = "TIME", default_value_t = 0.0)]
    pub c_l: f64,
    /// Lower prediction bound only.
    #[arg(long)]
    pub one_sided: bool,
    /// Predict min(T, eta) instead of T.
    #[arg(long)]
    pub truncate_at_eta: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Named study configuration.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS), conflicts_with = "config")]
    pub preset: Option<String>,
    /// Full study configuration as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for report.json, report.csv and lengths.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of replications.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "B", value_name = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Training rows per replication.
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Testing rows per replication.
    #[arg(long)]
    pub n_test: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Summary JSON to write; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of random splits.
    #[arg(long, default_value_t = 100)]
    pub splits: usize,
    /// Training share of each split.
    #[arg(long, default_value_t = 0.7)]
    pub split_fraction: f64,
    #[command(flatten)]
    pub calibration: CalibrationFlags,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory holding one JSON file per model.
    #[arg(long, default_value = "models")]
    pub data_dir: PathBuf,
}

fn read_text(p: &Path) -> AppResult<String> {
    std::fs::read_to_string(p).map_err(|e| AppError::io(p, e))
}

fn open(p: &Path) -> AppResult<BufReader<File>> {
    File::open(p).map(BufReader::new).map_err(|e| AppError::io(p, e))
}

fn write_file(p: &Path, bytes: &[u8]) -> AppResult<()> {
    std::fs::write(p, bytes).map_err(|e| AppError::io(p, e))
}

fn compact<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

pub fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Simulate(a) => simulate(a),
        Command::Validate(a) => validate(a),
        Command::Serve(a) => crate::service::serve(&a.host, a.port, a.data_dir),
    }
}

fn fit(a: FitArgs) -> AppResult<()> {
    let (cfg, seed) = a.calibration.resolve()?;
    let data = ingest_csv(open(&a.input)?)?;
    let record = ModelRecord::fit(data, cfg, seed)?;
    write_file(&a.out, record.to_json().as_bytes())
}

fn predict(a: PredictArgs) -> AppResult<()> {
    let record = ModelRecord::load(&a.model)?;
    let cfg = record.request_config(
        a.alpha,
        a.one_sided.then_some(Sidedness::LowerOnly),
        a.truncate_at_eta.then_some(true),
    )?;
    let xs = ingest_covariates(open(&a.input)?, &record.covariate_names)?;
    let intervals = record.predict_many(&xs, &cfg, a.c_l)?;
    let header = comment_header(&[
        ("model", record.id.clone()),
        ("seed", record.seed.to_string()),
        ("config", compact(&cfg)),
    ]);
    let mut buf = Vec::new();
    write_intervals(&mut buf, &header, &intervals)?;
    match &a.out {
        Some(p) => write_file(p, &buf),
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| AppError::io("<stdout>", e)),
    }
}

/// Study configuration for `simulate`: preset or file, then flag overrides.
pub fn study_config(a: &SimulateArgs) -> AppResult<StudyConfig> {
    let mut study = match (&a.preset, &a.config) {
        (Some(name), _) => preset(name).ok_or_else(|| AppError::Config(format!("unknown preset '{name}'")))?,
        (None, Some(p)) => serde_json::from_str(&read_text(p)?).map_err(|e| AppError::Config(e.to_string()))?,
        (None, None) => preset(PRESETS[0]).expect("built-in preset"),
    };
    let g = &mut study.generative;
    if let Some(v) = a.reps {
        g.n_reps = v;
    }
    if let Some(v) = a.seed {
        g.seed = v;
    }
    if let Some(v) = a.n_train {
        g.n_train = v;
    }
    if let Some(v) = a.n_test {
        g.n_test = v;
    }
    if let Some(v) = a.b {
        study.b = v;
    }
    if let Some(v) = a.alpha {
        study.alpha = v;
    }
    study.generative.validate()?;
    study
        .conformal_config(WorkingModelKind::Cox, CensoringKind::Marginal)
        .validate()?;
    Ok(study)
}

fn simulate(a: SimulateArgs) -> AppResult<()> {
    let study = study_config(&a)?;
    let report = run_study_parallel(&study)?;
    std::fs::create_dir_all(&a.out).map_err(|e| AppError::io(&a.out, e))?;
    let header = comment_header(&[("seed", study.generative.seed.to_string()), ("config", compact(&study))]);
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_file(&a.out.join("report.json"), json.as_bytes())?;
    write_file(&a.out.join("report.csv"), report_csv(&header, &report).as_bytes())?;
    write_file(&a.out.join("lengths.csv"), lengths_csv(&header, &report).as_bytes())
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    seed: u64,
    config: ConformalConfig,
    splits: usize,
    split_fraction: f64,
    n_rows: usize,
    summary: SplitSummary,
}

fn validate(a: ValidateArgs) -> AppResult<()> {
    let (cfg, seed) = a.calibration.resolve()?;
    let data = ingest_csv(open(&a.input)?)?;
    let summary = split_validate(&data, &cfg, a.splits, a.split_fraction, RandomStream::new(seed, 0))?;
    let report = ValidationReport {
        seed,
        config: cfg,
        splits: a.splits,
        split_fraction: a.split_fraction,
        n_rows: data.len(),
        summary,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    match &a.out {
        Some(p) => write_file(p, json.as_bytes()),
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| AppError::io("<stdout>", e)),
    }
}

/// Entry point used by the binary: parses arguments and reports failures as
/// JSON on stderr. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let body = crate::error::ErrorBody {
                code: "usage".into(),
                message: e.kind().to_string(),
                detail: serde_json::Value::String(e.render().to_string()),
            };
            eprintln!("{}", compact(&body));
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", compact(&e.body()));
            1
        }
    }
}
