//! Argument parsing and the subcommands.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use firmsurv_core::classifiers::Algorithm;
use firmsurv_core::cox::{ModelSpec, Ties};
use firmsurv_core::dataset::{self, CsvOptions};
use firmsurv_core::Dataset;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::run_pipeline;
use crate::report::{self, emit_report};
use crate::stages;

#[derive(Debug, Parser)]
#[command(
    name = "firmsurv",
    version,
    about = "Classify firms with an abstaining classifier mixture and compare survival of the predicted groups"
)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

/// Settings every stage command accepts.
#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file (same format as for `pipeline`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set smote.k=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Schema sidecar for the input data (default: `<input>.schema`).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// CSV field separator.
    #[arg(long)]
    pub delimiter: Option<char>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic firm register and its schema sidecar.
    Simulate(SimulateArgs),
    /// Missing-value triage of one sample, or of two samples harmonized together.
    Clean(CleanArgs),
    /// Random holdout split of a labelled sample.
    Split(SplitArgs),
    /// SMOTE rebalancing of a training partition.
    Smote(SmoteArgs),
    /// Fit classifiers and save them as JSON.
    Train(TrainArgs),
    /// ROC, AUC and optimal cutoffs of saved classifiers on a test set.
    Evaluate(EvaluateArgs),
    /// Fit the weight of a two-classifier mixture on a test set.
    Mix(MixArgs),
    /// Label a sample INN / NOINN / UNCLASSIFIED with a saved mixture.
    Predict(PredictArgs),
    /// Kaplan-Meier curves and log-rank test by predicted label.
    Km(KmArgs),
    /// Cox proportional hazards models.
    Cox(CoxArgs),
    /// Run every stage end to end.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output CSV; the schema goes next to it with extension `.schema`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 18)]
    pub numeric: usize,
    #[arg(long, default_value_t = 2)]
    pub categorical: usize,
    #[arg(long, default_value_t = 0.05)]
    pub minority: f64,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.65)]
    pub hazard_ratio: f64,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Blank feature cells completely at random, with rates rising linearly
    /// from 0 to this value across the feature columns.
    #[arg(long, default_value_t = 0.0)]
    pub missing_max_rate: f64,
    #[arg(long, default_value_t = ';')]
    pub delimiter: char,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    /// Second sample to harmonize with the first.
    #[arg(long)]
    pub second: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Drop a feature missing in more than this fraction of either sample.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SmoteArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub smote_k: Option<usize>,
    /// Synthetic minority rows as a percentage of the minority count.
    #[arg(long)]
    pub smote_over: Option<u32>,
    /// Majority rows kept as a percentage of the synthetic count.
    #[arg(long)]
    pub smote_under: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Comma-separated subset of rpart,tree,ctree,bag,logit,nb,ann.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub test: PathBuf,
    /// Directory written by `train`.
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Two algorithms, e.g. `bag,ann` (default: the two best by test AUC).
    #[arg(long, value_delimiter = ',')]
    pub mix_components: Option<Vec<String>>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub cutoff_low: Option<f64>,
    #[arg(long)]
    pub cutoff_high: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    /// Mixture model written by `mix` (`<out-dir>/models/mixture.json`).
    #[arg(long)]
    pub mixture: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Override the cutoffs stored with the mixture.
    #[arg(long)]
    pub cutoff_low: Option<f64>,
    #[arg(long)]
    pub cutoff_high: Option<f64>,
}

#[derive(Debug, Args)]
pub struct KmArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    /// `labels.csv` written by `predict`, one row per input row.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Confidence level of the pointwise bands.
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CoxArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    /// Predicted labels; when given, the group column is built from them
    /// and unclassified rows are left out. Otherwise the input must already
    /// hold every formula variable.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Model formula such as `inno * sector`, optionally `label=formula`.
    /// Repeatable; replaces the configured suite.
    #[arg(long = "formula")]
    pub formulas: Vec<String>,
    #[arg(long)]
    pub ties: Option<String>,
    /// Drop design columns flagged by the separation screen before fitting.
    #[arg(long)]
    pub screen_separation: bool,
    /// Reference level as `variable=level`. Repeatable; replaces the
    /// configured references.
    #[arg(long = "reference", value_name = "VAR=LEVEL")]
    pub references: Vec<String>,
    /// File of `variable=level` lines (blank lines and `#` comments
    /// ignored); combined with any `--reference` flags, which win.
    #[arg(long = "references", value_name = "FILE")]
    pub references_file: Option<PathBuf>,
    #[arg(long)]
    pub group_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Labelled training-era CSV (default: synthetic data).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Second-era CSV to label.
    #[arg(long)]
    pub predict: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub delimiter: Option<char>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub smote_k: Option<usize>,
    #[arg(long)]
    pub smote_over: Option<u32>,
    #[arg(long)]
    pub smote_under: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub mix_components: Option<Vec<String>>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub cutoff_low: Option<f64>,
    #[arg(long)]
    pub cutoff_high: Option<f64>,
}

// ---------------------------------------------------------------------------

fn base_config(path: Option<&Path>, set: &[String]) -> CliResult<PipelineConfig> {
    let cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.with_overrides(set)
}

impl Common {
    fn resolve(&self) -> CliResult<(PipelineConfig, CsvOptions)> {
        let mut cfg = base_config(self.config.as_deref(), &self.set)?;
        if let Some(d) = self.delimiter {
            cfg.paths.delimiter = d;
        }
        let opts = stages::csv_options(cfg.paths.delimiter)?;
        Ok((cfg, opts))
    }

    fn load(&self, path: &Path, opts: CsvOptions) -> CliResult<Dataset> {
        Ok(stages::load_dataset(path, self.schema.as_deref(), opts)?)
    }
}

fn parse_algorithms(names: &[String]) -> CliResult<Vec<Algorithm>> {
    names
        .iter()
        .map(|n| {
            n.trim()
                .parse::<Algorithm>()
                .map_err(|e| CliError::usage(e.to_string()))
        })
        .collect()
}

fn finish(cfg: PipelineConfig) -> CliResult<PipelineConfig> {
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let spec = firmsurv_core::SyntheticSpec {
        n_rows: a.rows,
        n_numeric: a.numeric,
        n_categorical: a.categorical,
        minority_fraction: a.minority,
        class_separation: a.separation,
        hazard_ratio_true: a.hazard_ratio,
        censoring_horizon: a.horizon,
        seed: a.seed,
    };
    let mut data = dataset::generate_synthetic(&spec)?;
    if a.missing_max_rate > 0.0 {
        let rates = dataset::ramp_missing_rates(&data, a.missing_max_rate);
        data = dataset::inject_missing(
            &data,
            &rates,
            firmsurv_core::rng::derive_seed(a.seed, "simulate/missing"),
        )?;
    }
    stages::save_dataset(&data, &a.out, stages::csv_options(a.delimiter)?)?;
    println!("wrote {} rows to {}", data.n_rows(), a.out.display());
    Ok(())
}

fn clean(a: &CleanArgs) -> CliResult<()> {
    let (mut cfg, opts) = a.common.resolve()?;
    if let Some(t) = a.threshold {
        cfg.cleansing.harmonize_threshold = t;
    }
    let cfg = finish(cfg)?;
    let first = a.common.load(&a.input, opts)?;
    let second = a.second.as_deref().map(|p| a.common.load(p, opts)).transpose()?;
    let stem = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    };
    let (n1, n2) = (stem(&a.input), a.second.as_deref().map(stem));
    if n2.as_deref() == Some(n1.as_str()) {
        return Err(CliError::usage("--input and --second must have different file names"));
    }
    let out = stages::clean(&first, second.as_ref(), cfg.cleansing.harmonize_threshold)?;
    stages::save_dataset(&out.primary, &a.out_dir.join(format!("{n1}.csv")), opts)?;
    if let (Some(d), Some(n)) = (&out.secondary, n2) {
        stages::save_dataset(d, &a.out_dir.join(format!("{n}.csv")), opts)?;
    }
    stages::write_json(&a.out_dir.join("mva.json"), &out.report)?;
    println!("{}", serde_json::to_string_pretty(&out.report)?);
    Ok(())
}

fn split(a: &SplitArgs) -> CliResult<()> {
    let (mut cfg, opts) = a.common.resolve()?;
    if let Some(f) = a.train_fraction {
        cfg.split.train_fraction = f;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let cfg = finish(cfg)?;
    let data = a.common.load(&a.input, opts)?;
    let (train, test, summary) = stages::split(&data, cfg.split.train_fraction, cfg.seed)?;
    stages::save_dataset(&train, &a.out_dir.join("train.csv"), opts)?;
    stages::save_dataset(&test, &a.out_dir.join("test.csv"), opts)?;
    stages::write_json(&a.out_dir.join("split.json"), &summary)?;
    println!("train {} rows, test {} rows", summary.train.rows, summary.test.rows);
    Ok(())
}

fn smote(a: &SmoteArgs) -> CliResult<()> {
    let (mut cfg, opts) = a.common.resolve()?;
    if let Some(k) = a.smote_k {
        cfg.smote.k = k;
    }
    if let Some(o) = a.smote_over {
        cfg.smote.over_pct = o;
    }
    if let Some(u) = a.smote_under {
        cfg.smote.under_pct = u;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let cfg = finish(cfg)?;
    let data = a.common.load(&a.input, opts)?;
    let (out, summary) = stages::smote(&data, &cfg.smote, cfg.seed)?;
    stages::save_dataset(&out, &a.out_dir.join("train.csv"), opts)?;
    stages::write_json(&a.out_dir.join("smote.json"), &summary)?;
    println!(
        "{} rows ({} positive) -> {} rows ({} positive)",
        summary.before.rows, summary.before.positives, summary.after.rows, summary.after.positives
    );
    Ok(())
}

fn train(a: &TrainArgs) -> CliResult<()> {
    let (mut cfg, opts) = a.common.resolve()?;
    if let Some(names) = &a.algorithms {
        cfg.classifiers.algorithms = parse_algorithms(names)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let cfg = finish(cfg)?;
    let data = a.common.load(&a.input, opts)?;
    let (models, outcomes) = stages::train(&data, &cfg.classifiers, cfg.seed);
    stages::save_models(&a.out_dir, &models, &outcomes)?;
    for o in &outcomes {
        match &o.error {
            None => println!("{:<6} trained", o.algorithm),
            Some(e) => println!("{:<6} failed: {e}", o.algorithm),
        }
    }
    if models.is_empty() {
        return Err(firmsurv_core::Error::domain("no classifier trained successfully").into());
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let (_, opts) = a.common.resolve()?;
    let test = a.common.load(&a.test, opts)?;
    let (models, _) = stages::load_models(&a.models)?;
    let results = stages::evaluate(&models, &test)?;
    let metrics: Vec<_> = results.iter().map(|e| e.metrics.clone()).collect();
    let curves: Vec<_> = results.iter().map(|e| (e.metrics.algorithm, e.roc.clone())).collect();
    let histograms: Vec<_> = results.into_iter().map(|e| e.histogram).collect();
    report::write_evaluation(&a.out_dir, &metrics, &curves, &histograms)?;
    for m in &metrics {
        println!("{:<6} AUC {:.4}", m.algorithm, m.auc);
    }
    Ok(())
}

fn mix(a: &MixArgs) -> CliResult<()> {
    let (mut cfg, opts) = a.common.resolve()?;
    if let Some(names) = &a.mix_components {
        cfg.mixture.components = parse_algorithms(names)?;
    }
    if let Some(s) = a.grid_step {
        cfg.mixture.grid_step = s;
    }
    if let Some(c) = a.cutoff_low {
        cfg.mixture.cutoff_low = c;
    }
    if let Some(c) = a.cutoff_high {
        cfg.mixture.cutoff_high = c;
    }
    // components need only be trained, not listed in the config
    cfg.classifiers.algorithms = Algorithm::ALL.to_vec();
    let cfg = finish(cfg)?;
    let test = a.common.load(&a.test, opts)?;
    let (models, _) = stages::load_models(&a.models)?;
    let (model, file) = stages::mix(&models, &test, &cfg.mixture)?;
    report::write_mixture(&a.out_dir, &model, &file)?;
    let s = &file.summary;
    println!(
        "{} x {:.2} + {} x {:.2}: AUC {:.4}",
        s.components[0],
        s.alpha,
        s.components[1],
        1.0 - s.alpha,
        s.auc
    );
    Ok(())
}

fn predict(a: &PredictArgs) -> CliResult<()> {
    let (_, opts) = a.common.resolve()?;
    let mut model = stages::load_mixture(&a.mixture)?;
    if a.cutoff_low.is_some() || a.cutoff_high.is_some() {
        let low = a.cutoff_low.unwrap_or(model.cutoff_low);
        let high = a.cutoff_high.unwrap_or(model.cutoff_high);
        model = model.with_cutoffs(low, high)?;
    }
    let data = a.common.load(&a.input, opts)?;
    let (rows, summary) = stages::predict(&model, &data)?;
    report::write_predictions(&a.out_dir, &rows, &summary)?;
    let c = summary.counts;
    println!("NOINN {}  INN {}  UNCLASSIFIED {}", c.noinn, c.inn, c.unclassified);
    Ok(())
}

fn km(a: &KmArgs) -> CliResult<()> {
    let (mut cfg, opts) = a.common.resolve()?;
    if let Some(l) = a.level {
        cfg.survival.confidence_level = l;
    }
    let cfg = finish(cfg)?;
    let data = a.common.load(&a.input, opts)?;
    let labels = stages::read_labels(&a.labels)?;
    let (section, curves) = stages::km(&data, &labels, cfg.survival.confidence_level)?;
    report::write_km(&a.out_dir, &section, &curves)?;
    for g in &section.groups {
        println!("{:<12} n={} events={}", g.group, g.n, g.events);
    }
    if let Some(t) = &section.logrank {
        println!("log-rank chi2={:.4} p={:.4}", t.statistic, t.p_value);
    }
    Ok(())
}

fn parse_formula_arg(i: usize, s: &str) -> ModelSpec {
    match s.split_once('=') {
        Some((label, formula)) => ModelSpec {
            label: label.trim().into(),
            formula: formula.trim().into(),
        },
        None => ModelSpec {
            label: format!("({})", i + 1),
            formula: s.trim().into(),
        },
    }
}

fn cox(a: &CoxArgs) -> CliResult<()> {
    let (mut cfg, opts) = a.common.resolve()?;
    if !a.formulas.is_empty() {
        cfg.cox.models = a
            .formulas
            .iter()
            .enumerate()
            .map(|(i, f)| parse_formula_arg(i, f))
            .collect();
    }
    if let Some(t) = &a.ties {
        cfg.cox.ties = t.parse::<Ties>().map_err(|e| CliError::usage(e.to_string()))?;
    }
    if a.screen_separation {
        cfg.cox.screen_separation = true;
    }
    let mut pairs = Vec::new();
    if let Some(path) = &a.references_file {
        let text = std::fs::read_to_string(path).map_err(|e| firmsurv_core::Error::io(path, e))?;
        pairs.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from),
        );
    }
    pairs.extend(a.references.iter().cloned());
    if !pairs.is_empty() {
        cfg.cox.references = pairs
            .iter()
            .map(|r| {
                r.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| CliError::usage(format!("reference `{r}` is not of the form VAR=LEVEL")))
            })
            .collect::<CliResult<BTreeMap<_, _>>>()?;
    }
    if let Some(g) = &a.group_column {
        cfg.cox.group_column = g.clone();
    }
    let cfg = finish(cfg)?;
    let data = a.common.load(&a.input, opts)?;
    let (data, rows_used) = match &a.labels {
        Some(path) => {
            let labels = stages::read_labels(path)?;
            let d = stages::with_group_column(&data, &labels, &cfg.cox.group_column)?;
            let n = d.n_rows();
            (d, Some(n))
        }
        None => (data, None),
    };
    let (section, first_error) = stages::cox_suite(&data, &cfg.cox, rows_used);
    report::write_cox(&a.out_dir, &section)?;
    print!("{}", stages::cox_summary_text(&section));
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn pipeline(a: &PipelineArgs) -> CliResult<()> {
    let mut cfg = base_config(a.config.as_deref(), &a.set)?;
    if let Some(o) = &a.out {
        cfg.paths.output = o.clone();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(p) = &a.train {
        cfg.paths.train = Some(p.clone());
    }
    if let Some(p) = &a.predict {
        cfg.paths.predict = Some(p.clone());
    }
    if let Some(p) = &a.schema {
        cfg.paths.schema = Some(p.clone());
    }
    if let Some(d) = a.delimiter {
        cfg.paths.delimiter = d;
    }
    if let Some(f) = a.train_fraction {
        cfg.split.train_fraction = f;
    }
    if let Some(k) = a.smote_k {
        cfg.smote.k = k;
    }
    if let Some(o) = a.smote_over {
        cfg.smote.over_pct = o;
    }
    if let Some(u) = a.smote_under {
        cfg.smote.under_pct = u;
    }
    if let Some(names) = &a.algorithms {
        cfg.classifiers.algorithms = parse_algorithms(names)?;
    }
    if let Some(names) = &a.mix_components {
        cfg.mixture.components = parse_algorithms(names)?;
    }
    if let Some(s) = a.grid_step {
        cfg.mixture.grid_step = s;
    }
    if let Some(c) = a.cutoff_low {
        cfg.mixture.cutoff_low = c;
    }
    if let Some(c) = a.cutoff_high {
        cfg.mixture.cutoff_high = c;
    }
    let cfg = finish(cfg)?;
    let out = cfg.paths.output.clone();
    match run_pipeline(&cfg) {
        Ok(report) => {
            emit_report(&report, &out)?;
            println!("report written to {}", out.join("report.json").display());
            if let Some(m) = &report.mixture {
                println!(
                    "mixture {} + {} (alpha {:.2}), test AUC {:.4}",
                    m.components[0], m.components[1], m.alpha, m.auc
                );
            }
            if let Some(p) = &report.prediction {
                let c = p.counts;
                println!("NOINN {}  INN {}  UNCLASSIFIED {}", c.noinn, c.inn, c.unclassified);
            }
            Ok(())
        }
        Err(failure) => {
            if let Err(e) = emit_report(&failure.report, &out) {
                log::error!("could not write the partial report: {e}");
            } else {
                eprintln!("partial report written to {}", out.join("report.json").display());
            }
            Err(CliError::Stage {
                stage: failure.stage,
                source: failure.source,
            })
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Clean(a) => clean(a),
        Command::Split(a) => split(a),
        Command::Smote(a) => smote(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Mix(a) => mix(a),
        Command::Predict(a) => predict(a),
        Command::Km(a) => km(a),
        Command::Cox(a) => cox(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

/// Parse `args`, run the command and return the process exit code: 0 on
/// success, 1 for usage errors, 2 for data or domain errors, 3 for
/// numerical failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
