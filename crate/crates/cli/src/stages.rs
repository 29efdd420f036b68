//! The pipeline stages. Each subcommand runs exactly one of these and
//! `pipeline` runs them all, so both paths write identical artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use firmsurv_core::classifiers::{self, Algorithm, ClassifierSpec, TrainedClassifier};
use firmsurv_core::cleansing::{self, MvaOutcome};
use firmsurv_core::cox::{self, CoxOptions, CoxReport, FlaggedColumn, ModelSpec};
use firmsurv_core::dataset::{self, CsvOptions};
use firmsurv_core::evaluation::{self, ConfusionMatrix, CutoffCriterion, RocCurve};
use firmsurv_core::mixture::{self, AbstentionCounts, AbstentionLabel, MixtureModel, TracePoint};
use firmsurv_core::resampling::{self, SmoteSpec, SplitSpec};
use firmsurv_core::rng::derive_seed;
use firmsurv_core::survival::{self, KmCurve, LogRankTest, SurvivalSample};
use firmsurv_core::{ColumnData, ColumnSpec, Dataset, Error, Result, Role};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ClassifiersConfig, CoxConfig, MixtureConfig, PipelineConfig, SmoteConfig};

// ---------------------------------------------------------------------------
// Files

/// Schema sidecar of a data file: same path with extension `.schema`.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("schema")
}

pub fn csv_options(delimiter: char) -> Result<CsvOptions> {
    u8::try_from(delimiter)
        .ok()
        .filter(u8::is_ascii)
        .map(|delimiter| CsvOptions { delimiter })
        .ok_or_else(|| Error::domain(format!("delimiter `{delimiter}` is not a single ASCII character")))
}

pub fn load_dataset(path: &Path, schema: Option<&Path>, options: CsvOptions) -> Result<Dataset> {
    let schema_path = schema.map_or_else(|| sidecar(path), Path::to_path_buf);
    let specs = dataset::load_schema(&schema_path)?;
    dataset::load_csv_with(path, &specs, options)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

/// Write the CSV and its schema sidecar.
pub fn save_dataset(data: &Dataset, path: &Path, options: CsvOptions) -> Result<()> {
    ensure_parent(path)?;
    dataset::write_atomic(path, &dataset::to_csv_bytes(data, options)?)?;
    dataset::write_schema(data.specs(), sidecar(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    dataset::write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::domain(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    dataset::write_atomic(path, text.as_bytes())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn num(x: f64) -> String {
    dataset::format_number(x)
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Synthetic input

pub const TRAIN_ERA: &str = "train_era";
pub const PREDICT_ERA: &str = "predict_era";

/// The two synthetic samples: the labelled era and the later era whose
/// labels are predicted.
pub fn synthetic_pair(cfg: &PipelineConfig) -> Result<(Dataset, Dataset)> {
    let s = &cfg.synthetic;
    let train = dataset::generate_synthetic(&s.spec(s.n_rows, derive_seed(cfg.seed, "synthetic/train-era")))?;
    let predict_rows = s.predict_rows.unwrap_or(s.n_rows);
    let predict = dataset::generate_synthetic(&s.spec(predict_rows, derive_seed(cfg.seed, "synthetic/predict-era")))?;
    Ok((train, predict))
}

// ---------------------------------------------------------------------------
// Class balance

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub rows: usize,
    pub positives: usize,
    pub negatives: usize,
    pub positive_fraction: f64,
}

impl ClassBalance {
    pub fn of(data: &Dataset) -> Result<Self> {
        let labels = data.labels()?;
        let positives = labels.iter().filter(|&&y| y == 1).count();
        let rows = labels.len();
        Ok(ClassBalance {
            rows,
            positives,
            negatives: rows - positives,
            positive_fraction: if rows == 0 { 0.0 } else { positives as f64 / rows as f64 },
        })
    }
}

// ---------------------------------------------------------------------------
// Cleansing

pub fn clean(train: &Dataset, predict: Option<&Dataset>, threshold: f64) -> Result<MvaOutcome> {
    cleansing::run_mva(train, predict, threshold)
}

// ---------------------------------------------------------------------------
// Split

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train_fraction: f64,
    pub train: ClassBalance,
    pub test: ClassBalance,
}

pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset, SplitSummary)> {
    let spec = SplitSpec {
        train_fraction,
        seed: derive_seed(seed, "split"),
    };
    let (train, test) = resampling::split(data, &spec)?;
    let summary = SplitSummary {
        train_fraction,
        train: ClassBalance::of(&train)?,
        test: ClassBalance::of(&test)?,
    };
    Ok((train, test, summary))
}

// ---------------------------------------------------------------------------
// SMOTE

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteSummary {
    pub applied: bool,
    pub k: usize,
    pub over_pct: u32,
    pub under_pct: u32,
    pub before: ClassBalance,
    pub after: ClassBalance,
    pub synthetic_rows: usize,
}

pub fn smote(train: &Dataset, cfg: &SmoteConfig, seed: u64) -> Result<(Dataset, SmoteSummary)> {
    let before = ClassBalance::of(train)?;
    let (data, synthetic_rows) = if cfg.enabled {
        let spec = SmoteSpec {
            k: cfg.k,
            over_pct: cfg.over_pct,
            under_pct: cfg.under_pct,
            seed: derive_seed(seed, "smote"),
        };
        let out = resampling::smote_with_provenance(train, &spec)?;
        let n = out.origins.len();
        (out.data, n)
    } else {
        (train.clone(), 0)
    };
    let summary = SmoteSummary {
        applied: cfg.enabled,
        k: cfg.k,
        over_pct: cfg.over_pct,
        under_pct: cfg.under_pct,
        before,
        after: ClassBalance::of(&data)?,
        synthetic_rows,
    };
    Ok((data, summary))
}

// ---------------------------------------------------------------------------
// Training

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingOutcome {
    pub algorithm: Algorithm,
    pub trained: bool,
    pub error: Option<String>,
}

/// Fit every configured algorithm concurrently. A learner that fails is
/// reported and left out; the others carry on.
pub fn train(data: &Dataset, cfg: &ClassifiersConfig, seed: u64) -> (Vec<TrainedClassifier>, Vec<TrainingOutcome>) {
    let results: Vec<(Algorithm, Result<TrainedClassifier>)> = cfg
        .algorithms
        .par_iter()
        .map(|&algorithm| {
            let spec = ClassifierSpec {
                algorithm,
                params: cfg.params,
                seed,
                references: cfg.references.clone(),
            };
            (algorithm, classifiers::fit(data, &spec))
        })
        .collect();
    let mut models = Vec::new();
    let mut outcomes = Vec::new();
    for (algorithm, r) in results {
        match r {
            Ok(m) => {
                models.push(m);
                outcomes.push(TrainingOutcome {
                    algorithm,
                    trained: true,
                    error: None,
                });
            }
            Err(e) => {
                log::warn!("{algorithm} failed to train: {e}");
                outcomes.push(TrainingOutcome {
                    algorithm,
                    trained: false,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    (models, outcomes)
}

pub fn model_path(dir: &Path, algorithm: Algorithm) -> PathBuf {
    dir.join(format!("{algorithm}.json"))
}

pub fn save_models(dir: &Path, models: &[TrainedClassifier], outcomes: &[TrainingOutcome]) -> Result<()> {
    ensure_dir(dir)?;
    for m in models {
        m.save(&model_path(dir, m.algorithm))?;
    }
    write_json(&dir.join("training.json"), &outcomes)
}

/// Models listed as trained in `dir/training.json`, in training order.
pub fn load_models(dir: &Path) -> Result<(Vec<TrainedClassifier>, Vec<TrainingOutcome>)> {
    let outcomes: Vec<TrainingOutcome> = read_json(&dir.join("training.json"))?;
    let models = outcomes
        .iter()
        .filter(|o| o.trained)
        .map(|o| TrainedClassifier::load(&model_path(dir, o.algorithm)))
        .collect::<Result<_>>()?;
    Ok((models, outcomes))
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffResult {
    pub criterion: CutoffCriterion,
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmMetrics {
    pub algorithm: Algorithm,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
    pub cutoffs: Vec<CutoffResult>,
}

/// Bins of the per-class score histograms written next to the ROC curves.
pub const HISTOGRAM_BINS: usize = 20;

/// Counts of test scores per equal-width bin on [0, 1], split by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub algorithm: Algorithm,
    pub negatives: Vec<usize>,
    pub positives: Vec<usize>,
}

impl ScoreHistogram {
    pub fn new(algorithm: Algorithm, scores: &[f64], labels: &[u8], bins: usize) -> Self {
        let mut h = ScoreHistogram {
            algorithm,
            negatives: vec![0; bins],
            positives: vec![0; bins],
        };
        for (&p, &y) in scores.iter().zip(labels) {
            let bin = ((p * bins as f64) as usize).min(bins - 1);
            if y == 1 {
                h.positives[bin] += 1;
            } else {
                h.negatives[bin] += 1;
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: AlgorithmMetrics,
    pub roc: RocCurve,
    pub histogram: ScoreHistogram,
}

pub fn evaluate(models: &[TrainedClassifier], test: &Dataset) -> Result<Vec<Evaluation>> {
    let labels = test.labels()?;
    models
        .iter()
        .map(|m| {
            let scores = m.predict_proba(test)?;
            let roc = evaluation::roc_curve(&scores, &labels)?;
            let cutoffs = CutoffCriterion::ALL
                .into_iter()
                .map(|criterion| {
                    let threshold = evaluation::select_cutoff(&roc, criterion);
                    let confusion = evaluation::confusion(&scores, &labels, threshold);
                    CutoffResult {
                        criterion,
                        threshold,
                        sensitivity: confusion.sensitivity(),
                        specificity: confusion.specificity(),
                        accuracy: confusion.accuracy(),
                        confusion,
                    }
                })
                .collect();
            let metrics = AlgorithmMetrics {
                algorithm: m.algorithm,
                auc: roc.auc,
                positives: roc.positives,
                negatives: roc.negatives,
                cutoffs,
            };
            let histogram = ScoreHistogram::new(m.algorithm, &scores, &labels, HISTOGRAM_BINS);
            Ok(Evaluation {
                metrics,
                roc,
                histogram,
            })
        })
        .collect()
}

/// `algorithm,threshold,fpr,tpr`, curves in evaluation order.
pub fn roc_csv(curves: &[(Algorithm, RocCurve)]) -> Vec<u8> {
    csv_bytes(
        &["algorithm", "threshold", "fpr", "tpr"],
        curves.iter().flat_map(|(a, c)| {
            c.points
                .iter()
                .map(move |p| vec![a.to_string(), num(p.threshold), num(p.fpr), num(p.tpr)])
        }),
    )
}

pub fn histogram_csv(histograms: &[ScoreHistogram]) -> Vec<u8> {
    csv_bytes(
        &["algorithm", "class", "bin_lo", "bin_hi", "count"],
        histograms.iter().flat_map(|h| {
            let bins = h.negatives.len();
            [(0, &h.negatives), (1, &h.positives)]
                .into_iter()
                .flat_map(move |(class, counts)| {
                    counts.iter().enumerate().map(move |(b, c)| {
                        vec![
                            h.algorithm.to_string(),
                            class.to_string(),
                            num(b as f64 / bins as f64),
                            num((b + 1) as f64 / bins as f64),
                            c.to_string(),
                        ]
                    })
                })
        }),
    )
}

// ---------------------------------------------------------------------------
// Mixture

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentSelection {
    /// The two best algorithms by test AUC.
    TopAuc,
    Configured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSummary {
    pub components: [Algorithm; 2],
    pub selection: ComponentSelection,
    pub component_auc: [f64; 2],
    pub alpha: f64,
    pub objective: f64,
    pub auc: f64,
    pub separation: f64,
    pub grid_step: f64,
    pub cutoff_low: f64,
    pub cutoff_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFile {
    pub summary: MixtureSummary,
    pub trace: Vec<TracePoint>,
}

/// The two trained algorithms with the highest test AUC; ties go to the
/// algorithm listed first.
pub fn top_two(aucs: &[(Algorithm, f64)]) -> Result<[Algorithm; 2]> {
    let mut ranked: Vec<(Algorithm, f64)> = aucs.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    match ranked.as_slice() {
        [a, b, ..] => Ok([a.0, b.0]),
        _ => Err(Error::domain(format!(
            "the mixture needs two trained classifiers, only {} available",
            ranked.len()
        ))),
    }
}

pub fn mix(models: &[TrainedClassifier], test: &Dataset, cfg: &MixtureConfig) -> Result<(MixtureModel, MixtureFile)> {
    let labels = test.labels()?;
    let scores: Vec<(Algorithm, Vec<f64>)> = models
        .iter()
        .map(|m| Ok((m.algorithm, m.predict_proba(test)?)))
        .collect::<Result<_>>()?;
    let aucs: Vec<(Algorithm, f64)> = scores
        .iter()
        .map(|(a, s)| Ok((*a, evaluation::auc(s, &labels)?)))
        .collect::<Result<_>>()?;
    let (components, selection) = match cfg.components.as_slice() {
        [] => (top_two(&aucs)?, ComponentSelection::TopAuc),
        [a, b] => ([*a, *b], ComponentSelection::Configured),
        _ => return Err(Error::domain("mixture.components must name two algorithms")),
    };
    let find = |alg: Algorithm| {
        models
            .iter()
            .position(|m| m.algorithm == alg)
            .ok_or_else(|| Error::domain(format!("mixture component `{alg}` was not trained")))
    };
    let (ia, ib) = (find(components[0])?, find(components[1])?);
    let search = mixture::optimize_weight(&scores[ia].1, &scores[ib].1, &labels, cfg.grid_step)?;
    let mixed = mixture::mix(search.alpha, &scores[ia].1, &scores[ib].1);
    let model = MixtureModel::new(search.alpha, models[ia].clone(), models[ib].clone())?
        .with_cutoffs(cfg.cutoff_low, cfg.cutoff_high)?;
    let summary = MixtureSummary {
        components,
        selection,
        component_auc: [aucs[ia].1, aucs[ib].1],
        alpha: search.alpha,
        objective: search.objective,
        auc: evaluation::auc(&mixed, &labels)?,
        separation: evaluation::separation_score(&mixed, &labels)?,
        grid_step: search.grid_step,
        cutoff_low: cfg.cutoff_low,
        cutoff_high: cfg.cutoff_high,
    };
    Ok((
        model,
        MixtureFile {
            summary,
            trace: search.trace,
        },
    ))
}

const MIXTURE_FORMAT: &str = "firmsurv-mixture";

#[derive(Serialize, Deserialize)]
struct MixtureEnvelope {
    format: String,
    version: u32,
    model: MixtureModel,
}

pub fn save_mixture(path: &Path, model: &MixtureModel) -> Result<()> {
    write_json(
        path,
        &MixtureEnvelope {
            format: MIXTURE_FORMAT.into(),
            version: 1,
            model: model.clone(),
        },
    )
}

pub fn load_mixture(path: &Path) -> Result<MixtureModel> {
    let env: MixtureEnvelope = read_json(path)?;
    if env.format != MIXTURE_FORMAT || env.version != 1 {
        return Err(Error::domain(format!(
            "{}: not a version-1 mixture model file",
            path.display()
        )));
    }
    env.model.validate()?;
    Ok(env.model)
}

// ---------------------------------------------------------------------------
// Prediction with abstention

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub id: String,
    pub probability: f64,
    pub label: AbstentionLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSummary {
    pub rows: usize,
    pub cutoff_low: f64,
    pub cutoff_high: f64,
    pub counts: AbstentionCounts,
    /// NOINN, INN, UNCLASSIFIED.
    pub fractions: [f64; 3],
}

fn row_ids(data: &Dataset) -> Vec<String> {
    match data.role_index(Role::Id) {
        Some(c) => (0..data.n_rows()).map(|r| data.cell_text(r, c)).collect(),
        None => (1..=data.n_rows()).map(|r| r.to_string()).collect(),
    }
}

pub fn predict(model: &MixtureModel, data: &Dataset) -> Result<(Vec<LabelRow>, PredictionSummary)> {
    let (probs, abstention) = mixture::classify_with_abstention(model, data)?;
    let rows = row_ids(data)
        .into_iter()
        .zip(probs)
        .zip(&abstention.labels)
        .map(|((id, probability), &label)| LabelRow { id, probability, label })
        .collect::<Vec<_>>();
    let summary = PredictionSummary {
        rows: rows.len(),
        cutoff_low: model.cutoff_low,
        cutoff_high: model.cutoff_high,
        counts: abstention.counts,
        fractions: abstention.counts.fractions(),
    };
    Ok((rows, summary))
}

pub fn labels_csv(rows: &[LabelRow]) -> Vec<u8> {
    csv_bytes(
        &["id", "probability", "label"],
        rows.iter()
            .map(|r| vec![r.id.clone(), num(r.probability), r.label.to_string()]),
    )
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("id,probability,label") {
        return Err(Error::domain(format!(
            "{}: expected header `id,probability,label`",
            path.display()
        )));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |m: &str| Error::Parse {
                row: i + 1,
                message: format!("{}: {m}", path.display()),
            };
            let mut it = line.rsplitn(3, ',');
            let (label, prob, id) = match (it.next(), it.next(), it.next()) {
                (Some(l), Some(p), Some(id)) => (l, p, id),
                _ => return Err(bad("expected three fields")),
            };
            let label = match label {
                "NOINN" => AbstentionLabel::Noinn,
                "INN" => AbstentionLabel::Inn,
                "UNCLASSIFIED" => AbstentionLabel::Unclassified,
                other => return Err(bad(&format!("unknown label `{other}`"))),
            };
            let probability = prob.parse().map_err(|_| bad(&format!("bad probability `{prob}`")))?;
            Ok(LabelRow {
                id: id.to_string(),
                probability,
                label,
            })
        })
        .collect()
}

/// Check that `labels` were produced for `data`, row by row.
pub fn check_alignment(data: &Dataset, labels: &[LabelRow]) -> Result<()> {
    if labels.len() != data.n_rows() {
        return Err(Error::domain(format!(
            "{} predicted labels for {} data rows",
            labels.len(),
            data.n_rows()
        )));
    }
    if let Some((r, (id, row))) = row_ids(data)
        .iter()
        .zip(labels)
        .enumerate()
        .find(|(_, (id, row))| **id != row.id)
    {
        return Err(Error::domain(format!(
            "label row {} has id `{}` but data row has id `{id}`",
            r + 1,
            row.id
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Kaplan-Meier by predicted label

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmGroupSummary {
    pub group: AbstentionLabel,
    pub n: usize,
    pub events: usize,
    pub event_times: usize,
    /// First event time with survival at or below one half.
    pub median: Option<f64>,
    pub final_survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmSection {
    pub confidence_level: f64,
    pub groups: Vec<KmGroupSummary>,
    /// INN against NOINN; absent when either group is empty or has no
    /// events.
    pub logrank: Option<LogRankTest>,
    pub note: Option<String>,
}

const GROUP_ORDER: [AbstentionLabel; 3] = [
    AbstentionLabel::Noinn,
    AbstentionLabel::Inn,
    AbstentionLabel::Unclassified,
];

fn group_code(label: AbstentionLabel) -> u32 {
    match label {
        AbstentionLabel::Noinn => 0,
        AbstentionLabel::Inn => 1,
        AbstentionLabel::Unclassified => 2,
    }
}

pub fn km(data: &Dataset, labels: &[LabelRow], level: f64) -> Result<(KmSection, Vec<(AbstentionLabel, KmCurve)>)> {
    check_alignment(data, labels)?;
    let codes: Vec<u32> = labels.iter().map(|r| group_code(r.label)).collect();
    let samples = survival::samples_from_dataset(data, Some(&codes))?;
    let mut curves = Vec::new();
    let mut groups = Vec::new();
    for g in GROUP_ORDER {
        let members: Vec<SurvivalSample> = samples
            .iter()
            .filter(|s| s.group == Some(group_code(g)))
            .copied()
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut curve = survival::km_fit(&members)?;
        survival::km_confidence(&mut curve, level)?;
        groups.push(KmGroupSummary {
            group: g,
            n: members.len(),
            events: curve.deaths.iter().sum(),
            event_times: curve.times.len(),
            median: curve.survival.iter().position(|&s| s <= 0.5).map(|i| curve.times[i]),
            final_survival: curve.survival.last().copied().unwrap_or(1.0),
        });
        curves.push((g, curve));
    }
    let pair: Vec<SurvivalSample> = samples.iter().filter(|s| s.group != Some(2)).copied().collect();
    let (logrank, note) = match survival::logrank_test(&pair) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(format!("log-rank test not computed: {e}"))),
    };
    Ok((
        KmSection {
            confidence_level: level,
            groups,
            logrank,
            note,
        },
        curves,
    ))
}

/// `group,time,at_risk,deaths,survival,sd,ci_lo,ci_hi`, one row per event
/// time per group.
pub fn km_csv(curves: &[(AbstentionLabel, KmCurve)]) -> Vec<u8> {
    csv_bytes(
        &["group", "time", "at_risk", "deaths", "survival", "sd", "ci_lo", "ci_hi"],
        curves.iter().flat_map(|(g, c)| {
            (0..c.times.len()).map(move |i| {
                vec![
                    g.to_string(),
                    num(c.times[i]),
                    c.at_risk[i].to_string(),
                    c.deaths[i].to_string(),
                    num(c.survival[i]),
                    opt_num(c.variance[i].map(f64::sqrt)),
                    opt_num(c.ci_lower[i]),
                    opt_num(c.ci_upper[i]),
                ]
            })
        }),
    )
}

// ---------------------------------------------------------------------------
// Cox suite

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxOutcome {
    pub label: String,
    pub formula: String,
    pub report: Option<CoxReport>,
    pub error: Option<String>,
    /// Separation screen of the design, reported when the fit failed.
    pub diagnostics: Vec<FlaggedColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxSection {
    pub group_column: String,
    /// Rows labelled INN or NOINN (unclassified rows are left out).
    pub rows_used: Option<usize>,
    pub models: Vec<CoxOutcome>,
}

/// Add the 0/1 group column (INN = 1) and drop unclassified rows.
pub fn with_group_column(data: &Dataset, labels: &[LabelRow], name: &str) -> Result<Dataset> {
    check_alignment(data, labels)?;
    let keep: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i].label != AbstentionLabel::Unclassified)
        .collect();
    let values = keep
        .iter()
        .map(|&i| {
            Some(if labels[i].label == AbstentionLabel::Inn {
                1.0
            } else {
                0.0
            })
        })
        .collect();
    data.select_rows(&keep)
        .with_column(ColumnSpec::numeric(name, Role::Feature), ColumnData::Numeric(values))
}

fn diagnostics(data: &Dataset, spec: &ModelSpec, refs: &BTreeMap<String, String>) -> Vec<FlaggedColumn> {
    let design = cox::parse_formula(&spec.formula).and_then(|t| cox::build_design(data, &t, refs));
    match design {
        Ok(d) => d
            .survival_samples(data)
            .map(|s| cox::detect_separation(&d, &s))
            .unwrap_or_default(),
        Err(_) => Vec::new(),
    }
}

/// Fit every model of the suite; a failing model is recorded with its error
/// and separation diagnostics. The first error is returned alongside.
pub fn cox_suite(data: &Dataset, cfg: &CoxConfig, rows_used: Option<usize>) -> (CoxSection, Option<Error>) {
    let options = CoxOptions {
        ties: cfg.ties,
        max_iter: cfg.max_iter,
        screen_separation: cfg.screen_separation,
    };
    let mut first_error = None;
    let models = cfg
        .models
        .iter()
        .map(|spec| match cox::run_model(data, spec, &cfg.references, &options) {
            Ok(report) => CoxOutcome {
                label: spec.label.clone(),
                formula: spec.formula.clone(),
                report: Some(report),
                error: None,
                diagnostics: Vec::new(),
            },
            Err(e) => {
                log::warn!("Cox model {} ({}) failed: {e}", spec.label, spec.formula);
                let outcome = CoxOutcome {
                    label: spec.label.clone(),
                    formula: spec.formula.clone(),
                    report: None,
                    error: Some(e.to_string()),
                    diagnostics: diagnostics(data, spec, &cfg.references),
                };
                first_error.get_or_insert(e);
                outcome
            }
        })
        .collect();
    (
        CoxSection {
            group_column: cfg.group_column.clone(),
            rows_used,
            models,
        },
        first_error,
    )
}

pub fn cox_summary_text(section: &CoxSection) -> String {
    let reports: Vec<CoxReport> = section.models.iter().filter_map(|m| m.report.clone()).collect();
    let mut text = cox::render_summary(&reports, &section.group_column);
    for r in &reports {
        for f in &r.flagged_columns {
            text.push_str(&format!(
                "\nmodel {}: coefficient for {} may be infinite (direction {:+}): {}\n",
                r.label, f.name, f.direction, f.reason
            ));
        }
    }
    for m in section.models.iter().filter(|m| m.error.is_some()) {
        text.push_str(&format!(
            "\nmodel {} ({}) failed: {}\n",
            m.label,
            m.formula,
            m.error.as_deref().unwrap_or_default()
        ));
        for f in &m.diagnostics {
            text.push_str(&format!("  {} (direction {:+}): {}\n", f.name, f.direction, f.reason));
        }
    }
    text
}
