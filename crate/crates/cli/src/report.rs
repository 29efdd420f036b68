//! The run report and the files derived from it.

use std::path::Path;

use firmsurv_core::classifiers::Algorithm;
use firmsurv_core::cleansing::MvaReport;
use firmsurv_core::evaluation::RocCurve;
use firmsurv_core::mixture::{AbstentionLabel, MixtureModel};
use firmsurv_core::survival::KmCurve;
use firmsurv_core::{dataset, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::PipelineConfig;
use crate::stages::{
    self, AlgorithmMetrics, CoxSection, KmSection, LabelRow, MixtureFile, MixtureSummary, PredictionSummary,
    ScoreHistogram, SmoteSummary, SplitSummary, TrainingOutcome,
};
use crate::svg::{self, Chart, PlotKind, Series};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSection {
    /// `synthetic` or `files`.
    pub source: String,
    pub train_rows: usize,
    pub predict_rows: usize,
    /// False when no second-era sample was given and labels are predicted
    /// for the training era itself.
    pub separate_predict_era: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

/// Bulky per-row and per-point outputs, written to their own files rather
/// than into `report.json`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub roc: Vec<(Algorithm, RocCurve)>,
    pub histograms: Vec<ScoreHistogram>,
    pub mixture: Option<(MixtureModel, MixtureFile)>,
    pub labels: Vec<LabelRow>,
    pub km_curves: Vec<(AbstentionLabel, KmCurve)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub data: Option<DataSection>,
    pub cleansing: Option<MvaReport>,
    pub split: Option<SplitSummary>,
    pub smote: Option<SmoteSummary>,
    pub training: Option<Vec<TrainingOutcome>>,
    pub evaluation: Option<Vec<AlgorithmMetrics>>,
    pub mixture: Option<MixtureSummary>,
    pub prediction: Option<PredictionSummary>,
    pub survival: Option<KmSection>,
    pub cox: Option<CoxSection>,
    /// One entry per stage that ran, in order.
    pub timings: Vec<StageTiming>,
    pub error: Option<StageError>,
    #[serde(skip)]
    pub artifacts: Artifacts,
}

impl RunReport {
    pub fn new(config: &PipelineConfig) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.into(),
            seed: config.seed,
            config: config.clone(),
            data: None,
            cleansing: None,
            split: None,
            smote: None,
            training: None,
            evaluation: None,
            mixture: None,
            prediction: None,
            survival: None,
            cox: None,
            timings: Vec::new(),
            error: None,
            artifacts: Artifacts::default(),
        }
    }
}

/// Keys every report carries, with `null` for a stage that did not run.
pub const SECTION_KEYS: [&str; 11] = [
    "data",
    "cleansing",
    "split",
    "smote",
    "training",
    "evaluation",
    "mixture",
    "prediction",
    "survival",
    "cox",
    "error",
];

/// Structural check of a parsed `report.json`. Returns every problem found.
pub fn validate_report(value: &Value) -> std::result::Result<(), Vec<String>> {
    let mut problems = Vec::new();
    let Some(obj) = value.as_object() else {
        return Err(vec!["report is not a JSON object".into()]);
    };
    match obj.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => problems.push(format!("unsupported schema_version {v}")),
        None => problems.push("schema_version missing or not an integer".into()),
    }
    if !obj.get("tool_version").is_some_and(Value::is_string) {
        problems.push("tool_version missing or not a string".into());
    }
    if !obj.get("seed").is_some_and(Value::is_u64) {
        problems.push("seed missing or not an unsigned integer".into());
    }
    if !obj.get("config").is_some_and(Value::is_object) {
        problems.push("config missing or not an object".into());
    }
    for key in SECTION_KEYS {
        match obj.get(key) {
            None => problems.push(format!(
                "section `{key}` missing (use null for a stage that did not run)"
            )),
            Some(Value::Null | Value::Object(_) | Value::Array(_)) => {}
            Some(_) => problems.push(format!("section `{key}` must be an object, array or null")),
        }
    }
    match obj.get("timings").and_then(Value::as_array) {
        None => problems.push("timings missing or not an array".into()),
        Some(items) => {
            let mut seen = std::collections::BTreeSet::new();
            for t in items {
                let stage = t.get("stage").and_then(Value::as_str);
                let ok = stage.is_some() && t.get("seconds").is_some_and(Value::is_number);
                if !ok {
                    problems.push(format!("malformed timing entry {t}"));
                } else if !seen.insert(stage.unwrap_or_default().to_string()) {
                    problems.push(format!("stage `{}` timed more than once", stage.unwrap_or_default()));
                }
            }
        }
    }
    if problems.is_empty() {
        if let Err(e) = serde_json::from_value::<RunReport>(value.clone()) {
            problems.push(format!("report does not match its schema: {e}"));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}

// ---------------------------------------------------------------------------
// Stage outputs shared by the subcommands and `emit_report`

pub fn write_evaluation(
    dir: &Path,
    metrics: &[AlgorithmMetrics],
    curves: &[(Algorithm, RocCurve)],
    histograms: &[ScoreHistogram],
) -> Result<()> {
    stages::write_json(&dir.join("metrics.json"), &metrics)?;
    dataset::write_atomic(&dir.join("roc.csv"), &stages::roc_csv(curves))?;
    dataset::write_atomic(&dir.join("score_histogram.csv"), &stages::histogram_csv(histograms))?;
    if !curves.is_empty() {
        let chart = Chart {
            title: "ROC curves (test partition)".into(),
            x_label: "false positive rate".into(),
            y_label: "true positive rate".into(),
            kind: PlotKind::Line,
            series: curves
                .iter()
                .map(|(a, c)| Series {
                    name: format!("{a} (AUC {:.3})", c.auc),
                    points: c.points.iter().map(|p| (p.fpr, p.tpr)).collect(),
                })
                .collect(),
        };
        svg::render_svg(&chart, &dir.join("roc.svg"))?;
    }
    Ok(())
}

pub fn write_mixture(dir: &Path, model: &MixtureModel, file: &MixtureFile) -> Result<()> {
    stages::write_json(&dir.join("mixture.json"), file)?;
    stages::save_mixture(&dir.join("models").join("mixture.json"), model)
}

pub fn write_predictions(dir: &Path, rows: &[LabelRow], summary: &PredictionSummary) -> Result<()> {
    stages::ensure_dir(dir)?;
    dataset::write_atomic(&dir.join("labels.csv"), &stages::labels_csv(rows))?;
    stages::write_json(&dir.join("predictions.json"), summary)
}

pub fn write_km(dir: &Path, section: &KmSection, curves: &[(AbstentionLabel, KmCurve)]) -> Result<()> {
    stages::ensure_dir(dir)?;
    dataset::write_atomic(&dir.join("km.csv"), &stages::km_csv(curves))?;
    stages::write_json(&dir.join("km.json"), section)?;
    stages::write_json(&dir.join("logrank.json"), &section.logrank)?;
    if !curves.is_empty() {
        let chart = Chart {
            title: "Kaplan-Meier survival by predicted label".into(),
            x_label: "years".into(),
            y_label: "survival probability".into(),
            kind: PlotKind::Step,
            series: curves
                .iter()
                .map(|(g, c)| {
                    let mut points = vec![(0.0, 1.0)];
                    points.extend(c.times.iter().copied().zip(c.survival.iter().copied()));
                    Series {
                        name: g.to_string(),
                        points,
                    }
                })
                .collect(),
        };
        svg::render_svg(&chart, &dir.join("km.svg"))?;
    }
    Ok(())
}

pub fn write_cox(dir: &Path, section: &CoxSection) -> Result<()> {
    stages::write_json(&dir.join("cox.json"), section)?;
    stages::write_text(&dir.join("cox.txt"), &stages::cox_summary_text(section))
}

/// Write `report.json` and every per-stage file the report has data for.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<()> {
    stages::ensure_dir(dir)?;
    let a = &report.artifacts;
    if let Some(metrics) = &report.evaluation {
        write_evaluation(dir, metrics, &a.roc, &a.histograms)?;
    }
    if let Some((model, file)) = &a.mixture {
        write_mixture(dir, model, file)?;
    }
    if let Some(summary) = &report.prediction {
        write_predictions(dir, &a.labels, summary)?;
    }
    if let Some(section) = &report.survival {
        write_km(dir, section, &a.km_curves)?;
    }
    if let Some(section) = &report.cox {
        write_cox(dir, section)?;
    }
    stages::write_json(&dir.join("report.json"), report)
}
