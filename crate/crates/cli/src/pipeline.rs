//! End-to-end run: clean, split, rebalance, train, evaluate, mix, label the
//! second era with abstention, then survival curves and the Cox suite.

use std::path::{Path, PathBuf};
use std::time::Instant;

use firmsurv_core::{Dataset, Error, Result};

use crate::config::PipelineConfig;
use crate::report::{DataSection, RunReport, StageError, StageTiming};
use crate::stages::{self, PREDICT_ERA, TRAIN_ERA};

/// A stage failed; `report` holds everything computed before it.
#[derive(Debug)]
pub struct PipelineFailure {
    pub report: Box<RunReport>,
    pub stage: String,
    pub source: Error,
}

impl std::fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineFailure {}

/// Where each persisted intermediate lives below the output directory.
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout {
            root: root.to_path_buf(),
        }
    }

    pub fn raw(&self, era: &str) -> PathBuf {
        self.root.join("data").join(format!("{era}.csv"))
    }

    pub fn clean(&self, era: &str) -> PathBuf {
        self.root.join("clean").join(format!("{era}.csv"))
    }

    pub fn split_dir(&self) -> PathBuf {
        self.root.join("split")
    }

    pub fn smote_dir(&self) -> PathBuf {
        self.root.join("smote")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }
}

struct Runner {
    report: RunReport,
}

impl Runner {
    fn stage<T>(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut RunReport) -> Result<T>,
    ) -> std::result::Result<T, PipelineFailure> {
        let start = Instant::now();
        let out = f(&mut self.report);
        self.report.timings.push(StageTiming {
            stage: name.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        log::info!("stage {name} finished in {:.2}s", start.elapsed().as_secs_f64());
        out.map_err(|source| {
            let mut report = std::mem::replace(&mut self.report, RunReport::new(&PipelineConfig::default()));
            report.error = Some(StageError {
                stage: name.into(),
                message: source.to_string(),
            });
            PipelineFailure {
                report: Box::new(report),
                stage: name.into(),
                source,
            }
        })
    }
}

/// Run every stage, persisting intermediates under `config.paths.output`.
pub fn run_pipeline(config: &PipelineConfig) -> std::result::Result<RunReport, PipelineFailure> {
    let layout = Layout::new(&config.paths.output);
    let mut run = Runner {
        report: RunReport::new(config),
    };
    let (opts, train_raw, predict_raw) = run.stage("load", |r| {
        let opts = stages::csv_options(config.paths.delimiter)?;
        stages::ensure_dir(&layout.root)?;
        let (train, predict, source) = match &config.paths.train {
            Some(path) => {
                let schema = config.paths.schema.as_deref();
                let train = stages::load_dataset(path, schema, opts)?;
                let predict = config
                    .paths
                    .predict
                    .as_deref()
                    .map(|p| stages::load_dataset(p, schema.or(Some(&stages::sidecar(path))), opts))
                    .transpose()?;
                (train, predict, "files")
            }
            None => {
                let (train, predict) = stages::synthetic_pair(config)?;
                stages::save_dataset(&train, &layout.raw(TRAIN_ERA), opts)?;
                stages::save_dataset(&predict, &layout.raw(PREDICT_ERA), opts)?;
                (train, Some(predict), "synthetic")
            }
        };
        r.data = Some(DataSection {
            source: source.into(),
            train_rows: train.n_rows(),
            predict_rows: predict.as_ref().map_or(train.n_rows(), Dataset::n_rows),
            separate_predict_era: predict.is_some(),
        });
        Ok((opts, train, predict))
    })?;

    let (train_era, predict_era) = run.stage("clean", |r| {
        if !config.cleansing.enabled {
            return Ok((train_raw.clone(), predict_raw.clone()));
        }
        let out = stages::clean(&train_raw, predict_raw.as_ref(), config.cleansing.harmonize_threshold)?;
        stages::save_dataset(&out.primary, &layout.clean(TRAIN_ERA), opts)?;
        if let Some(p) = &out.secondary {
            stages::save_dataset(p, &layout.clean(PREDICT_ERA), opts)?;
        }
        stages::write_json(&layout.root.join("clean").join("mva.json"), &out.report)?;
        r.cleansing = Some(out.report);
        Ok((out.primary, out.secondary))
    })?;
    let predict_era = predict_era.unwrap_or_else(|| train_era.clone());

    let (train, test) = run.stage("split", |r| {
        let (train, test, summary) = stages::split(&train_era, config.split.train_fraction, config.seed)?;
        let dir = layout.split_dir();
        stages::save_dataset(&train, &dir.join("train.csv"), opts)?;
        stages::save_dataset(&test, &dir.join("test.csv"), opts)?;
        stages::write_json(&dir.join("split.json"), &summary)?;
        r.split = Some(summary);
        Ok((train, test))
    })?;

    let balanced = run.stage("smote", |r| {
        let (data, summary) = stages::smote(&train, &config.smote, config.seed)?;
        let dir = layout.smote_dir();
        stages::save_dataset(&data, &dir.join("train.csv"), opts)?;
        stages::write_json(&dir.join("smote.json"), &summary)?;
        r.smote = Some(summary);
        Ok(data)
    })?;

    let models = run.stage("train", |r| {
        let (models, outcomes) = stages::train(&balanced, &config.classifiers, config.seed);
        stages::save_models(&layout.models_dir(), &models, &outcomes)?;
        r.training = Some(outcomes);
        if models.is_empty() {
            return Err(Error::domain("no classifier trained successfully"));
        }
        Ok(models)
    })?;

    run.stage("evaluate", |r| {
        let results = stages::evaluate(&models, &test)?;
        r.evaluation = Some(results.iter().map(|e| e.metrics.clone()).collect());
        r.artifacts.roc = results.iter().map(|e| (e.metrics.algorithm, e.roc.clone())).collect();
        r.artifacts.histograms = results.into_iter().map(|e| e.histogram).collect();
        Ok(())
    })?;

    let mixture = run.stage("mix", |r| {
        let (model, file) = stages::mix(&models, &test, &config.mixture)?;
        r.mixture = Some(file.summary.clone());
        r.artifacts.mixture = Some((model.clone(), file));
        Ok(model)
    })?;

    let labels = run.stage("predict", |r| {
        let (rows, summary) = stages::predict(&mixture, &predict_era)?;
        r.prediction = Some(summary);
        r.artifacts.labels = rows.clone();
        Ok(rows)
    })?;

    run.stage("km", |r| {
        let (section, curves) = stages::km(&predict_era, &labels, config.survival.confidence_level)?;
        r.survival = Some(section);
        r.artifacts.km_curves = curves;
        Ok(())
    })?;

    run.stage("cox", |r| {
        let data = stages::with_group_column(&predict_era, &labels, &config.cox.group_column)?;
        let (section, _) = stages::cox_suite(&data, &config.cox, Some(data.n_rows()));
        r.cox = Some(section);
        Ok(())
    })?;

    Ok(run.report)
}
