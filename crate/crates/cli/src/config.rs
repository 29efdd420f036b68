//! Pipeline configuration: a sectioned TOML file, every key of which can be
//! overridden from the command line with `--set section.key=value`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use firmsurv_core::classifiers::{Algorithm, Hyperparameters};
use firmsurv_core::cox::{manufacturing_milan_references, standard_suite, ModelSpec, Ties};
use firmsurv_core::mixture::{DEFAULT_CUTOFF_HIGH, DEFAULT_CUTOFF_LOW};
use firmsurv_core::SyntheticSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub synthetic: SyntheticConfig,
    pub cleansing: CleansingConfig,
    pub split: SplitConfig,
    pub smote: SmoteConfig,
    pub classifiers: ClassifiersConfig,
    pub mixture: MixtureConfig,
    pub survival: SurvivalConfig,
    pub cox: CoxConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            paths: PathsConfig::default(),
            synthetic: SyntheticConfig::default(),
            cleansing: CleansingConfig::default(),
            split: SplitConfig::default(),
            smote: SmoteConfig::default(),
            classifiers: ClassifiersConfig::default(),
            mixture: MixtureConfig::default(),
            survival: SurvivalConfig::default(),
            cox: CoxConfig::default(),
        }
    }
}

/// Input files. When `train` is absent both samples are generated from the
/// `[synthetic]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub train: Option<PathBuf>,
    pub predict: Option<PathBuf>,
    /// Schema sidecar shared by both samples; defaults to `<train>.schema`.
    pub schema: Option<PathBuf>,
    pub output: PathBuf,
    /// CSV field separator.
    pub delimiter: char,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            train: None,
            predict: None,
            schema: None,
            output: PathBuf::from("firmsurv-out"),
            delimiter: ';',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_rows: usize,
    /// Rows of the second-era sample; defaults to `n_rows`.
    pub predict_rows: Option<usize>,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub minority_fraction: f64,
    pub class_separation: f64,
    pub hazard_ratio_true: f64,
    pub censoring_horizon: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        SyntheticConfig {
            n_rows: s.n_rows,
            predict_rows: None,
            n_numeric: s.n_numeric,
            n_categorical: s.n_categorical,
            minority_fraction: s.minority_fraction,
            class_separation: s.class_separation,
            hazard_ratio_true: s.hazard_ratio_true,
            censoring_horizon: s.censoring_horizon,
        }
    }
}

impl SyntheticConfig {
    pub fn spec(&self, n_rows: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_rows,
            n_numeric: self.n_numeric,
            n_categorical: self.n_categorical,
            minority_fraction: self.minority_fraction,
            class_separation: self.class_separation,
            hazard_ratio_true: self.hazard_ratio_true,
            censoring_horizon: self.censoring_horizon,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleansingConfig {
    pub enabled: bool,
    pub harmonize_threshold: f64,
}

impl Default for CleansingConfig {
    fn default() -> Self {
        CleansingConfig {
            enabled: true,
            harmonize_threshold: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteConfig {
    pub enabled: bool,
    pub k: usize,
    pub over_pct: u32,
    pub under_pct: u32,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            enabled: true,
            k: 5,
            over_pct: 200,
            under_pct: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifiersConfig {
    pub algorithms: Vec<Algorithm>,
    pub params: Hyperparameters,
    /// Dummy-coding reference level per categorical feature.
    pub references: BTreeMap<String, String>,
}

impl Default for ClassifiersConfig {
    fn default() -> Self {
        ClassifiersConfig {
            algorithms: Algorithm::ALL.to_vec(),
            params: Hyperparameters::default(),
            references: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    /// Exactly two algorithms, or empty for the two best by test AUC.
    pub components: Vec<Algorithm>,
    pub grid_step: f64,
    pub cutoff_low: f64,
    pub cutoff_high: f64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            components: Vec::new(),
            grid_step: 0.01,
            cutoff_low: DEFAULT_CUTOFF_LOW,
            cutoff_high: DEFAULT_CUTOFF_HIGH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurvivalConfig {
    pub confidence_level: f64,
}

impl Default for SurvivalConfig {
    fn default() -> Self {
        SurvivalConfig { confidence_level: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoxConfig {
    pub ties: Ties,
    pub max_iter: usize,
    pub screen_separation: bool,
    /// Name of the 0/1 column built from the predicted labels.
    pub group_column: String,
    pub references: BTreeMap<String, String>,
    pub models: Vec<ModelSpec>,
}

impl Default for CoxConfig {
    fn default() -> Self {
        CoxConfig {
            ties: Ties::Efron,
            max_iter: 25,
            screen_separation: false,
            group_column: "inno".into(),
            references: manufacturing_milan_references(),
            models: standard_suite(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::usage(format!("config is not valid TOML: {e}")))?;
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| firmsurv_core::Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn from_table(table: toml::Table) -> CliResult<Self> {
        let cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::usage(format!("invalid config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Apply `section.key=value` overrides; values are parsed as TOML and fall
    /// back to plain strings.
    pub fn with_overrides(&self, overrides: &[String]) -> CliResult<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut table = toml::Table::try_from(self).expect("config always serializes");
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("override `{item}` is not of the form key=value")))?;
            let value = parse_value(raw.trim());
            let path: Vec<&str> = key.trim().split('.').collect();
            set_path(&mut table, &path, value).map_err(|m| CliError::usage(format!("override `{item}`: {m}")))?;
        }
        Self::from_table(table)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Core(firmsurv_core::Error::domain(m)));
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return bad(format!(
                "split.train_fraction {} must lie in (0, 1)",
                self.split.train_fraction
            ));
        }
        if self.smote.k == 0 || self.smote.under_pct == 0 {
            return bad("smote.k and smote.under_pct must be positive".into());
        }
        if !(self.cleansing.harmonize_threshold >= 0.0 && self.cleansing.harmonize_threshold <= 1.0) {
            return bad("cleansing.harmonize_threshold must lie in [0, 1]".into());
        }
        if self.classifiers.algorithms.is_empty() {
            return bad("classifiers.algorithms is empty".into());
        }
        self.classifiers.params.validate()?;
        match self.mixture.components.as_slice() {
            [] => {}
            [a, b] if a != b => {
                for c in [a, b] {
                    if !self.classifiers.algorithms.contains(c) {
                        return bad(format!("mixture component `{c}` is not among classifiers.algorithms"));
                    }
                }
            }
            _ => return bad("mixture.components must name two different algorithms".into()),
        }
        if !(self.mixture.grid_step > 0.0 && self.mixture.grid_step <= 1.0) {
            return bad("mixture.grid_step must lie in (0, 1]".into());
        }
        let (lo, hi) = (self.mixture.cutoff_low, self.mixture.cutoff_high);
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return bad(format!("cutoffs must satisfy 0 <= low < high <= 1 (got {lo}, {hi})"));
        }
        if !(self.survival.confidence_level > 0.0 && self.survival.confidence_level < 1.0) {
            return bad("survival.confidence_level must lie in (0, 1)".into());
        }
        if self.cox.max_iter == 0 {
            return bad("cox.max_iter must be at least 1".into());
        }
        if self.paths.train.is_none() {
            self.synthetic.spec(self.synthetic.n_rows, self.seed).validate()?;
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<(), String> {
    match path {
        [] => Err("empty key".into()),
        [last] => {
            table.insert((*last).to_string(), value);
            Ok(())
        }
        [head, rest @ ..] => {
            let entry = table
                .entry((*head).to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => set_path(t, rest, value),
                _ => Err(format!("`{head}` is not a section")),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(PipelineConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn overrides_win() {
        let cfg = PipelineConfig::from_toml("seed = 1\n[split]\ntrain_fraction = 0.7\n").unwrap();
        let o = cfg
            .with_overrides(&[
                "split.train_fraction=0.6".into(),
                "mixture.components=[\"bag\", \"ann\"]".into(),
                "classifiers.params.bag.members=7".into(),
                "paths.output=out dir".into(),
            ])
            .unwrap();
        assert_eq!(o.seed, 1);
        assert_eq!(o.split.train_fraction, 0.6);
        assert_eq!(o.mixture.components, vec![Algorithm::Bag, Algorithm::Ann]);
        assert_eq!(o.classifiers.params.bag.members, 7);
        assert_eq!(o.paths.output, PathBuf::from("out dir"));
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let e = PipelineConfig::from_toml("[split]\ntrain_fracton = 0.7\n").unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e = PipelineConfig::default()
            .with_overrides(&["split.train_fraction=1.5".into()])
            .unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(PipelineConfig::default().with_overrides(&["nonsense".into()]).is_err());
        assert!(PipelineConfig::default()
            .with_overrides(&["mixture.components=[\"bag\"]".into()])
            .is_err());
    }
}
