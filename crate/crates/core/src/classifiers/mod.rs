//! Binary classifiers with a common fit / predict-probability contract.

pub mod ann;
pub mod bagging;
pub mod features;
pub mod logit;
pub mod naive_bayes;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{write_atomic, Dataset};
use crate::error::{Error, Result};
use crate::rng;

pub use ann::{AnnModel, AnnParams};
pub use bagging::{bootstrap_samples, BagModel, BagParams};
pub use features::{Design, FeatureInfo, FeatureKind, FeatureSchema, FeatureTable};
pub use logit::{LogitModel, LogitParams};
pub use naive_bayes::{NbModel, NbParams};
pub use tree::{CtreeParams, Impurity, TreeModel, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rpart,
    Tree,
    Ctree,
    Bag,
    Logit,
    Nb,
    Ann,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Rpart,
        Algorithm::Tree,
        Algorithm::Ctree,
        Algorithm::Bag,
        Algorithm::Logit,
        Algorithm::Nb,
        Algorithm::Ann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rpart => "rpart",
            Algorithm::Tree => "tree",
            Algorithm::Ctree => "ctree",
            Algorithm::Bag => "bag",
            Algorithm::Logit => "logit",
            Algorithm::Nb => "nb",
            Algorithm::Ann => "ann",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::domain(format!(
                    "unknown algorithm `{s}` (expected one of rpart, tree, ctree, bag, logit, nb, ann)"
                ))
            })
    }
}

/// Hyperparameters for every learner; only the record matching the chosen
/// algorithm is consulted (bagging also reads `tree`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub tree: TreeParams,
    pub ctree: CtreeParams,
    pub bag: BagParams,
    pub logit: LogitParams,
    pub nb: NbParams,
    pub ann: AnnParams,
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::domain(m.to_string()));
        if self.tree.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if !(self.tree.cp >= 0.0) {
            return bad("cp must be non-negative");
        }
        if !(self.ctree.alpha > 0.0 && self.ctree.alpha < 1.0) {
            return bad("ctree alpha must lie in (0, 1)");
        }
        if self.ctree.permutations == 0 {
            return bad("ctree needs at least one permutation");
        }
        if self.bag.members == 0 {
            return bad("bagging needs at least one member");
        }
        if self.logit.max_iter == 0 {
            return bad("logit max_iter must be at least 1");
        }
        if !(self.nb.variance_floor > 0.0) || !(self.nb.laplace >= 0.0) {
            return bad("naive Bayes variance floor must be positive and smoothing non-negative");
        }
        if self.ann.hidden == 0 || !(self.ann.learning_rate > 0.0) || !(self.ann.weight_decay >= 0.0) {
            return bad("network needs H >= 1, learning rate > 0, weight decay >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub params: Hyperparameters,
    pub seed: u64,
    /// Reference level per categorical feature for dummy coding.
    #[serde(default)]
    pub references: BTreeMap<String, String>,
}

impl ClassifierSpec {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        ClassifierSpec {
            algorithm,
            params: Hyperparameters::default(),
            seed,
            references: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Model {
    Tree(TreeModel),
    Bagging(BagModel),
    Logit(LogitModel),
    NaiveBayes(NbModel),
    Ann(AnnModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub algorithm: Algorithm,
    pub schema: FeatureSchema,
    pub model: Model,
}

const MODEL_FORMAT: &str = "firmsurv-classifier";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    #[serde(flatten)]
    classifier: TrainedClassifier,
}

pub fn fit(train: &Dataset, spec: &ClassifierSpec) -> Result<TrainedClassifier> {
    spec.params.validate()?;
    let labels = train.labels()?;
    if labels.is_empty() {
        return Err(Error::domain("training set has zero rows"));
    }
    let schema = FeatureSchema::from_training(train, &spec.references)?;
    let table = schema.table(train)?;
    let p = &spec.params;
    let seed = rng::derive_seed(spec.seed, spec.algorithm.name());
    let model = match spec.algorithm {
        Algorithm::Rpart => Model::Tree(tree::fit_tree(
            &schema,
            &table,
            &labels,
            &p.tree,
            tree::Selection::Exhaustive(Impurity::Gini),
        )?),
        Algorithm::Tree => Model::Tree(tree::fit_tree(
            &schema,
            &table,
            &labels,
            &p.tree,
            tree::Selection::Exhaustive(Impurity::Entropy),
        )?),
        Algorithm::Ctree => {
            let growth = TreeParams { cp: 0.0, ..p.tree };
            Model::Tree(tree::fit_tree(
                &schema,
                &table,
                &labels,
                &growth,
                tree::Selection::Conditional { params: p.ctree, seed },
            )?)
        }
        Algorithm::Bag => Model::Bagging(bagging::fit_bagging(&schema, &table, &labels, &p.tree, &p.bag, seed)?),
        Algorithm::Logit => Model::Logit(logit::fit_logit(&schema.design(&table, false), &labels, &p.logit)?),
        Algorithm::Nb => Model::NaiveBayes(naive_bayes::fit_naive_bayes(&schema, &table, &labels, &p.nb)?),
        Algorithm::Ann => Model::Ann(ann::fit_ann(&schema.design(&table, true), &labels, &p.ann, seed)?),
    };
    log::debug!("trained {} on {} rows", spec.algorithm, labels.len());
    Ok(TrainedClassifier {
        algorithm: spec.algorithm,
        schema,
        model,
    })
}

impl TrainedClassifier {
    /// Probability of class 1 for every row of `data`.
    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        let table = self.schema.table(data)?;
        Ok(self.predict_table(&table))
    }

    pub fn predict_table(&self, table: &FeatureTable) -> Vec<f64> {
        let raw = match &self.model {
            Model::Tree(t) => t.predict(table),
            Model::Bagging(b) => b.predict(table),
            Model::Logit(l) => l.predict(&self.schema.design(table, false)),
            Model::NaiveBayes(nb) => nb.predict(table),
            Model::Ann(a) => a.predict(&self.schema.design(table, true)),
        };
        raw.into_iter().map(|p| p.clamp(0.0, 1.0)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Envelope {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            classifier: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text)?;
        if env.format != MODEL_FORMAT {
            return Err(Error::domain(format!(
                "not a classifier file (format `{}`)",
                env.format
            )));
        }
        if env.version != MODEL_VERSION {
            return Err(Error::domain(format!(
                "unsupported classifier file version {}",
                env.version
            )));
        }
        Ok(env.classifier)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
