//! Convex mixture of two classifiers and the dual-cutoff abstention rule.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::TrainedClassifier;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{auc, separation_score};

pub const DEFAULT_CUTOFF_LOW: f64 = 0.2;
pub const DEFAULT_CUTOFF_HIGH: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub alpha: f64,
    pub component_a: TrainedClassifier,
    pub component_b: TrainedClassifier,
    pub cutoff_low: f64,
    pub cutoff_high: f64,
}

impl MixtureModel {
    pub fn new(alpha: f64, component_a: TrainedClassifier, component_b: TrainedClassifier) -> Result<Self> {
        let m = MixtureModel {
            alpha,
            component_a,
            component_b,
            cutoff_low: DEFAULT_CUTOFF_LOW,
            cutoff_high: DEFAULT_CUTOFF_HIGH,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_cutoffs(mut self, low: f64, high: f64) -> Result<Self> {
        self.cutoff_low = low;
        self.cutoff_high = high;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::domain(format!("mixture weight {} outside [0, 1]", self.alpha)));
        }
        validate_cutoffs(self.cutoff_low, self.cutoff_high)?;
        if self.component_a.schema.names() != self.component_b.schema.names() {
            return Err(Error::domain(
                "mixture components were trained on different feature sets",
            ));
        }
        Ok(())
    }
}

fn validate_cutoffs(low: f64, high: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || !(low < high) {
        return Err(Error::domain(format!(
            "cutoffs must satisfy 0 <= low < high <= 1 (got {low}, {high})"
        )));
    }
    Ok(())
}

pub fn mix(alpha: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(pa, pb)| (alpha * pa + (1.0 - alpha) * pb).clamp(0.0, 1.0))
        .collect()
}

pub fn predict_mixture(m: &MixtureModel, data: &Dataset) -> Result<Vec<f64>> {
    m.validate()?;
    let a = m.component_a.predict_proba(data)?;
    let b = m.component_b.predict_proba(data)?;
    Ok(mix(m.alpha, &a, &b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub alpha: f64,
    pub auc: f64,
    pub separation: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSearch {
    pub alpha: f64,
    pub objective: f64,
    pub grid_step: f64,
    pub trace: Vec<TracePoint>,
}

/// The grid `{0, step, 2 step, ...}` capped at 1, always ending in 1.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::domain(format!("grid step {step} must lie in (0, 1]")));
    }
    let n = (1.0 / step - 1e-9).ceil() as usize;
    Ok((0..=n).map(|k| (k as f64 * step).min(1.0)).collect())
}

/// Grid search for the weight maximizing AUC times separation score of the
/// mixed predictions; ties go to the larger weight.
pub fn optimize_weight(scores_a: &[f64], scores_b: &[f64], labels: &[u8], grid_step: f64) -> Result<WeightSearch> {
    if scores_a.len() != scores_b.len() || scores_a.len() != labels.len() {
        return Err(Error::domain("score vectors and labels differ in length"));
    }
    let grid = alpha_grid(grid_step)?;
    let trace = grid
        .par_iter()
        .map(|&alpha| {
            let p = mix(alpha, scores_a, scores_b);
            let auc = auc(&p, labels)?;
            let separation = separation_score(&p, labels)?;
            Ok(TracePoint {
                alpha,
                auc,
                separation,
                objective: auc * separation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = trace
        .iter()
        .fold(None::<&TracePoint>, |best, t| match best {
            Some(b) if b.objective > t.objective => Some(b),
            _ => Some(t),
        })
        .expect("grid is never empty");
    Ok(WeightSearch {
        alpha: best.alpha,
        objective: best.objective,
        grid_step,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbstentionLabel {
    #[serde(rename = "NOINN")]
    Noinn,
    #[serde(rename = "INN")]
    Inn,
    #[serde(rename = "UNCLASSIFIED")]
    Unclassified,
}

impl AbstentionLabel {
    pub fn name(self) -> &'static str {
        match self {
            AbstentionLabel::Noinn => "NOINN",
            AbstentionLabel::Inn => "INN",
            AbstentionLabel::Unclassified => "UNCLASSIFIED",
        }
    }
}

impl fmt::Display for AbstentionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstentionCounts {
    pub noinn: usize,
    pub inn: usize,
    pub unclassified: usize,
}

impl AbstentionCounts {
    pub fn total(&self) -> usize {
        self.noinn + self.inn + self.unclassified
    }

    /// Fractions in the order NOINN, INN, UNCLASSIFIED.
    pub fn fractions(&self) -> [f64; 3] {
        let n = self.total().max(1) as f64;
        [self.noinn as f64 / n, self.inn as f64 / n, self.unclassified as f64 / n]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abstention {
    pub labels: Vec<AbstentionLabel>,
    pub counts: AbstentionCounts,
}

/// `p < low` is NOINN, `p > high` is INN, anything else (including the
/// cutoffs themselves) is UNCLASSIFIED.
pub fn label_probabilities(probs: &[f64], low: f64, high: f64) -> Result<Abstention> {
    validate_cutoffs(low, high)?;
    let mut counts = AbstentionCounts {
        noinn: 0,
        inn: 0,
        unclassified: 0,
    };
    let labels = probs
        .iter()
        .map(|&p| {
            if p < low {
                counts.noinn += 1;
                AbstentionLabel::Noinn
            } else if p > high {
                counts.inn += 1;
                AbstentionLabel::Inn
            } else {
                counts.unclassified += 1;
                AbstentionLabel::Unclassified
            }
        })
        .collect();
    Ok(Abstention { labels, counts })
}

pub fn classify_with_abstention(m: &MixtureModel, data: &Dataset) -> Result<(Vec<f64>, Abstention)> {
    let p = predict_mixture(m, data)?;
    let a = label_probabilities(&p, m.cutoff_low, m.cutoff_high)?;
    Ok((p, a))
}
