//! ROC analysis, confusion matrices, cutoff selection and two-sample tests.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Points ordered by strictly decreasing threshold, from `(0, 0)` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

fn class_counts(labels: &[u8]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::domain("both classes must be present"));
    }
    Ok((pos, neg))
}

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::domain("scores contain NaN"));
    }
    Ok(())
}

/// One point per distinct score (classifying `score >= threshold` as
/// positive), preceded by a sentinel above every score that classifies
/// everything negative. The sentinel is 1 unless some score reaches 1.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let max = scores[order[0]];
    let top = if max < 1.0 { 1.0 } else { max.next_up() };
    let mut points = vec![RocPoint {
        threshold: top,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    Ok(RocCurve {
        points,
        auc,
        positives: pos,
        negatives: neg,
    })
}

pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    roc_curve(scores, labels).map(|r| r.auc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl ConfusionMatrix {
    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    /// Zero when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        self.sensitivity()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }
}

/// Counts under the rule `score >= cutoff` means positive.
pub fn confusion(scores: &[f64], labels: &[u8], cutoff: f64) -> ConfusionMatrix {
    let mut m = ConfusionMatrix {
        tn: 0,
        fp: 0,
        fn_: 0,
        tp: 0,
    };
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= cutoff, y == 1) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, true) => m.fn_ += 1,
            (false, false) => m.tn += 1,
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffCriterion {
    Youden,
    Closest01,
    MaxSensSpecProduct,
}

impl CutoffCriterion {
    pub const ALL: [CutoffCriterion; 3] = [
        CutoffCriterion::Youden,
        CutoffCriterion::Closest01,
        CutoffCriterion::MaxSensSpecProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CutoffCriterion::Youden => "youden",
            CutoffCriterion::Closest01 => "closest01",
            CutoffCriterion::MaxSensSpecProduct => "max_sens_spec_product",
        }
    }

    /// Larger is better.
    fn score(self, p: &RocPoint) -> f64 {
        match self {
            CutoffCriterion::Youden => p.tpr - p.fpr,
            CutoffCriterion::Closest01 => -((1.0 - p.tpr).powi(2) + p.fpr.powi(2)).sqrt(),
            CutoffCriterion::MaxSensSpecProduct => p.tpr * (1.0 - p.fpr),
        }
    }
}

impl fmt::Display for CutoffCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CutoffCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CutoffCriterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown cutoff criterion `{s}`")))
    }
}

/// Threshold of the ROC point optimizing `criterion`; ties go to the larger
/// threshold.
pub fn select_cutoff(roc: &RocCurve, criterion: CutoffCriterion) -> f64 {
    let mut best = &roc.points[0];
    let mut best_score = criterion.score(best);
    for p in &roc.points[1..] {
        let s = criterion.score(p);
        if s > best_score {
            best = p;
            best_score = s;
        }
    }
    best.threshold
}

/// `|mean(scores | y = 1) - mean(scores | y = 0)|`.
pub fn separation_score(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels)?;
    let (mut s1, mut s0) = (0.0, 0.0);
    for (&s, &y) in scores.iter().zip(labels) {
        if y == 1 {
            s1 += s;
        } else {
            s0 += s;
        }
    }
    Ok((s1 / pos as f64 - s0 / neg as f64).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

const VARIANCE_FLOOR: f64 = 1e-12;

/// Welch's unequal-variance t test, two-sided.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::domain("each sample needs at least two observations"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = crate::stats::mean(a);
    let mb = crate::stats::mean(b);
    let mut va = crate::stats::sample_variance(a);
    let mut vb = crate::stats::sample_variance(b);
    if va == 0.0 && vb == 0.0 {
        if ma == mb {
            return Ok(WelchTest {
                t: 0.0,
                df: na + nb - 2.0,
                p_value: 1.0,
                mean_a: ma,
                mean_b: mb,
            });
        }
        log::warn!("both samples have zero variance; flooring variances at {VARIANCE_FLOOR}");
        va = VARIANCE_FLOOR;
        vb = VARIANCE_FLOOR;
    }
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(WelchTest {
        t,
        df,
        p_value: special::student_t_two_sided(t, df),
        mean_a: ma,
        mean_b: mb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pairwise oracle: (concordant + ties / 2) / (pos * neg).
    fn mann_whitney(scores: &[f64], labels: &[u8]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &yi) in labels.iter().enumerate() {
            for (j, &yj) in labels.iter().enumerate() {
                if yi == 1 && yj == 0 {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn fixture_auc() {
        let s = [0.1, 0.4, 0.35, 0.8];
        let y = [0, 0, 1, 1];
        assert_eq!(mann_whitney(&s, &y), 0.75);
        assert!((auc(&s, &y).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_constant_scores() {
        let r = roc_curve(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.auc, 1.0);
        assert!(r.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        for c in CutoffCriterion::ALL {
            assert_eq!(select_cutoff(&r, c), 0.8);
        }
        let flat = roc_curve(&[0.3; 4], &[0, 1, 0, 1]).unwrap();
        assert_eq!(flat.points.len(), 2);
        assert_eq!(flat.auc, 0.5);
        for c in CutoffCriterion::ALL {
            assert_eq!(select_cutoff(&flat, c), 1.0);
        }
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(roc_curve(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(separation_score(&[0.1, 0.2], &[0, 0]).is_err());
    }

    #[test]
    fn reported_bag_recall() {
        let m = ConfusionMatrix {
            tn: 0,
            fp: 0,
            fn_: 32,
            tp: 118,
        };
        assert!((m.recall() - 118.0 / 150.0).abs() < 1e-15);
        assert_eq!(format!("{:.0}%", 100.0 * m.recall()), "79%");
    }

    #[test]
    fn confusion_by_enumeration() {
        let s = [0.1, 0.4, 0.35, 0.8];
        let y = [0, 0, 1, 1];
        let m = confusion(&s, &y, 0.35);
        // predicted positive: 0.4 (neg), 0.35 (pos), 0.8 (pos)
        assert_eq!((m.tn, m.fp, m.fn_, m.tp), (1, 1, 0, 2));
        let all = confusion(&s, &y, 0.0);
        assert_eq!((all.tn, all.fn_), (0, 0));
    }

    #[test]
    fn five_point_cutoffs_match_exhaustive_sweep() {
        let s = [0.9, 0.7, 0.6, 0.4, 0.2];
        let y = [1, 0, 1, 0, 1];
        let roc = roc_curve(&s, &y).unwrap();
        let mut thresholds = s.to_vec();
        thresholds.push(1.0);
        for c in CutoffCriterion::ALL {
            let eval = |t: f64| {
                let m = confusion(&s, &y, t);
                let (tpr, fpr) = (m.sensitivity(), 1.0 - m.specificity());
                match c {
                    CutoffCriterion::Youden => tpr - fpr,
                    CutoffCriterion::Closest01 => -((1.0 - tpr).powi(2) + fpr * fpr).sqrt(),
                    CutoffCriterion::MaxSensSpecProduct => tpr * (1.0 - fpr),
                }
            };
            let mut best = (f64::NEG_INFINITY, 0.0);
            for &t in &thresholds {
                let v = eval(t);
                if v > best.0 + 1e-15 || ((v - best.0).abs() <= 1e-15 && t > best.1) {
                    best = (v, t);
                }
            }
            assert_eq!(select_cutoff(&roc, c), best.1, "{c}");
        }
    }

    #[test]
    fn separation_examples() {
        assert!((separation_score(&[0.2, 0.4, 0.7, 0.9], &[0, 0, 1, 1]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(separation_score(&[1.0, 0.0], &[1, 0]).unwrap(), 1.0);
        assert_eq!(separation_score(&[0.3, 0.3], &[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn welch_by_hand() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        // means 2.5, 5; variances 5/3, 20/3
        let (sa, sb) = (5.0 / 3.0 / 4.0, 20.0 / 3.0 / 4.0);
        let t = (2.5 - 5.0) / f64::sqrt(sa + sb);
        let df = (sa + sb) * (sa + sb) / (sa * sa / 3.0 + sb * sb / 3.0);
        let w = welch_t_test(&a, &b).unwrap();
        assert!((w.t - t).abs() < 1e-10);
        assert!((w.df - df).abs() < 1e-10);
        assert!(w.p_value > 0.0 && w.p_value < 1.0);
    }

    #[test]
    fn welch_edge_cases() {
        let a = [1.0, 2.0, 3.0];
        let same = welch_t_test(&a, &a).unwrap();
        assert_eq!((same.t, same.p_value), (0.0, 1.0));
        let shifted: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert!(welch_t_test(&a, &shifted).unwrap().p_value < 0.01);
        let flat = welch_t_test(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(flat.p_value, 1.0);
        assert!(welch_t_test(&[1.0], &a).is_err());
    }

    #[test]
    fn trapezoid_equals_pairwise_on_random_fixtures() {
        use rand::Rng as _;
        let mut r = crate::rng::stream(1, "roc");
        for _ in 0..200 {
            let n = r.random_range(2..60);
            let s: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..10u8)) / 10.0).collect();
            let mut y: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
            y[0] = 0;
            y[1] = 1;
            assert!((auc(&s, &y).unwrap() - mann_whitney(&s, &y)).abs() < 1e-12);
        }
    }
}
