//! Cox proportional-hazards regression.
//!
//! Formulas use `+` to add terms, `:` for an interaction only, and `*` for
//! main effects plus all their interactions (`a * b` = `a + b + a:b`).
//! Numeric variables enter as-is; categorical variables are dummy-coded
//! against a reference level. The baseline hazard is never estimated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::features::most_frequent;
use crate::dataset::{ColumnData, Dataset, Role};
use crate::error::{Error, Result};
use crate::linalg;
use crate::special;
use crate::survival::SurvivalSample;

/// One additive term: a main effect (one factor) or an interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub factors: Vec<String>,
}

impl Term {
    pub fn label(&self) -> String {
        self.factors.join(":")
    }
}

pub fn parse_formula(formula: &str) -> Result<Vec<Term>> {
    let mut terms: Vec<Term> = Vec::new();
    let push = |t: Term, terms: &mut Vec<Term>| {
        if !terms.contains(&t) {
            terms.push(t);
        }
    };
    for chunk in formula.split('+') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            return Err(Error::domain(format!("empty term in formula `{formula}`")));
        }
        let check = |name: &str| -> Result<String> {
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
                return Err(Error::domain(format!(
                    "bad variable name `{name}` in formula `{formula}`"
                )));
            }
            Ok(name.to_string())
        };
        if chunk.contains('*') {
            if chunk.contains(':') {
                return Err(Error::domain(format!("cannot mix `*` and `:` in term `{chunk}`")));
            }
            let names = chunk.split('*').map(check).collect::<Result<Vec<_>>>()?;
            // every non-empty subset, smaller subsets first
            let k = names.len();
            let mut subsets: Vec<Vec<usize>> = (1u32..(1 << k))
                .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect())
                .collect();
            subsets.sort_by_key(|s| s.len());
            for s in subsets {
                push(
                    Term {
                        factors: s.iter().map(|&i| names[i].clone()).collect(),
                    },
                    &mut terms,
                );
            }
        } else {
            let factors = chunk.split(':').map(check).collect::<Result<Vec<_>>>()?;
            push(Term { factors }, &mut terms);
        }
    }
    Ok(terms)
}

/// Reference levels sector = C (manufacturing) and location = MI (Milan).
pub fn manufacturing_milan_references() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("sector".to_string(), "C".to_string()),
        ("location".to_string(), "MI".to_string()),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedColumn {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    /// Term each column came from.
    pub term_map: Vec<String>,
    pub reference_levels: BTreeMap<String, String>,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major values.
    pub values: Vec<f64>,
    /// Indices of the source rows kept (no missing formula variable,
    /// duration or event).
    pub rows: Vec<usize>,
    pub removed: Vec<RemovedColumn>,
}

impl DesignMatrix {
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.values[i * self.n_cols + j]).collect()
    }

    /// Survival records of the retained rows, in design order.
    pub fn survival_samples(&self, data: &Dataset) -> Result<Vec<SurvivalSample>> {
        crate::survival::samples_from_dataset(&data.select_rows(&self.rows), None)
    }

    /// Remove the named columns, recording `reason`.
    pub fn drop_columns(&self, names: &[String], reason: &str) -> DesignMatrix {
        let keep: Vec<usize> = (0..self.n_cols)
            .filter(|&j| !names.contains(&self.column_names[j]))
            .collect();
        let mut removed = self.removed.clone();
        removed.extend(
            names
                .iter()
                .filter(|n| self.column_names.contains(n))
                .map(|n| RemovedColumn {
                    name: n.clone(),
                    reason: reason.into(),
                }),
        );
        self.subset(&keep, removed)
    }

    fn subset(&self, keep: &[usize], removed: Vec<RemovedColumn>) -> DesignMatrix {
        let p = keep.len();
        let mut values = Vec::with_capacity(self.n_rows * p);
        for i in 0..self.n_rows {
            values.extend(keep.iter().map(|&j| self.values[i * self.n_cols + j]));
        }
        DesignMatrix {
            column_names: keep.iter().map(|&j| self.column_names[j].clone()).collect(),
            term_map: keep.iter().map(|&j| self.term_map[j].clone()).collect(),
            reference_levels: self.reference_levels.clone(),
            n_rows: self.n_rows,
            n_cols: p,
            values,
            rows: self.rows.clone(),
            removed,
        }
    }
}

struct Encoded {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

/// Dummy-code the formula variables of `data`. Rows missing any formula
/// variable, the duration or the event are dropped; all-zero and aliased
/// columns are removed and reported.
pub fn build_design(data: &Dataset, formula: &[Term], references: &BTreeMap<String, String>) -> Result<DesignMatrix> {
    let mut variables: Vec<&str> = Vec::new();
    for t in formula {
        for f in &t.factors {
            if !variables.contains(&f.as_str()) {
                variables.push(f);
            }
        }
    }
    let mut needed = Vec::new();
    for v in &variables {
        needed.push(
            data.column_index(v)
                .ok_or_else(|| Error::domain(format!("formula variable `{v}` is not a column")))?,
        );
    }
    for role in [Role::Duration, Role::Event] {
        needed.push(
            data.role_index(role)
                .ok_or_else(|| Error::domain(format!("dataset has no {role:?} column")))?,
        );
    }
    let rows: Vec<usize> = (0..data.n_rows())
        .filter(|&r| needed.iter().all(|&c| !data.is_missing(r, c)))
        .collect();
    if rows.len() < data.n_rows() {
        log::info!(
            "dropped {} rows with missing formula variables",
            data.n_rows() - rows.len()
        );
    }
    let n = rows.len();

    let mut reference_levels = BTreeMap::new();
    let mut encoded: BTreeMap<&str, Encoded> = BTreeMap::new();
    for (v, &c) in variables.iter().zip(&needed) {
        let spec = data.spec(c);
        let enc = match data.column(c) {
            ColumnData::Numeric(values) => Encoded {
                names: vec![v.to_string()],
                columns: vec![rows.iter().map(|&r| values[r].unwrap_or(f64::NAN)).collect()],
            },
            ColumnData::Categorical(codes) => {
                let mut counts = vec![0usize; spec.vocabulary.len()];
                for &r in &rows {
                    if let Some(k) = codes[r] {
                        counts[k as usize] += 1;
                    }
                }
                let observed = counts.iter().filter(|&&c| c > 0).count();
                if observed < 2 {
                    return Err(Error::domain(format!(
                        "categorical variable `{v}` has {observed} observed level(s); at least 2 are needed"
                    )));
                }
                let reference = match references.get(*v) {
                    Some(level) => spec
                        .code_of(level)
                        .ok_or_else(|| Error::domain(format!("reference level `{level}` is not a level of `{v}`")))?,
                    None => most_frequent(&counts),
                };
                reference_levels.insert(v.to_string(), spec.vocabulary[reference as usize].clone());
                let mut names = Vec::new();
                let mut columns = Vec::new();
                for (k, level) in spec.vocabulary.iter().enumerate() {
                    if counts[k] == 0 || k as u32 == reference {
                        continue;
                    }
                    names.push(format!("{v}={level}"));
                    columns.push(
                        rows.iter()
                            .map(|&r| f64::from(u8::from(codes[r] == Some(k as u32))))
                            .collect(),
                    );
                }
                Encoded { names, columns }
            }
        };
        encoded.insert(v, enc);
    }

    let mut names = Vec::new();
    let mut term_map = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for t in formula {
        // cartesian product of the factor columns
        let mut acc: Vec<(String, Vec<f64>)> = vec![(String::new(), vec![1.0; n])];
        for f in &t.factors {
            let e = &encoded[f.as_str()];
            let mut next = Vec::new();
            for (prefix, base) in &acc {
                for (name, col) in e.names.iter().zip(&e.columns) {
                    let label = if prefix.is_empty() {
                        name.clone()
                    } else {
                        format!("{prefix}:{name}")
                    };
                    next.push((label, base.iter().zip(col).map(|(a, b)| a * b).collect()));
                }
            }
            acc = next;
        }
        for (name, col) in acc {
            names.push(name);
            term_map.push(t.label());
            columns.push(col);
        }
    }

    let p = columns.len();
    let mut values = vec![0.0; n * p];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            values[i * p + j] = col[i];
        }
    }
    let full = DesignMatrix {
        column_names: names,
        term_map,
        reference_levels,
        n_rows: n,
        n_cols: p,
        values,
        rows,
        removed: Vec::new(),
    };
    let mut removed = Vec::new();
    let zero: Vec<usize> = (0..p).filter(|&j| columns[j].iter().all(|&x| x == 0.0)).collect();
    for &j in &zero {
        removed.push(RemovedColumn {
            name: full.column_names[j].clone(),
            reason: "all zero".into(),
        });
    }
    let nonzero: Vec<usize> = (0..p).filter(|j| !zero.contains(j)).collect();
    let reduced = full.subset(&nonzero, Vec::new());
    let aliased = linalg::aliased_columns(&reduced.values, n, reduced.n_cols, true);
    for &j in &aliased {
        removed.push(RemovedColumn {
            name: reduced.column_names[j].clone(),
            reason: "aliased".into(),
        });
    }
    let keep: Vec<usize> = (0..reduced.n_cols).filter(|j| !aliased.contains(j)).collect();
    let design = reduced.subset(&keep, removed);
    for r in &design.removed {
        log::warn!("design column `{}` removed ({})", r.name, r.reason);
    }
    if design.n_cols == 0 && p > 0 {
        return Err(Error::domain(
            "design is empty after removing all-zero and aliased columns",
        ));
    }
    Ok(design)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ties {
    #[default]
    Efron,
    Breslow,
}

impl FromStr for Ties {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "efron" => Ok(Ties::Efron),
            "breslow" => Ok(Ties::Breslow),
            _ => Err(Error::domain(format!("unknown ties method `{s}` (efron or breslow)"))),
        }
    }
}

/// Subjects sorted by decreasing duration, grouped by equal duration.
struct RiskSets {
    order: Vec<usize>,
    groups: Vec<(usize, usize)>,
}

impl RiskSets {
    fn new(samples: &[SurvivalSample]) -> Self {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[b].duration.total_cmp(&samples[a].duration));
        let mut groups = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let t = samples[order[i]].duration;
            let start = i;
            while i < order.len() && samples[order[i]].duration == t {
                i += 1;
            }
            groups.push((start, i));
        }
        RiskSets { order, groups }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialLikelihood {
    pub loglik: f64,
    pub gradient: Vec<f64>,
    /// Observed information (negative Hessian), row-major.
    pub information: Vec<f64>,
}

pub fn partial_likelihood(
    x: &[f64],
    p: usize,
    samples: &[SurvivalSample],
    beta: &[f64],
    ties: Ties,
) -> PartialLikelihood {
    evaluate(x, p, samples, &RiskSets::new(samples), beta, ties)
}

fn evaluate(
    x: &[f64],
    p: usize,
    samples: &[SurvivalSample],
    sets: &RiskSets,
    beta: &[f64],
    ties: Ties,
) -> PartialLikelihood {
    let n = samples.len();
    let eta: Vec<f64> = (0..n)
        .map(|i| x[i * p..(i + 1) * p].iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect();
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let (mut s0, mut s1, mut s2) = (0.0, vec![0.0; p], vec![0.0; p * p]);
    let (mut d1, mut d2) = (vec![0.0; p], vec![0.0; p * p]);
    let mut loglik = 0.0;
    let mut grad = vec![0.0; p];
    let mut info = vec![0.0; p * p];
    let mut mean = vec![0.0; p];
    for &(start, end) in &sets.groups {
        let mut deaths = 0usize;
        let mut d0 = 0.0;
        d1.iter_mut().for_each(|v| *v = 0.0);
        d2.iter_mut().for_each(|v| *v = 0.0);
        for &i in &sets.order[start..end] {
            let xi = &x[i * p..(i + 1) * p];
            let w = (eta[i] - shift).exp();
            s0 += w;
            for a in 0..p {
                let wa = w * xi[a];
                s1[a] += wa;
                for b in 0..=a {
                    s2[a * p + b] += wa * xi[b];
                }
            }
            if samples[i].event {
                deaths += 1;
                loglik += eta[i] - shift;
                d0 += w;
                for a in 0..p {
                    let wa = w * xi[a];
                    grad[a] += xi[a];
                    d1[a] += wa;
                    for b in 0..=a {
                        d2[a * p + b] += wa * xi[b];
                    }
                }
            }
        }
        if deaths == 0 {
            continue;
        }
        let d = deaths as f64;
        for l in 0..deaths {
            let f = match ties {
                Ties::Efron => l as f64 / d,
                Ties::Breslow => 0.0,
            };
            let r0 = s0 - f * d0;
            loglik -= r0.ln();
            for a in 0..p {
                mean[a] = (s1[a] - f * d1[a]) / r0;
                grad[a] -= mean[a];
            }
            for a in 0..p {
                for b in 0..=a {
                    info[a * p + b] += (s2[a * p + b] - f * d2[a * p + b]) / r0 - mean[a] * mean[b];
                }
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[b * p + a] = info[a * p + b];
        }
    }
    PartialLikelihood {
        loglik,
        gradient: grad,
        information: info,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoxOptions {
    pub ties: Ties,
    pub max_iter: usize,
    /// Drop columns flagged by the separation screen before fitting.
    pub screen_separation: bool,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions {
            ties: Ties::Efron,
            max_iter: 25,
            screen_separation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    /// Inverse observed information at the estimate, row-major.
    pub covariance: Vec<f64>,
    pub information: Vec<f64>,
    pub loglik_null: f64,
    pub loglik_fit: f64,
    pub score_null: Vec<f64>,
    pub information_null: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub ties: Ties,
    pub n: usize,
    pub n_events: usize,
}

const SEPARATION_BOUND: f64 = 15.0;

pub fn cox_fit(design: &DesignMatrix, samples: &[SurvivalSample], options: &CoxOptions) -> Result<CoxFit> {
    fit_matrix(&design.values, design.n_cols, &design.column_names, samples, options)
}

/// Fit on a raw row-major matrix with named columns.
pub fn fit_matrix(
    x: &[f64],
    p: usize,
    names: &[String],
    samples: &[SurvivalSample],
    options: &CoxOptions,
) -> Result<CoxFit> {
    let n = samples.len();
    if x.len() != n * p {
        return Err(Error::domain(format!(
            "design has {} rows but there are {n} survival records",
            x.len() / p.max(1)
        )));
    }
    let n_events = samples.iter().filter(|s| s.event).count();
    if n_events == 0 {
        return Err(Error::domain("Cox regression needs at least one event"));
    }
    let sets = RiskSets::new(samples);
    let mut beta = vec![0.0; p];
    let null = evaluate(x, p, samples, &sets, &beta, options.ties);
    let mut cur = null.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=options.max_iter.max(1) {
        if cur.gradient.iter().all(|g| g.abs() < 1e-9) {
            converged = true;
            break;
        }
        iterations = it;
        let step = match linalg::cholesky(&cur.information, p) {
            Ok(l) => linalg::cholesky_solve(&l, p, &cur.gradient),
            Err(k) => return Err(separation_or_singular(&beta, names, k)),
        };
        let mut t = 1.0;
        let (cand, next) = loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let next = evaluate(x, p, samples, &sets, &cand, options.ties);
            if next.loglik >= cur.loglik - 1e-12 * cur.loglik.abs() || t < 1e-10 {
                break (cand, next);
            }
            t *= 0.5;
        };
        if !next.loglik.is_finite() {
            return Err(Error::Divergence("partial log-likelihood is not finite".into()));
        }
        let increased = next.loglik > cur.loglik;
        let rel = (next.loglik - cur.loglik).abs() / (cur.loglik.abs() + 1e-300);
        beta = cand;
        cur = next;
        if increased {
            if let Some(j) = (0..p)
                .filter(|&j| beta[j].abs() > SEPARATION_BOUND)
                .max_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()))
            {
                return Err(Error::Separation {
                    column: names[j].clone(),
                });
            }
        }
        if rel < 1e-9 || cur.gradient.iter().all(|g| g.abs() < 1e-9) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }
    let covariance = if p == 0 {
        Vec::new()
    } else {
        let l = linalg::cholesky(&cur.information, p).map_err(|k| separation_or_singular(&beta, names, k))?;
        linalg::cholesky_inverse(&l, p)
    };
    let se = (0..p).map(|j| covariance[j * p + j].sqrt()).collect();
    Ok(CoxFit {
        names: names.to_vec(),
        beta,
        se,
        covariance,
        information: cur.information,
        loglik_null: null.loglik,
        loglik_fit: cur.loglik,
        score_null: null.gradient,
        information_null: null.information,
        iterations,
        converged,
        ties: options.ties,
        n,
        n_events,
    })
}

fn separation_or_singular(beta: &[f64], names: &[String], pivot: usize) -> Error {
    let worst = (0..beta.len()).max_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()));
    match worst {
        Some(j) if beta[j].abs() > 5.0 => Error::Separation {
            column: names[j].clone(),
        },
        _ => Error::Singular {
            columns: vec![names[pivot].clone()],
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    fn new(statistic: f64, df: usize) -> Self {
        let statistic = statistic.max(0.0);
        ChiSquareTest {
            statistic,
            df,
            p_value: if df == 0 {
                1.0
            } else {
                special::chi_square_sf(statistic, df as f64)
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoxTests {
    pub wald: ChiSquareTest,
    pub lr: ChiSquareTest,
    /// `None` when the information at zero is singular.
    pub score: Option<ChiSquareTest>,
}

/// `U' I^-1 U` at `beta = 0`; `None` when the information is singular.
fn score_statistic(score: &[f64], information: &[f64], p: usize) -> Option<ChiSquareTest> {
    if p == 0 {
        return Some(ChiSquareTest::new(0.0, 0));
    }
    linalg::cholesky(information, p).ok().map(|l| {
        let v = linalg::cholesky_solve(&l, p, score);
        ChiSquareTest::new(v.iter().zip(score).map(|(a, b)| a * b).sum(), p)
    })
}

/// Score test of `beta = 0` without fitting. Unlike the Wald and LR tests it
/// stays defined under complete separation.
pub fn score_test(x: &[f64], p: usize, samples: &[SurvivalSample], ties: Ties) -> Result<Option<ChiSquareTest>> {
    if x.len() != samples.len() * p {
        return Err(Error::domain(format!(
            "design has {} cells but {} survival records need {}",
            x.len(),
            samples.len(),
            samples.len() * p
        )));
    }
    let null = partial_likelihood(x, p, samples, &vec![0.0; p], ties);
    Ok(score_statistic(&null.gradient, &null.information, p))
}

pub fn cox_tests(fit: &CoxFit) -> CoxTests {
    let p = fit.beta.len();
    let wald = linalg::quad_form(&fit.information, p, &fit.beta);
    let lr = 2.0 * (fit.loglik_fit - fit.loglik_null);
    CoxTests {
        wald: ChiSquareTest::new(wald, p),
        lr: ChiSquareTest::new(lr, p),
        score: score_statistic(&fit.score_null, &fit.information_null, p),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardRatio {
    pub name: String,
    pub coefficient: f64,
    pub se: f64,
    #[serde(with = "crate::stats::extended_float")]
    pub hazard_ratio: f64,
    #[serde(with = "crate::stats::extended_float")]
    pub lower: f64,
    #[serde(with = "crate::stats::extended_float")]
    pub upper: f64,
    pub z: f64,
    pub p_value: f64,
}

pub fn hazard_ratios(fit: &CoxFit, level: f64) -> Vec<HazardRatio> {
    let z = special::z_for_level(level);
    fit.names
        .iter()
        .zip(fit.beta.iter().zip(&fit.se))
        .map(|(name, (&b, &se))| {
            let stat = b / se;
            HazardRatio {
                name: name.clone(),
                coefficient: b,
                se,
                hazard_ratio: b.exp(),
                lower: (b - z * se).exp(),
                upper: (b + z * se).exp(),
                z: stat,
                p_value: 2.0 * special::normal_cdf(-stat.abs()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedColumn {
    pub name: String,
    /// `+1` when the likelihood increases without bound in the coefficient,
    /// `-1` when it does so as the coefficient decreases.
    pub direction: i8,
    pub reason: String,
}

/// Screen 0/1 columns for a monotone partial likelihood. The likelihood
/// in a single dummy's coefficient rises without bound when every
/// non-carrier event happens after all carriers have left the risk set
/// (coefficient to +inf), or every carrier event happens after all
/// non-carriers have left (coefficient to -inf; this includes carriers with
/// no events at all).
pub fn detect_separation(design: &DesignMatrix, samples: &[SurvivalSample]) -> Vec<FlaggedColumn> {
    let mut flagged = Vec::new();
    for j in 0..design.n_cols {
        let col = design.column(j);
        if !col.iter().all(|&v| v == 0.0 || v == 1.0) {
            continue;
        }
        let carrier = |i: usize| col[i] == 1.0;
        let max_dur = |c: bool| {
            (0..samples.len())
                .filter(|&i| carrier(i) == c)
                .map(|i| samples[i].duration)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let events = |c: bool| -> Vec<f64> {
            (0..samples.len())
                .filter(|&i| carrier(i) == c && samples[i].event)
                .map(|i| samples[i].duration)
                .collect()
        };
        let (carrier_events, other_events) = (events(true), events(false));
        if carrier_events.is_empty() && other_events.is_empty() {
            continue;
        }
        let (max_carrier, max_other) = (max_dur(true), max_dur(false));
        let name = design.column_names[j].clone();
        if carrier_events.is_empty() {
            flagged.push(FlaggedColumn {
                name,
                direction: -1,
                reason: "no events among carriers".into(),
            });
        } else if other_events.iter().all(|&t| t > max_carrier) {
            flagged.push(FlaggedColumn {
                name,
                direction: 1,
                reason: "carrier events all precede non-carrier events".into(),
            });
        } else if carrier_events.iter().all(|&t| t > max_other) {
            flagged.push(FlaggedColumn {
                name,
                direction: -1,
                reason: "carrier events all follow non-carrier exits".into(),
            });
        }
    }
    flagged
}

/// A named formula in a model suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub label: String,
    pub formula: String,
}

/// Group dummy alone, with sector, with location, and each with its
/// interactions.
pub fn standard_suite() -> Vec<ModelSpec> {
    [
        ("(1)", "inno"),
        ("(2)", "inno + sector"),
        ("(3)", "inno + location"),
        ("(4)", "inno * sector"),
        ("(5)", "inno * location"),
    ]
    .into_iter()
    .map(|(l, f)| ModelSpec {
        label: l.into(),
        formula: f.into(),
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxReport {
    pub label: String,
    pub formula: String,
    pub design_columns: Vec<String>,
    pub reference_levels: BTreeMap<String, String>,
    pub removed_columns: Vec<RemovedColumn>,
    pub flagged_columns: Vec<FlaggedColumn>,
    pub n: usize,
    pub n_events: usize,
    pub fit: CoxFit,
    pub tests: CoxTests,
    pub hazard_ratios: Vec<HazardRatio>,
}

/// Build, screen, fit and test one formula.
pub fn run_model(
    data: &Dataset,
    spec: &ModelSpec,
    references: &BTreeMap<String, String>,
    options: &CoxOptions,
) -> Result<CoxReport> {
    let terms = parse_formula(&spec.formula)?;
    let mut design = build_design(data, &terms, references)?;
    let samples = design.survival_samples(data)?;
    let flagged = detect_separation(&design, &samples);
    if options.screen_separation && !flagged.is_empty() {
        let names: Vec<String> = flagged.iter().map(|f| f.name.clone()).collect();
        design = design.drop_columns(&names, "separation screen");
    }
    let fit = cox_fit(&design, &samples, options)?;
    let tests = cox_tests(&fit);
    Ok(CoxReport {
        label: spec.label.clone(),
        formula: spec.formula.clone(),
        design_columns: design.column_names.clone(),
        reference_levels: design.reference_levels.clone(),
        removed_columns: design.removed.clone(),
        flagged_columns: flagged,
        n: fit.n,
        n_events: fit.n_events,
        hazard_ratios: hazard_ratios(&fit, 0.95),
        fit,
        tests,
    })
}

fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// Side-by-side summary of several models: the `focus` coefficient with its
/// standard error, then sample size, log-likelihood, the three tests and
/// degrees of freedom.
pub fn render_summary(reports: &[CoxReport], focus: &str) -> String {
    let width = 18;
    let mut out = String::new();
    let _ = write!(out, "{:<22}", "");
    for r in reports {
        let _ = write!(out, "{:>width$}", r.label);
    }
    out.push('\n');
    let row = |out: &mut String, name: &str, cells: Vec<String>| {
        let _ = write!(out, "{name:<22}");
        for c in cells {
            let _ = write!(out, "{c:>width$}");
        }
        out.push('\n');
    };
    fn coef<'a>(r: &'a CoxReport, focus: &str) -> Option<&'a HazardRatio> {
        r.hazard_ratios.iter().find(|h| h.name == focus)
    }
    row(
        &mut out,
        focus,
        reports
            .iter()
            .map(|r| coef(r, focus).map_or(String::new(), |h| format!("{:.3}{}", h.coefficient, stars(h.p_value))))
            .collect(),
    );
    row(
        &mut out,
        "",
        reports
            .iter()
            .map(|r| coef(r, focus).map_or(String::new(), |h| format!("({:.3})", h.se)))
            .collect(),
    );
    row(
        &mut out,
        "Observations",
        reports.iter().map(|r| r.n.to_string()).collect(),
    );
    row(
        &mut out,
        "Log Likelihood",
        reports.iter().map(|r| format!("{:.3}", r.fit.loglik_fit)).collect(),
    );
    let test = |t: &ChiSquareTest| format!("{:.3}{}", t.statistic, stars(t.p_value));
    row(
        &mut out,
        "Wald Test",
        reports.iter().map(|r| test(&r.tests.wald)).collect(),
    );
    row(&mut out, "LR Test", reports.iter().map(|r| test(&r.tests.lr)).collect());
    row(
        &mut out,
        "Score (Logrank) Test",
        reports
            .iter()
            .map(|r| r.tests.score.as_ref().map_or("n/a".to_string(), test))
            .collect(),
    );
    row(
        &mut out,
        "Df",
        reports.iter().map(|r| r.tests.wald.df.to_string()).collect(),
    );
    out
}
