//! Missing-value analysis.
//!
//! The fixed order is: profile, drop rows whose NA count exceeds the third
//! quartile of per-row counts, re-profile, drop columns whose NA count
//! exceeds the first quartile of per-column counts, harmonize two samples
//! (drop a feature missing in more than 30% of either), and finally drop any
//! row still holding a missing feature or label. Every threshold is a strict
//! inequality. No values are imputed.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Role};
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessProfile {
    pub per_column_na: Vec<(String, usize)>,
    pub per_row_na: Vec<usize>,
    pub column_quartiles: (f64, f64, f64),
    pub row_quartiles: (f64, f64, f64),
}

fn quartiles_of_counts(counts: impl Iterator<Item = usize>) -> (f64, f64, f64) {
    let values: Vec<f64> = counts.map(|c| c as f64).collect();
    stats::quartiles(&values).unwrap_or((0.0, 0.0, 0.0))
}

pub fn profile_missing(data: &Dataset) -> MissingnessProfile {
    let per_column_na: Vec<(String, usize)> = (0..data.n_cols())
        .map(|c| (data.spec(c).name.clone(), data.column(c).missing_count()))
        .collect();
    let per_row_na: Vec<usize> = (0..data.n_rows()).map(|r| data.row_missing(r)).collect();
    MissingnessProfile {
        column_quartiles: quartiles_of_counts(per_column_na.iter().map(|(_, c)| *c)),
        row_quartiles: quartiles_of_counts(per_row_na.iter().copied()),
        per_column_na,
        per_row_na,
    }
}

/// Keep rows whose NA count is at most Q3 of the per-row counts.
pub fn drop_rows_above_row_quartile(data: &Dataset, profile: &MissingnessProfile) -> Dataset {
    let q3 = profile.row_quartiles.2;
    let keep: Vec<usize> = profile
        .per_row_na
        .iter()
        .enumerate()
        .filter(|(_, &c)| c as f64 <= q3)
        .map(|(r, _)| r)
        .collect();
    data.select_rows(&keep)
}

/// Keep columns whose NA count is at most Q1 of the per-column counts.
/// Label, duration, event and id columns are always kept.
pub fn drop_cols_above_col_quartile(data: &Dataset, profile: &MissingnessProfile) -> Dataset {
    let q1 = profile.column_quartiles.0;
    let keep: Vec<usize> = (0..data.n_cols())
        .filter(|&c| data.spec(c).role.is_exempt() || profile.per_column_na[c].1 as f64 <= q1)
        .collect();
    data.select_columns(&keep)
}

fn na_fraction(data: &Dataset, col: usize) -> f64 {
    if data.n_rows() == 0 {
        0.0
    } else {
        data.column(col).missing_count() as f64 / data.n_rows() as f64
    }
}

/// Align the feature columns of two samples.
///
/// A feature present in both is removed from both when its NA fraction
/// exceeds `threshold` in either. Features present in only one sample are
/// removed from it, so the surviving feature sets are identical. Label,
/// duration, event and id columns stay with whichever sample has them.
pub fn harmonize(a: &Dataset, b: &Dataset, threshold: f64) -> Result<(Dataset, Dataset)> {
    let common: Vec<&str> = a
        .specs()
        .iter()
        .filter(|s| b.column_index(&s.name).is_some())
        .map(|s| s.name.as_str())
        .collect();
    if common.is_empty() {
        return Err(Error::domain("the two samples share no columns"));
    }
    let keep_feature = |name: &str| -> bool {
        if !common.contains(&name) {
            return false;
        }
        let (ia, ib) = (a.column_index(name).unwrap(), b.column_index(name).unwrap());
        na_fraction(a, ia) <= threshold && na_fraction(b, ib) <= threshold
    };
    let select = |d: &Dataset| -> Dataset {
        let keep: Vec<usize> = (0..d.n_cols())
            .filter(|&c| d.spec(c).role.is_exempt() || keep_feature(&d.spec(c).name))
            .collect();
        d.select_columns(&keep)
    };
    Ok((select(a), select(b)))
}

/// Drop every row with a missing feature, strata or label cell.
pub fn drop_incomplete_rows(data: &Dataset) -> Dataset {
    let checked: Vec<usize> = (0..data.n_cols())
        .filter(|&c| matches!(data.spec(c).role, Role::Feature | Role::Strata | Role::Label))
        .collect();
    let keep: Vec<usize> = (0..data.n_rows())
        .filter(|&r| checked.iter().all(|&c| !data.is_missing(r, c)))
        .collect();
    data.select_rows(&keep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub rows: usize,
    pub columns: usize,
    /// Threshold applied at this stage, if any.
    pub threshold: Option<f64>,
    pub dropped_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub stages: Vec<StageCount>,
    pub row_quartiles: (f64, f64, f64),
    pub column_quartiles_after_row_drop: (f64, f64, f64),
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvaReport {
    pub primary: SampleReport,
    pub secondary: Option<SampleReport>,
    pub harmonize_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct MvaOutcome {
    pub primary: Dataset,
    pub secondary: Option<Dataset>,
    pub report: MvaReport,
}

fn stage(name: &str, before: &Dataset, after: &Dataset, threshold: Option<f64>) -> StageCount {
    let dropped_columns = before
        .specs()
        .iter()
        .filter(|s| after.column_index(&s.name).is_none())
        .map(|s| s.name.clone())
        .collect();
    StageCount {
        stage: name.into(),
        rows: after.n_rows(),
        columns: after.n_cols(),
        threshold,
        dropped_columns,
    }
}

/// Row and column triage of a single sample (everything before harmonization).
fn triage(data: &Dataset) -> (Dataset, SampleReport) {
    let profile = profile_missing(data);
    let rows_kept = drop_rows_above_row_quartile(data, &profile);
    let reprofile = profile_missing(&rows_kept);
    let cols_kept = drop_cols_above_col_quartile(&rows_kept, &reprofile);
    let report = SampleReport {
        stages: vec![
            stage("input", data, data, None),
            stage("drop_rows_above_q3", data, &rows_kept, Some(profile.row_quartiles.2)),
            stage(
                "drop_cols_above_q1",
                &rows_kept,
                &cols_kept,
                Some(reprofile.column_quartiles.0),
            ),
        ],
        row_quartiles: profile.row_quartiles,
        column_quartiles_after_row_drop: reprofile.column_quartiles,
        warnings: Vec::new(),
    };
    (cols_kept, report)
}

fn finish(data: &Dataset, report: &mut SampleReport) -> Dataset {
    let complete = drop_incomplete_rows(data);
    report.stages.push(stage("drop_incomplete_rows", data, &complete, None));
    if complete.n_rows() == 0 && data.n_rows() > 0 {
        let msg = "every row has at least one missing value; the cleansed sample is empty".to_string();
        log::warn!("{msg}");
        report.warnings.push(msg);
    }
    complete
}

/// Run the full missing-value chain on one sample, or on a pair of samples
/// that must end up with identical feature sets.
pub fn run_mva(primary: &Dataset, secondary: Option<&Dataset>, threshold: f64) -> Result<MvaOutcome> {
    let (a, mut ra) = triage(primary);
    let (a, b, rb) = match secondary {
        Some(second) => {
            let (b, mut rb) = triage(second);
            let (ha, hb) = harmonize(&a, &b, threshold)?;
            ra.stages.push(stage("harmonize", &a, &ha, Some(threshold)));
            rb.stages.push(stage("harmonize", &b, &hb, Some(threshold)));
            let hb = finish(&hb, &mut rb);
            (ha, Some(hb), Some(rb))
        }
        None => (a, None, None),
    };
    let a = finish(&a, &mut ra);
    Ok(MvaOutcome {
        primary: a,
        secondary: b,
        report: MvaReport {
            primary: ra,
            secondary: rb,
            harmonize_threshold: threshold,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnData, ColumnSpec};

    /// Columns given as vectors with `None` for missing cells.
    fn table(cols: Vec<Vec<Option<f64>>>) -> Dataset {
        let specs = (0..cols.len()).map(|i| ColumnSpec::feature(format!("c{i}"))).collect();
        Dataset::new(specs, cols.into_iter().map(ColumnData::Numeric).collect()).unwrap()
    }

    fn fixture_4x4() -> Dataset {
        // row r has r missing cells
        let m = |r: usize, c: usize| if c < r { None } else { Some((r * 4 + c) as f64) };
        table((0..4).map(|c| (0..4).map(|r| m(r, c)).collect()).collect())
    }

    #[test]
    fn complete_dataset_profile_is_zero() {
        let d = table(vec![vec![Some(1.0); 3]; 2]);
        let p = profile_missing(&d);
        assert!(p.per_row_na.iter().all(|&c| c == 0));
        assert!(p.per_column_na.iter().all(|(_, c)| *c == 0));
    }

    #[test]
    fn row_quartiles_on_4x4() {
        let p = profile_missing(&fixture_4x4());
        assert_eq!(p.per_row_na, vec![0, 1, 2, 3]);
        assert_eq!(p.row_quartiles, (0.75, 1.5, 2.25));
    }

    #[test]
    fn all_missing_column_counts_n() {
        let d = table(vec![vec![Some(1.0); 5], vec![None; 5]]);
        assert_eq!(profile_missing(&d).per_column_na[1].1, 5);
    }

    #[test]
    fn uniform_row_counts_drop_nothing() {
        let d = table(vec![vec![None, Some(1.0), Some(1.0)], vec![Some(1.0), None, None]]);
        // every row has exactly one NA
        let p = profile_missing(&d);
        assert_eq!(drop_rows_above_row_quartile(&d, &p).n_rows(), 3);
    }

    #[test]
    fn only_extreme_row_dropped() {
        // per-row NA counts {0, 1, 2, 100}: Q3 = 26.5
        let ncol = 100;
        let counts = [0usize, 1, 2, 100];
        let cols = (0..ncol)
            .map(|c| counts.iter().map(|&k| if c < k { None } else { Some(1.0) }).collect())
            .collect();
        let d = table(cols);
        let p = profile_missing(&d);
        assert_eq!(p.row_quartiles.2, 26.5);
        let kept = drop_rows_above_row_quartile(&d, &p);
        assert_eq!(kept.n_rows(), 3);
        assert_eq!(profile_missing(&kept).per_row_na, vec![0, 1, 2]);
    }

    #[test]
    fn paper_row_threshold() {
        // Rows with 290 NAs survive a Q3 of 290; rows with 291 do not.
        let p = MissingnessProfile {
            per_column_na: vec![],
            per_row_na: vec![100, 290, 291, 538],
            column_quartiles: (0.0, 0.0, 0.0),
            row_quartiles: (0.0, 0.0, 290.0),
        };
        let d = table(vec![vec![Some(1.0); 4]]);
        let kept = drop_rows_above_row_quartile(&d, &p);
        assert_eq!(kept.n_rows(), 2);
    }

    #[test]
    fn column_quartile_drop() {
        // NA counts {0, 10, 20, 30} over 40 rows: Q1 = 7.5
        let col = |k: usize| (0..40).map(|r| if r < k { None } else { Some(1.0) }).collect();
        let d = table(vec![col(0), col(10), col(20), col(30)]);
        let p = profile_missing(&d);
        assert_eq!(p.column_quartiles.0, 7.5);
        let kept = drop_cols_above_col_quartile(&d, &p);
        assert_eq!(kept.n_cols(), 1);
        assert_eq!(kept.spec(0).name, "c0");
    }

    #[test]
    fn exempt_roles_never_dropped() {
        let specs = vec![
            ColumnSpec::feature("x"),
            ColumnSpec::feature("z"),
            ColumnSpec::numeric("y", Role::Label),
        ];
        let d = Dataset::new(
            specs,
            vec![
                ColumnData::Numeric(vec![Some(1.0); 4]),
                ColumnData::Numeric(vec![Some(1.0); 4]),
                ColumnData::Numeric(vec![None, None, None, Some(1.0)]),
            ],
        )
        .unwrap();
        let kept = drop_cols_above_col_quartile(&d, &profile_missing(&d));
        assert!(kept.column_index("y").is_some());
    }

    #[test]
    fn harmonize_rules() {
        let ten = |k: usize| -> Vec<Option<f64>> { (0..10).map(|r| if r < k { None } else { Some(1.0) }).collect() };
        let a = table(vec![ten(0), ten(0), ten(3)]);
        let b = table(vec![ten(0), ten(4), ten(3)]);
        let (ha, hb) = harmonize(&a, &b, 0.30).unwrap();
        // c1 is 40% missing in b only: dropped from both; c2 exactly 30%: kept
        let names = |d: &Dataset| d.specs().iter().map(|s| s.name.clone()).collect::<Vec<_>>();
        assert_eq!(names(&ha), vec!["c0", "c2"]);
        assert_eq!(names(&ha), names(&hb));

        let (ia, ib) = harmonize(&a, &a, 0.3).unwrap();
        assert_eq!(ia, a);
        assert_eq!(ib, a);

        let other = Dataset::new(vec![ColumnSpec::feature("q")], vec![ColumnData::Numeric(vec![])]).unwrap();
        assert!(harmonize(&a, &other, 0.3).is_err());
    }

    #[test]
    fn incomplete_rows() {
        let d = table(vec![
            vec![Some(1.0), None, Some(2.0)],
            vec![Some(1.0), Some(1.0), Some(2.0)],
        ]);
        let once = drop_incomplete_rows(&d);
        assert_eq!(once.n_rows(), 2);
        assert_eq!(drop_incomplete_rows(&once), once);
        let all_bad = table(vec![vec![None, None]]);
        assert_eq!(drop_incomplete_rows(&all_bad).n_rows(), 0);
    }

    #[test]
    fn chain_flags_empty_result() {
        let d = table(vec![vec![None, None], vec![None, None]]);
        let out = run_mva(&d, None, 0.3).unwrap();
        assert_eq!(out.primary.n_rows(), 0);
        assert_eq!(out.report.primary.warnings.len(), 1);
    }

    #[test]
    fn chain_order_and_threshold_report_on_4x4() {
        let out = run_mva(&fixture_4x4(), None, 0.3).unwrap();
        let st = &out.report.primary.stages;
        assert_eq!(st[1].stage, "drop_rows_above_q3");
        assert_eq!(st[1].threshold, Some(2.25));
        assert_eq!(st[1].rows, 3);
        // after dropping the 3-NA row, column counts are {2,1,0,0} -> Q1 = 0
        assert_eq!(out.report.primary.column_quartiles_after_row_drop.0, 0.0);
        assert_eq!(st[2].columns, 2);
        assert_eq!(st[2].dropped_columns, vec!["c0", "c1"]);
        assert_eq!(out.primary.n_rows(), 3);
    }
}
