//! Property tests for invariants that span many random inputs.

use firmsurv_core::classifiers::{fit, Algorithm, ClassifierSpec, Model};
use firmsurv_core::cleansing::{
    drop_cols_above_col_quartile, drop_incomplete_rows, drop_rows_above_row_quartile, profile_missing,
};
use firmsurv_core::cox::{fit_matrix, CoxOptions, Ties};
use firmsurv_core::dataset::{generate_synthetic, load_csv_with, to_csv_bytes, CsvOptions};
use firmsurv_core::evaluation::{auc, confusion};
use firmsurv_core::mixture::{label_probabilities, mix, optimize_weight};
use firmsurv_core::resampling::{smote_with_provenance, SmoteSpec};
use firmsurv_core::survival::{km_fit, logrank_test, SurvivalSample};
use firmsurv_core::{ColumnData, ColumnSpec, Dataset, Role, SyntheticSpec};
use proptest::prelude::*;

fn both_classes(labels: &[u8]) -> bool {
    labels.contains(&0) && labels.contains(&1)
}

/// Dataset with numeric and categorical features, a label and optional holes.
fn dataset(rows: Vec<(f64, f64, u32, u8)>, holes: &[bool]) -> Dataset {
    let hole = |i: usize| holes.get(i).copied().unwrap_or(false);
    Dataset::new(
        vec![
            ColumnSpec::feature("a"),
            ColumnSpec::feature("b"),
            ColumnSpec::categorical("c", Role::Feature, ["p", "q", "r"]),
            ColumnSpec::numeric("y", Role::Label),
        ],
        vec![
            ColumnData::Numeric(
                rows.iter()
                    .enumerate()
                    .map(|(i, r)| (!hole(3 * i)).then_some(r.0))
                    .collect(),
            ),
            ColumnData::Numeric(
                rows.iter()
                    .enumerate()
                    .map(|(i, r)| (!hole(3 * i + 1)).then_some(r.1))
                    .collect(),
            ),
            ColumnData::Categorical(
                rows.iter()
                    .enumerate()
                    .map(|(i, r)| (!hole(3 * i + 2)).then_some(r.2))
                    .collect(),
            ),
            ColumnData::Numeric(rows.iter().map(|r| Some(f64::from(r.3))).collect()),
        ],
    )
    .unwrap()
}

fn row() -> impl Strategy<Value = (f64, f64, u32, u8)> {
    (-1e6f64..1e6, -10.0f64..10.0, 0u32..3, 0u8..2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(row(), 0..40), holes in prop::collection::vec(any::<bool>(), 0..120), comma in any::<bool>()) {
        let d = dataset(rows, &holes);
        let options = CsvOptions { delimiter: if comma { b',' } else { b';' } };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, to_csv_bytes(&d, options).unwrap()).unwrap();
        let back = load_csv_with(&path, d.specs(), options).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn synthetic_is_deterministic_with_valid_survival_cells(seed in any::<u64>(), n in 20usize..300) {
        let spec = SyntheticSpec { n_rows: n, n_numeric: 3, n_categorical: 2, seed, ..SyntheticSpec::default() };
        let d = generate_synthetic(&spec).unwrap();
        prop_assert_eq!(&d, &generate_synthetic(&spec).unwrap());
        let dur = d.numeric(d.column_index("duration").unwrap()).unwrap();
        let ev = d.numeric(d.column_index("event").unwrap()).unwrap();
        prop_assert!(dur.iter().all(|v| v.unwrap() > 0.0));
        prop_assert!(ev.iter().all(|v| matches!(v.unwrap(), x if x == 0.0 || x == 1.0)));
    }

    #[test]
    fn cleansing_drops_are_monotone_and_idempotent(rows in prop::collection::vec(row(), 1..40), holes in prop::collection::vec(any::<bool>(), 0..120)) {
        let d = dataset(rows, &holes);
        let once = drop_incomplete_rows(&d);
        prop_assert_eq!(&drop_incomplete_rows(&once), &once);
        let p = profile_missing(&d);
        let (q1, q2, q3) = p.row_quartiles;
        prop_assert!(q1 <= q2 && q2 <= q3);
        let r = drop_rows_above_row_quartile(&d, &p);
        prop_assert!(r.n_rows() <= d.n_rows() && r.n_cols() == d.n_cols());
        let c = drop_cols_above_col_quartile(&r, &profile_missing(&r));
        prop_assert!(c.n_cols() <= r.n_cols() && c.n_rows() == r.n_rows());
        prop_assert!(c.column_index("y").is_some());
        prop_assert!(once.n_rows() <= d.n_rows());
    }

    #[test]
    fn smote_keeps_minority_and_stays_on_segments(
        rows in prop::collection::vec(row(), 12..60),
        k in 1usize..4,
        over in prop::sample::select(vec![100u32, 150, 200, 300]),
        seed in any::<u64>(),
    ) {
        let d = dataset(rows, &[]);
        let y = d.labels().unwrap();
        let minority = y.iter().filter(|&&v| v == 1).count().min(y.iter().filter(|&&v| v == 0).count());
        prop_assume!(minority > k);
        let spec = SmoteSpec { k, over_pct: over, under_pct: 200, seed };
        let out = smote_with_provenance(&d, &spec).unwrap();
        let again = smote_with_provenance(&d, &spec).unwrap();
        prop_assert_eq!(&out.data, &again.data);
        let new_y = out.data.labels().unwrap();
        let first = out.data.n_rows() - out.origins.len();
        prop_assert!(new_y[first..].iter().all(|&v| v == out.minority_label));
        let kept = &new_y[out.majority_kept.len()..first];
        prop_assert_eq!(kept.len(), out.minority_rows.len());
        for (s, o) in out.origins.iter().enumerate() {
            for c in 0..2 {
                let col = d.numeric(c).unwrap();
                let (p, q) = (col[o.seed_row].unwrap(), col[o.neighbor_row].unwrap());
                let v = out.data.numeric(c).unwrap()[first + s].unwrap();
                prop_assert!(p.min(q) <= v && v <= p.max(q));
            }
        }
    }

    #[test]
    fn tree_is_invariant_under_positive_affine_rescaling(
        rows in prop::collection::vec((0u8..20, 0u8..20, 0u32..3, 0u8..2), 40..120),
        slope in 0.25f64..8.0,
        shift in -50.0f64..50.0,
    ) {
        let y: Vec<u8> = rows.iter().map(|r| r.3).collect();
        prop_assume!(both_classes(&y));
        let plain: Vec<_> = rows.iter().map(|r| (f64::from(r.0), f64::from(r.1), r.2, r.3)).collect();
        let scaled: Vec<_> = plain.iter().map(|r| (slope * r.0 + shift, slope * r.1 + shift, r.2, r.3)).collect();
        let (d, e) = (dataset(plain, &[]), dataset(scaled, &[]));
        let mut spec = ClassifierSpec::new(Algorithm::Rpart, 1);
        spec.params.tree.min_node_size = 5;
        let a = fit(&d, &spec).unwrap().predict_proba(&d).unwrap();
        let b = fit(&e, &spec).unwrap().predict_proba(&e).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bagging_is_the_mean_of_its_members(rows in prop::collection::vec(row(), 30..80), seed in any::<u64>()) {
        let d = dataset(rows, &[]);
        prop_assume!(both_classes(&d.labels().unwrap()));
        let mut spec = ClassifierSpec::new(Algorithm::Bag, seed);
        spec.params.bag.members = 7;
        let trained = fit(&d, &spec).unwrap();
        let probs = trained.predict_proba(&d).unwrap();
        prop_assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
        let Model::Bagging(bag) = &trained.model else { panic!("not a bagging model") };
        let table = trained.schema.table(&d).unwrap();
        let member: Vec<Vec<f64>> = bag.members.iter().map(|m| m.predict(&table)).collect();
        for (i, p) in probs.iter().enumerate() {
            let mean = member.iter().map(|m| m[i]).sum::<f64>() / member.len() as f64;
            prop_assert_eq!(*p, mean);
        }
    }

    #[test]
    fn auc_is_invariant_under_increasing_maps(
        pairs in prop::collection::vec((0u8..30, 0u8..2), 2..120),
        scale in 0.1f64..10.0,
    ) {
        let labels: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(both_classes(&labels));
        let s: Vec<f64> = pairs.iter().map(|p| f64::from(p.0) / 30.0).collect();
        let t: Vec<f64> = s.iter().map(|v| (scale * v).exp() + v.powi(3)).collect();
        prop_assert_eq!(auc(&s, &labels).unwrap(), auc(&t, &labels).unwrap());
        for cut in [0.0, 0.3, 0.5, 1.0] {
            let m = confusion(&s, &labels, cut);
            let pos = labels.iter().filter(|&&v| v == 1).count();
            prop_assert_eq!(m.tp + m.fn_, pos);
            prop_assert_eq!(m.tn + m.fp, labels.len() - pos);
        }
    }

    #[test]
    fn mixture_is_between_components_and_weight_is_trace_argmax(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0u8..2), 4..80),
        alpha in 0.0f64..=1.0,
    ) {
        let a: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let y: Vec<u8> = pts.iter().map(|p| p.2).collect();
        for ((m, x), z) in mix(alpha, &a, &b).iter().zip(&a).zip(&b) {
            prop_assert!(x.min(*z) - 1e-15 <= *m && *m <= x.max(*z) + 1e-15);
        }
        let labels = label_probabilities(&a, 0.2, 0.8).unwrap();
        prop_assert_eq!(labels.counts.total(), a.len());
        prop_assume!(both_classes(&y));
        let search = optimize_weight(&a, &b, &y, 0.05).unwrap();
        let best = search.trace.iter().map(|t| t.objective).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(search.objective, best);
        let last = search.trace.iter().rev().find(|t| t.objective == best).unwrap();
        prop_assert_eq!(search.alpha, last.alpha);
    }

    #[test]
    fn km_is_a_non_increasing_step_function(
        obs in prop::collection::vec((1u8..15, any::<bool>()), 1..60),
    ) {
        let samples: Vec<SurvivalSample> = obs.iter().map(|&(t, e)| SurvivalSample::new(f64::from(t), e)).collect();
        let curve = km_fit(&samples).unwrap();
        let first = curve.times.first().copied().unwrap_or(f64::INFINITY);
        prop_assert_eq!(curve.survival_at(first - 0.5), 1.0);
        prop_assert!(curve.survival.windows(2).all(|w| w[1] <= w[0]));
        // var / S^2 is the running Greenwood sum; the variance itself can
        // shrink, e.g. times {1, 1, 2, 3+} give 0.0625 then 0.046875
        let mut prev = 0.0;
        for (s, v) in curve.survival.iter().zip(&curve.variance) {
            if *s == 0.0 {
                break;
            }
            if let Some(v) = v {
                let sum = v / (s * s);
                prop_assert!(sum >= prev * (1.0 - 1e-12));
                prev = sum;
            }
        }
        if obs.iter().all(|o| o.1) {
            for q in 0..16 {
                let t = f64::from(q);
                let frac = obs.iter().filter(|o| f64::from(o.0) > t).count() as f64 / obs.len() as f64;
                prop_assert_eq!(curve.survival_at(t), frac);
            }
        }
    }

    #[test]
    fn logrank_ignores_group_names(obs in prop::collection::vec((1u8..15, any::<bool>(), any::<bool>()), 4..60)) {
        prop_assume!(obs.iter().any(|o| o.1) && obs.iter().any(|o| o.2) && obs.iter().any(|o| !o.2));
        let make = |flip: bool| -> Vec<SurvivalSample> {
            obs.iter().map(|&(t, e, g)| SurvivalSample::grouped(f64::from(t), e, u32::from(g != flip))).collect()
        };
        let a = logrank_test(&make(false)).unwrap().statistic;
        let b = logrank_test(&make(true)).unwrap().statistic;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn cox_is_invariant_to_centering_and_ties_agree_without_ties(
        obs in prop::collection::vec((0.0f64..1.0, 0.05f64..10.0, any::<bool>()), 15..60),
        shift in -20.0f64..20.0,
    ) {
        prop_assume!(obs.iter().filter(|o| o.2).count() >= 3);
        let x: Vec<f64> = obs.iter().map(|o| o.0).collect();
        let samples: Vec<SurvivalSample> = obs.iter().map(|o| SurvivalSample::new(o.1, o.2)).collect();
        let names = ["x".to_string()];
        let efron = CoxOptions::default();
        let Ok(base) = fit_matrix(&x, 1, &names, &samples, &efron) else { return Ok(()) };
        let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let moved = fit_matrix(&shifted, 1, &names, &samples, &efron).unwrap();
        prop_assert!((base.beta[0] - moved.beta[0]).abs() <= 1e-8 * base.beta[0].abs().max(1.0));
        let breslow = fit_matrix(&x, 1, &names, &samples, &CoxOptions { ties: Ties::Breslow, ..efron }).unwrap();
        prop_assert!((base.beta[0] - breslow.beta[0]).abs() <= 1e-10);
    }
}
