use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use firmsurv_core::classifiers::{fit, Algorithm, ClassifierSpec};
use firmsurv_core::cox::{fit_matrix, CoxOptions, Ties};
use firmsurv_core::dataset::generate_synthetic;
use firmsurv_core::evaluation::roc_curve;
use firmsurv_core::mixture::optimize_weight;
use firmsurv_core::resampling::{smote, SmoteSpec};
use firmsurv_core::survival::{km_fit, logrank_test, samples_from_dataset, SurvivalSample};
use firmsurv_core::{Dataset, SyntheticSpec};

fn synthetic(n: usize) -> Dataset {
    generate_synthetic(&SyntheticSpec {
        n_rows: n,
        ..SyntheticSpec::default()
    })
    .unwrap()
}

fn grouped(data: &Dataset) -> (Vec<f64>, Vec<SurvivalSample>) {
    let labels = data.labels().unwrap();
    let codes: Vec<u32> = labels.iter().map(|&y| u32::from(y)).collect();
    let samples = samples_from_dataset(data, Some(&codes)).unwrap();
    (labels.iter().map(|&y| f64::from(y)).collect(), samples)
}

fn survival(c: &mut Criterion) {
    let mut g = c.benchmark_group("survival");
    for n in [1_000, 10_000] {
        let (_, samples) = grouped(&synthetic(n));
        g.bench_with_input(BenchmarkId::new("km_fit", n), &samples, |b, s| {
            b.iter(|| km_fit(black_box(s)))
        });
        g.bench_with_input(BenchmarkId::new("logrank", n), &samples, |b, s| {
            b.iter(|| logrank_test(black_box(s)))
        });
    }
    g.finish();
}

fn cox(c: &mut Criterion) {
    let mut g = c.benchmark_group("cox_fit");
    let (x, samples) = grouped(&synthetic(10_000));
    let names = ["inn".to_string()];
    for ties in [Ties::Efron, Ties::Breslow] {
        let options = CoxOptions {
            ties,
            ..CoxOptions::default()
        };
        g.bench_function(format!("{ties:?}/10000"), |b| {
            b.iter(|| fit_matrix(black_box(&x), 1, &names, &samples, &options))
        });
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let data = synthetic(10_000);
    let labels = data.labels().unwrap();
    let x1 = data.numeric(data.column_index("x1").unwrap()).unwrap();
    let x2 = data.numeric(data.column_index("x2").unwrap()).unwrap();
    let logistic = |v: f64| 1.0 / (1.0 + (-v).exp());
    let a: Vec<f64> = x1.iter().map(|v| logistic(v.unwrap())).collect();
    let b: Vec<f64> = x2.iter().map(|v| logistic(v.unwrap())).collect();
    c.bench_function("roc_curve/10000", |bch| bch.iter(|| roc_curve(black_box(&a), &labels)));
    let mut g = c.benchmark_group("mixture");
    g.sample_size(10);
    g.bench_function("optimize_weight/10000/step0.01", |bch| {
        bch.iter(|| optimize_weight(black_box(&a), &b, &labels, 0.01))
    });
    g.finish();
}

fn resampling_and_trees(c: &mut Criterion) {
    let train = synthetic(5_000);
    let mut g = c.benchmark_group("training");
    g.sample_size(10);
    g.bench_function("smote/5000", |b| {
        b.iter(|| smote(black_box(&train), &SmoteSpec::default()))
    });
    let balanced = smote(&train, &SmoteSpec::default()).unwrap();
    for alg in [Algorithm::Rpart, Algorithm::Logit, Algorithm::Nb] {
        let spec = ClassifierSpec::new(alg, 7);
        g.bench_function(format!("fit/{alg}"), |b| b.iter(|| fit(black_box(&balanced), &spec)));
    }
    g.finish();
}

criterion_group!(benches, survival, cox, evaluation, resampling_and_trees);
criterion_main!(benches);
