//! Property tests over randomized inputs.

use dmp_core::dataset::{parse_tabular, schemas, Dataset, DatasetSchema, FeatureSpec, Record, Value};
use dmp_core::eval::{roc_auc, stratified_folds, stratified_kfold_cv};
use dmp_core::mimic::{build_mimic_like_dataset, generate_synthetic_cohort, MISSING_ETHNICITIES};
use dmp_core::models::{
    train_logistic_regression, train_random_forest, ForestConfig, LogisticConfig, TrainedModel,
};
use dmp_core::preprocess::{drop_missing_rows, fit_normalizer, smote_with_provenance, SmoteConfig};
use dmp_core::risk::{classify_glucose, GlycemicStatus};
use dmp_core::FeatureMatrix;
use proptest::prelude::*;

fn matrix_strategy(max_rows: usize, cols: usize) -> impl Strategy<Value = FeatureMatrix> {
    (4..max_rows).prop_flat_map(move |n| {
        (
            prop::collection::vec(-100.0..100.0f64, n * cols),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(values, mut labels)| {
                labels[0] = true;
                labels[1] = false;
                let names = (0..cols).map(|j| format!("c{j}")).collect();
                FeatureMatrix::new(names, values, labels).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn glucose_status_is_monotone(a in 1.0..400.0f64, b in 1.0..400.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(classify_glucose(lo).unwrap() <= classify_glucose(hi).unwrap());
    }

    #[test]
    fn glucose_changes_only_at_thresholds(a in 1.0..400.0f64, b in 1.0..400.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let crosses = (lo < 100.0 && hi >= 100.0) || (lo <= 125.0 && hi > 125.0);
        let changed = classify_glucose(lo).unwrap() != classify_glucose(hi).unwrap();
        prop_assert_eq!(changed, crosses);
    }

    #[test]
    fn cohort_never_contains_missing_ethnicities(seed in 0u64..1000) {
        let tables = generate_synthetic_cohort(300, 0.25, seed).unwrap();
        let built = build_mimic_like_dataset(&tables).unwrap();
        let eth = built.dataset.schema.feature_index("ETHNICITY").unwrap();
        for r in &built.dataset.rows {
            let e = r.values[eth].as_text().unwrap();
            prop_assert!(!MISSING_ETHNICITIES.contains(&e));
        }
        prop_assert_eq!(built.report.rows_emitted, built.dataset.len());
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec((0u32..20, 0.0..70.0f64, any::<bool>()), 1..40)) {
        let schema = schemas::pima();
        let recs: Vec<Record> = rows
            .iter()
            .map(|&(preg, bmi, y)| {
                let mut values = vec![Value::Num(f64::from(preg)); schema.features.len()];
                let j = schema.feature_index("BMI").unwrap();
                values[j] = Value::Num(bmi);
                Record { values, label: y }
            })
            .collect();
        let d = Dataset::new(schema.clone(), recs).unwrap();
        let back = parse_tabular(&d.to_csv_string(), &schema).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn drop_missing_yields_sub_multiset(cells in prop::collection::vec((prop::option::of(0u8..3), 0u8..3, any::<bool>()), 1..50)) {
        let schema = DatasetSchema {
            name: "t".into(),
            features: vec![FeatureSpec::numeric_zero_missing("a"), FeatureSpec::numeric("b")],
            label_name: "y".into(),
            positive_label: "1".into(),
            negative_label: "0".into(),
        };
        let rows: Vec<Record> = cells
            .iter()
            .map(|&(a, b, y)| Record {
                values: vec![a.map_or(Value::Missing, |v| Value::Num(f64::from(v))), Value::Num(f64::from(b))],
                label: y,
            })
            .collect();
        let d = Dataset::new(schema, rows).unwrap();
        match drop_missing_rows(&d) {
            Ok(out) => {
                let mut pool = d.rows.clone();
                for r in &out.rows {
                    let pos = pool.iter().position(|p| p == r);
                    prop_assert!(pos.is_some());
                    pool.remove(pos.unwrap());
                    prop_assert!(matches!(r.values[0], Value::Num(v) if v != 0.0));
                }
                let kept = d.rows.iter().filter(|r| matches!(r.values[0], Value::Num(v) if v != 0.0)).count();
                prop_assert_eq!(out.len(), kept);
            }
            Err(_) => prop_assert!(d.rows.iter().all(|r| !matches!(r.values[0], Value::Num(v) if v != 0.0))),
        }
    }

    #[test]
    fn normalization_is_idempotent_on_train(m in matrix_strategy(30, 3)) {
        let once = fit_normalizer(&m).unwrap().apply(&m).unwrap();
        prop_assert!(once.values().iter().all(|v| (0.0..=1.0).contains(v)));
        let twice = fit_normalizer(&once).unwrap().apply(&once).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn smote_points_lie_between_parents(m in matrix_strategy(40, 2), k in 1usize..4, seed in 0u64..100) {
        let (pos, neg) = m.class_counts();
        prop_assume!(pos.min(neg) > k);
        let out = smote_with_provenance(&m, &SmoteConfig { k, seed }).unwrap();
        let (p, n) = out.matrix.class_counts();
        prop_assert_eq!(p, n);
        let minority = pos < neg;
        for (s, o) in out.origins.iter().enumerate() {
            prop_assert_eq!(m.labels()[o.base], minority);
            prop_assert_eq!(m.labels()[o.neighbor], minority);
            prop_assert!((0.0..=1.0).contains(&o.lambda));
            let row = out.matrix.row(m.n_rows() + s);
            for j in 0..m.n_cols() {
                let (a, b) = (m.get(o.base, j), m.get(o.neighbor, j));
                prop_assert!(row[j] >= a.min(b) - 1e-9 && row[j] <= a.max(b) + 1e-9);
            }
        }
    }

    #[test]
    fn auc_invariant_under_monotone_maps(
        scores in prop::collection::vec(-5.0..5.0f64, 4..60),
        seed in any::<u64>(),
    ) {
        let labels: Vec<bool> = (0..scores.len()).map(|i| (seed >> (i % 64)) & 1 == 1 || i == 0).collect();
        prop_assume!(labels.iter().any(|l| !l));
        let base = roc_auc(&scores, &labels).unwrap();
        let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3) + 2.0).collect();
        let sig: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-s).exp())).collect();
        prop_assert!((roc_auc(&cubed, &labels).unwrap() - base).abs() < 1e-12);
        prop_assert!((roc_auc(&sig, &labels).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn folds_partition_rows(n_pos in 10usize..60, n_neg in 10usize..60, k in 2usize..10, seed in any::<u64>()) {
        let labels: Vec<bool> = (0..n_pos + n_neg).map(|i| i < n_pos).collect();
        let f = stratified_folds(&labels, k, seed).unwrap();
        prop_assert_eq!(f.len(), labels.len());
        for fold in 0..k {
            let pos = (0..labels.len()).filter(|&i| f[i] == fold && labels[i]).count();
            prop_assert!(pos == n_pos / k || pos == n_pos / k + 1);
        }
        let sizes: Vec<usize> = (0..k).map(|fold| f.iter().filter(|&&x| x == fold).count()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(sizes.iter().sum::<usize>(), labels.len());
    }

    #[test]
    fn logistic_objective_never_decreases(m in matrix_strategy(40, 3), c in 0.01..100.0f64) {
        let fit = train_logistic_regression(&m, &LogisticConfig { c, ..LogisticConfig::default() }).unwrap();
        for w in fit.objective_history.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn forest_is_seed_reproducible_and_prefix_stable(m in matrix_strategy(30, 2), seed in any::<u64>()) {
        let small = train_random_forest(&m, &ForestConfig { n_estimators: 5, seed, ..ForestConfig::default() }).unwrap();
        let again = train_random_forest(&m, &ForestConfig { n_estimators: 5, seed, ..ForestConfig::default() }).unwrap();
        prop_assert_eq!(&small, &again);
        let big = train_random_forest(&m, &ForestConfig { n_estimators: 9, seed, ..ForestConfig::default() }).unwrap();
        prop_assert_eq!(&big.trees()[..5], small.trees());
    }

    #[test]
    fn unanimous_forest_stays_unanimous(values in prop::collection::vec(0.0..1.0f64, 6), n in 1usize..30) {
        let m = FeatureMatrix::new(vec!["x".into()], values, vec![true; 6]).unwrap();
        let f = train_random_forest(&m, &ForestConfig { n_estimators: n, ..ForestConfig::default() }).unwrap();
        prop_assert_eq!(f.predict_proba(&[0.5]), 1.0);
    }
}

#[test]
fn constant_classifier_cv_accuracy_matches_class_share() {
    let labels: Vec<bool> = (0..100).map(|i| i < 30).collect();
    let m = FeatureMatrix::new(vec!["x".into()], vec![0.0; 100], labels).unwrap();
    let r = stratified_kfold_cv(&m, 10, 7, |train| {
        // Every tree sees only constant features, so the forest predicts the bootstrap majority.
        let _ = train;
        let only_neg = FeatureMatrix::new(vec!["x".into()], vec![0.0], vec![false]).unwrap();
        Ok(TrainedModel::Rf(train_random_forest(&only_neg, &ForestConfig { n_estimators: 1, ..ForestConfig::default() })?))
    })
    .unwrap();
    // Folds hold 3 positives and 7 negatives each.
    assert!((r.accuracy.mean - 0.7).abs() < 1e-12);
    assert_eq!(r.folds.len(), 10);
}

#[test]
fn status_order() {
    assert!(GlycemicStatus::NonDiabetic < GlycemicStatus::PreDiabetic);
    assert!(GlycemicStatus::PreDiabetic < GlycemicStatus::Diabetic);
}
