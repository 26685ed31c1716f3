//! End-to-end checks on the vendored PIMA file and constructed selection data.

use std::path::PathBuf;

use dmp_core::dataset::{load_tabular_dataset, schemas, Dataset};
use dmp_core::featsel::{impurity_importance, rfecv_select, RfecvConfig};
use dmp_core::models::{train_random_forest, ForestConfig};
use dmp_core::preprocess::{drop_missing_rows, encode_categoricals};
use dmp_core::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pima() -> Dataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/pima-indians-diabetes.csv");
    load_tabular_dataset(&path, &schemas::pima()).unwrap()
}

#[test]
fn pima_counts_before_and_after_cleaning() {
    let raw = pima();
    assert_eq!(raw.len(), 768);
    assert_eq!(raw.class_counts(), (268, 500));
    let clean = drop_missing_rows(&raw).unwrap();
    assert_eq!(clean.len(), 532);
    assert_eq!(clean.class_counts(), (177, 355));
}

#[test]
fn glucose_is_the_most_important_pima_feature() {
    let (m, _) = encode_categoricals(&drop_missing_rows(&pima()).unwrap()).unwrap();
    let f = train_random_forest(&m, &ForestConfig { seed: 1, ..ForestConfig::default() }).unwrap();
    let imp = impurity_importance(&f).unwrap();
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let top = (0..imp.len()).max_by(|&a, &b| imp[a].total_cmp(&imp[b])).unwrap();
    assert_eq!(m.column_names()[top], "Glucose");
}

fn signal_noise(seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..120 {
        let y: bool = rng.random();
        rows.push(vec![if y { 1.0 } else { 0.0 }, rng.random::<f64>()]);
        labels.push(y);
    }
    FeatureMatrix::from_rows(vec!["signal".into(), "noise".into()], &rows, labels).unwrap()
}

#[test]
fn signal_beats_noise_in_importance_and_selection() {
    let mut selected = 0;
    for seed in 0..10 {
        let m = signal_noise(seed);
        let f = train_random_forest(&m, &ForestConfig { n_estimators: 30, seed, ..ForestConfig::default() }).unwrap();
        let imp = impurity_importance(&f).unwrap();
        assert!(imp[0] > imp[1]);
        let cfg = RfecvConfig { seed, forest: ForestConfig { n_estimators: 30, ..ForestConfig::default() }, ..RfecvConfig::default() };
        let r = rfecv_select(&m, &cfg).unwrap();
        assert_eq!(r.cv_score_curve.len(), 2);
        if r.selected_features.contains(&"signal".to_string()) {
            selected += 1;
        }
    }
    assert!(selected >= 9, "signal selected in {selected}/10 seeds");
}

#[test]
fn selection_ignores_column_order() {
    let m = signal_noise(42);
    let swapped = m.select_columns(&[1, 0]);
    let cfg = RfecvConfig { seed: 3, forest: ForestConfig { n_estimators: 30, ..ForestConfig::default() }, ..RfecvConfig::default() };
    let a = rfecv_select(&m, &cfg).unwrap();
    let b = rfecv_select(&swapped, &cfg).unwrap();
    let mut sa = a.selected_features.clone();
    let mut sb = b.selected_features.clone();
    sa.sort();
    sb.sort();
    assert_eq!(sa, sb);
}
