//! Windowing, chronological partition, train-only normalisation and the
//! dataset file pair.

mod common;

use common::dataset_window_checks;
use proptest::prelude::*;
use retrace::dataset::{
    apply_norm, build_samples, fit_normalizer, invert_target, partition_by_cutoff,
    read_dataset_csv, write_dataset_csv, Dataset, Role,
};
use retrace::events::{detect_events, EventConfig};
use retrace::indicators::{feature_matrix, FeatureMatrix, IndicatorParams};
use retrace::market_data::{synthetic_series, CandleSeries, SynthRegime};

fn pipeline(seed: u64, n: usize) -> (CandleSeries, FeatureMatrix, Dataset, Dataset) {
    let series = synthetic_series(seed, 4000, &SynthRegime::default()).unwrap();
    let features = feature_matrix(&series, &IndicatorParams::default()).unwrap();
    let events = detect_events(&series, &EventConfig::default()).unwrap();
    let w = build_samples(&features, events.sequences(), n, &series).unwrap();
    let cutoff = w.samples[w.samples.len() * 4 / 5].e2_timestamp;
    let (train, test) = partition_by_cutoff(w.samples, n, cutoff).unwrap();
    (series, features, train, test)
}

#[test]
fn windows_are_exact_feature_slices() {
    let (slices, warmup, tally, worst) = dataset_window_checks(7, 4000, &[1, 30, 60]);
    assert!(slices && warmup && tally);
    assert!(worst < 1e-12, "round trip {worst:e}");
}

#[test]
fn windows_near_the_warmup_are_skipped() {
    let series = synthetic_series(1, 1500, &SynthRegime::default()).unwrap();
    let features = feature_matrix(&series, &IndicatorParams::default()).unwrap();
    let events = detect_events(&series, &EventConfig::default()).unwrap();
    let first_e2 = events
        .sequences()
        .iter()
        .map(|s| s.e2.index)
        .find(|&e2| e2 >= features.warmup_len())
        .unwrap();
    // one bar too long to fit between the warm-up and that e2
    let n = first_e2 + 2 - features.warmup_len();
    let w = build_samples(&features, events.sequences(), n, &series).unwrap();
    assert!(w.skipped >= 1);
    assert!(w
        .samples
        .iter()
        .all(|s| s.e2_index.unwrap() + 1 - n >= features.warmup_len()));
    let huge = build_samples(&features, events.sequences(), series.len() + 1, &series).unwrap();
    assert!(huge.samples.is_empty());
    assert_eq!(huge.skipped, events.sequences().len());
}

#[test]
fn partition_is_chronological() {
    let (_, _, train, test) = pipeline(3, 30);
    let last_train = train.samples.iter().map(|s| s.e2_timestamp).max().unwrap();
    let first_test = test.samples.iter().map(|s| s.e2_timestamp).min().unwrap();
    assert!(last_train < first_test);
    assert_eq!(train.role, Role::Train);
    assert_eq!(test.role, Role::Test);
    let ordered = |d: &Dataset| {
        d.samples
            .windows(2)
            .all(|w| w[0].e2_timestamp <= w[1].e2_timestamp)
    };
    assert!(ordered(&train) && ordered(&test));
}

#[test]
fn normalisation_uses_training_statistics_only() {
    let (_, _, train, test) = pipeline(4, 30);
    let stats = fit_normalizer(&train).unwrap();

    // the fitted value does not depend on the test set at all
    let mut altered = test.clone();
    for s in &mut altered.samples {
        s.target *= 3.0;
        s.window.scale(-2.0);
    }
    assert_eq!(fit_normalizer(&train).unwrap(), stats);

    // test windows are z-scored with the training mean and deviation
    let normed = apply_norm(&test, &stats);
    for (raw, z) in test.samples.iter().zip(&normed.samples) {
        for t in 0..raw.window.rows() {
            for j in 0..raw.window.cols() {
                let want = (raw.window[(t, j)] - stats.feature_mean[j]) / stats.feature_std[j];
                assert_eq!(z.window[(t, j)], want);
            }
        }
        assert_eq!(
            z.target,
            (raw.target - stats.target_mean) / stats.target_std
        );
    }

    // fitting on train and test together would give different outputs
    let mut union = train.clone();
    union.samples.extend(test.samples.iter().cloned());
    let leaky = fit_normalizer(&union).unwrap();
    assert_ne!(leaky.target_mean, stats.target_mean);
    assert_ne!(
        apply_norm(&test, &leaky).samples[0].target,
        normed.samples[0].target
    );
    assert_ne!(leaky.fingerprint, stats.fingerprint);
}

#[test]
fn normalised_training_set_is_standardised() {
    let (_, _, train, _) = pipeline(5, 30);
    let stats = fit_normalizer(&train).unwrap();
    let z = apply_norm(&train, &stats);
    let ys = z.targets();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64;
    assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-9);
    for j in 0..28 {
        let col: Vec<f64> = z
            .samples
            .iter()
            .flat_map(|s| (0..30).map(move |t| s.window[(t, j)]))
            .collect();
        let m = col.iter().sum::<f64>() / col.len() as f64;
        assert!(m.abs() < 1e-9, "column {j} mean {m}");
    }
    assert_eq!(
        z.norm_fingerprint.as_deref(),
        Some(stats.fingerprint.as_str())
    );
}

#[test]
fn dataset_files_round_trip() {
    let (series, features, train, _) = pipeline(6, 5);
    let dir = tempfile::tempdir().unwrap();
    let (wp, tp) = (dir.path().join("w.csv"), dir.path().join("t.csv"));
    write_dataset_csv(&train, features.columns(), &wp, &tp).unwrap();
    let back = read_dataset_csv(&wp, &tp, Role::Train, Some(&series)).unwrap();
    assert_eq!(back, train);
    let bare = read_dataset_csv(&wp, &tp, Role::Train, None).unwrap();
    assert!(bare.samples.iter().all(|s| s.e2_index.is_none()));
    assert_eq!(bare.targets(), train.targets());
    assert_eq!(bare.fingerprint(), train.fingerprint());
}

#[test]
fn fingerprint_tracks_content() {
    let (_, _, train, _) = pipeline(8, 10);
    let mut other = train.clone();
    assert_eq!(other.fingerprint(), train.fingerprint());
    other.samples[0].target += 1e-9;
    assert_ne!(other.fingerprint(), train.fingerprint());
    assert_eq!(train.fingerprint().len(), 16);
}

proptest! {
    #[test]
    fn target_round_trip(ys in prop::collection::vec(0.5f64..2.0, 2..50), probe in 0.5f64..2.0) {
        use retrace::dataset::{apply_target, Sample};
        use retrace::nn::Matrix;
        let samples = ys.iter().enumerate().map(|(k, &y)| Sample {
            window: Matrix::zeros(1, 28),
            target: y,
            e2_index: None,
            e3_index: None,
            e2_timestamp: k as i64,
            e3_timestamp: k as i64 + 1,
        }).collect();
        let ds = Dataset::new(samples, 1, Role::Train).unwrap();
        let stats = fit_normalizer(&ds).unwrap();
        let back = invert_target(apply_target(probe, &stats), &stats);
        prop_assert!((back - probe).abs() <= 1e-12 * probe);
    }
}
