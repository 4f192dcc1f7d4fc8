//! Data-layer checks on generated and loaded streams.

mod common;

use driftcl::data::{generate_samples, generate_stream, load_csv, save_csv, DriftGenConfig};
use driftcl::eval::{evaluate, fit, TrainConfig};
use driftcl::nn::{Mlp, ModelConfig};

#[test]
fn inputs_share_one_distribution_across_tasks() {
    let cfg = DriftGenConfig {
        samples_per_task: 5000,
        seed: 17,
        ..DriftGenConfig::default()
    };
    let s = generate_samples(&cfg).unwrap();
    for d in 0..10 {
        let stats: Vec<(f64, f64)> = (0..3)
            .map(|t| {
                let xs: Vec<f64> = s
                    .iter()
                    .filter(|x| x.task_id == t)
                    .map(|x| x.features[d])
                    .collect();
                let n = xs.len() as f64;
                let m = xs.iter().sum::<f64>() / n;
                (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
            })
            .collect();
        for (m, sd) in &stats {
            assert!(m.abs() < 0.06 && (sd - 1.0).abs() < 0.06, "dim {d}: {m} {sd}");
            assert!((m - stats[0].0).abs() < 0.1 && (sd - stats[0].1).abs() < 0.1);
        }
    }
}

#[test]
fn targets_conflict_between_tasks() {
    let stream = generate_stream(&DriftGenConfig {
        seed: 2,
        ..DriftGenConfig::default()
    })
    .unwrap();
    let mut model = Mlp::new(&ModelConfig {
        hidden_sizes: vec![32],
        seed: 1,
        ..ModelConfig::default()
    })
    .unwrap();
    let train = TrainConfig {
        epochs: 10,
        ..TrainConfig::default()
    };
    fit(&mut model, &stream.tasks[0].train, &train, 1).unwrap();
    let own = evaluate(&model, &stream.tasks[0].test, 4).unwrap();
    let cross = evaluate(&model, &stream.tasks[1].test, 4).unwrap();
    assert!(own > 0.4, "own-task accuracy {own}");
    assert!(cross < 0.35, "cross-task accuracy {cross}");
}

#[test]
fn offsets_shift_targets() {
    let base = DriftGenConfig {
        samples_per_task: 500,
        seed: 4,
        ..DriftGenConfig::default()
    };
    let shifted = DriftGenConfig {
        task_offsets: vec![3.0],
        ..base.clone()
    };
    let mean = |c: &DriftGenConfig, t: u32| {
        let s = generate_samples(c).unwrap();
        let ys: Vec<f64> = s
            .iter()
            .filter(|x| x.task_id == t)
            .map(|x| x.target_raw)
            .collect();
        ys.iter().sum::<f64>() / ys.len() as f64
    };
    assert!(mean(&shifted, 0) > mean(&base, 0) + 0.2);
    assert_eq!(mean(&shifted, 1), mean(&base, 1));
}

#[test]
fn saved_stream_reloads_with_same_labels() {
    let stream = common::small_stream(6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    save_csv(&path, &stream).unwrap();
    let back = load_csv(&path, 0.8, 6).unwrap();
    assert_eq!(back.len(), 3);
    for (a, b) in stream.tasks.iter().zip(&back.tasks) {
        assert_eq!(a.train.len() + a.test.len(), b.train.len() + b.test.len());
        let mut la: Vec<usize> = a.train.iter().chain(&a.test).map(|s| s.label).collect();
        let mut lb: Vec<usize> = b.train.iter().chain(&b.test).map(|s| s.label).collect();
        la.sort();
        lb.sort();
        assert_eq!(la, lb);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_csv("/nonexistent/x.csv", 0.8, 0).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
