use std::f64::consts::PI;

use splinefit_wasm::{analyze_cell, sweep, synthesize};

fn uniform(n: usize, end: f64) -> Vec<f64> {
    (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn synthesized_signal_is_recovered_by_the_sweep() {
    let t = uniform(300, 2.0);
    let y = synthesize(1, 2, 3, 300, 2.0, 6.0, PI / 4.0, 5, 0.0).unwrap();
    assert_eq!(y.len(), 300);
    let out: serde_json::Value = serde_json::from_str(
        &sweep(&t, &y, 1, 2, 3, [1.0, 10.0, 1.0], [0.0, PI, PI / 8.0]).unwrap(),
    )
    .unwrap();
    assert_eq!(out["omegas"].as_array().unwrap().len(), 10);
    assert_eq!(out["taus"].as_array().unwrap().len(), 9);
    assert_eq!(out["sse"].as_array().unwrap().len(), 90);
    assert_eq!(out["best"]["omega"], 6.0);
    assert!((out["best"]["tau"].as_f64().unwrap() - PI / 4.0).abs() < 1e-12);
    let fitted: Vec<f64> = serde_json::from_value(out["fitted"].clone()).unwrap();
    let err = fitted
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn synthesis_is_seeded() {
    let a = synthesize(2, 3, 2, 50, 1.0, 3.0, 0.5, 7, 0.1).unwrap();
    let b = synthesize(2, 3, 2, 50, 1.0, 3.0, 0.5, 7, 0.1).unwrap();
    let c = synthesize(2, 3, 2, 50, 1.0, 3.0, 0.5, 8, 0.1).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn analyze_reports_per_interval_counts() {
    let t = uniform(1000, 10.0);
    let v: serde_json::Value =
        serde_json::from_str(&analyze_cell(&t, 1, 4, 5, 16.0, 0.3).unwrap()).unwrap();
    assert_eq!(v["status"], "certified_full_rank");
    assert_eq!(v["by"], "theorem1");
    let rows = v["per_interval"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["n_k"] == 200));

    let constant: serde_json::Value =
        serde_json::from_str(&analyze_cell(&t, 2, 2, 2, 0.0, PI / 2.0).unwrap()).unwrap();
    assert_eq!(constant["status"], "certified_deficient");
}

#[test]
fn bad_input_is_an_error_not_a_panic() {
    assert!(synthesize(3, 1, 1, 10, 1.0, 1.0, 0.0, 0, 0.0).is_err());
    assert!(analyze_cell(&[0.0, 0.0, 1.0], 1, 1, 1, 1.0, 0.0).is_err());
    assert!(sweep(
        &[0.0, 1.0],
        &[1.0],
        1,
        1,
        1,
        [1.0, 2.0, 1.0],
        [0.0, 1.0, 1.0]
    )
    .is_err());
    assert!(sweep(
        &uniform(20, 1.0),
        &[0.0; 20],
        1,
        1,
        1,
        [1.0, 2.0, 0.0],
        [0.0, 1.0, 1.0]
    )
    .is_err());
}
