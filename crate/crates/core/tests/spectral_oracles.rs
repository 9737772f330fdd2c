use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use toruslab::eigen::{dense_eigenpairs, lowest_eigenpairs_with};
use toruslab::operator::gauge_phase;
use toruslab::*;

/// Eigenvalues of the constant diagonal metric, discrete symbol of the
/// five-point Laplacian.
fn flat_discrete(n: usize, alpha: f64, c: [f64; 3], count: usize) -> Vec<f64> {
    let dx = 2.0 * PI / n as f64;
    let sym = |k: i64| (2.0 / dx * (k as f64 * dx / 2.0).sin()).powi(2);
    let mut vals = Vec::new();
    for k in 0..n as i64 {
        for l in 0..n as i64 {
            vals.push(alpha * alpha / c[0] + sym(k) / c[1] + sym(l) / c[2]);
        }
    }
    vals.sort_by(f64::total_cmp);
    vals.truncate(count);
    vals
}

fn diagonal_metric(n: usize, c: [f64; 3]) -> InvariantMetric {
    InvariantMetric::constant(
        BundleConfig::new(1, 0, n).unwrap(),
        &DMatrix::from_element(1, 1, c[0]),
        &Matrix2::new(c[1], 0.0, 0.0, c[2]),
    )
}

#[test]
fn flat_diagonal_matches_discrete_symbol() {
    let c = [1.5, 0.8, 1.3];
    let metric = diagonal_metric(16, c);
    for alpha in 0..3 {
        let op = assemble_weight_operator(&metric, &Weight::scalar(alpha)).unwrap();
        let got: Vec<f64> = lowest_eigenpairs(&op, 6, 1e-10).unwrap().iter().map(|p| p.lambda).collect();
        let want = flat_discrete(16, alpha as f64, c, 6);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{alpha}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn landau_level_of_unit_flux() {
    // constant curvature with total flux 2π·α·e over an area 4π²
    let metric = InvariantMetric::flat(BundleConfig::new(1, 1, 48).unwrap());
    let op = assemble_weight_operator(&metric, &Weight::scalar(1)).unwrap();
    let pairs = lowest_eigenpairs(&op, 2, 1e-9).unwrap();
    let exact = 1.0 + 1.0 / (2.0 * PI);
    assert!((pairs[0].lambda - exact).abs() < 2e-3, "{}", pairs[0].lambda);
    // next level at 1 + 3/(2π)
    assert!((pairs[1].lambda - pairs[0].lambda - 1.0 / PI).abs() < 5e-3);
}

#[test]
fn flux_two_landau_level_is_doubly_degenerate() {
    let metric = InvariantMetric::flat(BundleConfig::new(1, 2, 32).unwrap());
    let op = assemble_weight_operator(&metric, &Weight::scalar(1)).unwrap();
    let pairs = lowest_eigenpairs(&op, 3, 1e-10).unwrap();
    let clusters = cluster_multiplicities(&pairs.iter().map(|p| p.lambda).collect::<Vec<_>>(), 1e-6, false);
    assert_eq!(clusters[0].complex_multiplicity, 2);
    assert!((clusters[0].lambda_mean - (1.0 + 2.0 / (2.0 * PI))).abs() < 5e-3);
}

#[test]
fn lanczos_agrees_with_dense() {
    let metric = sample_random_metric(BundleConfig::new(1, 1, 20).unwrap(), 17, 2, 0.2).unwrap();
    let op = assemble_weight_operator(&metric, &Weight::scalar(2)).unwrap();
    let opts = SolverOptions {
        tol: 1e-11,
        ..Default::default()
    };
    let a = lowest_eigenpairs_with(&op, 8, &opts).unwrap();
    let b = dense_eigenpairs(&op, 8, &opts).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.lambda - y.lambda).abs() < 1e-9);
    }
    let dense = op.symmetrized_dense();
    let mut all: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
    all.sort_by(f64::total_cmp);
    assert!((all[0] - a[0].lambda).abs() < 1e-9);
}

/// A gauge function without grid-scale oscillation.
fn smooth_gauge(n: usize) -> Vec<f64> {
    let dx = std::f64::consts::TAU / n as f64;
    (0..n * n)
        .map(|p| {
            let (x, y) = ((p % n) as f64 * dx, (p / n) as f64 * dx);
            3.0 * (x - 0.4).sin() + (x + 2.0 * y).cos() + 0.3 * (3.0 * y).sin()
        })
        .collect()
}

#[test]
fn gauge_and_conjugation_preserve_spectrum() {
    let metric = sample_random_metric(BundleConfig::new(1, 1, 16).unwrap(), 23, 2, 0.2).unwrap();
    let chi = smooth_gauge(16);
    let gauged = gauge_transform(&metric, 0, &chi).unwrap();
    let spec = |m: &InvariantMetric, a: i64| -> Vec<f64> {
        let op = assemble_weight_operator(m, &Weight::scalar(a)).unwrap();
        lowest_eigenpairs(&op, 5, 1e-12).unwrap().iter().map(|p| p.lambda).collect()
    };
    let base = spec(&metric, 2);
    for other in [spec(&gauged, 2), spec(&metric, -2)] {
        for (x, y) in base.iter().zip(&other) {
            assert!((x - y).abs() < 1e-12 * x.max(1.0), "{base:?} vs {other:?}");
        }
    }
    // eigenvectors transform by the gauge phase
    let op = assemble_weight_operator(&metric, &Weight::scalar(2)).unwrap();
    let op2 = assemble_weight_operator(&gauged, &Weight::scalar(2)).unwrap();
    let phi = &lowest_eigenpairs(&op, 1, 1e-12).unwrap()[0];
    let moved = gauge_phase(2, &chi, &phi.vector);
    let image = op2.apply(&moved).unwrap();
    let err: f64 = image.iter().zip(&moved).map(|(a, b)| (a - phi.lambda * b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn weight_zero_ground_state_is_constant() {
    let metric = sample_random_metric(BundleConfig::new(2, 0, 12).unwrap(), 5, 2, 0.2).unwrap();
    let op = assemble_weight_operator(&metric, &Weight::new(vec![0, 0])).unwrap();
    let pairs = lowest_eigenpairs(&op, 2, 1e-10).unwrap();
    assert!(pairs[0].lambda.abs() < 1e-10);
    let v = &pairs[0].vector;
    let spread = v.iter().map(|z| (z - v[0]).norm()).fold(0.0, f64::max);
    assert!(spread < 1e-8);
    assert!(v.iter().all(|z| z.im.abs() < 1e-12 && z.re > 0.0));
    let _ = Complex64::default();
}

#[test]
fn weyl_counts_split_by_weight() {
    let metric = diagonal_metric(16, [1.0, 1.0, 1.0]);
    let c = weyl_counts(&metric, 3.5, 4, 0.8).unwrap();
    // weight 0: 0, 1 (×4), 2 (×4) below 3.5 once discretized
    let want0 = flat_discrete(16, 0.0, [1.0; 3], 256).iter().filter(|&&v| v < 3.5).count();
    let want1 = flat_discrete(16, 1.0, [1.0; 3], 256).iter().filter(|&&v| v < 3.5).count();
    assert_eq!(c.invariant, want0);
    assert_eq!(c.total, want0 + 2 * want1);
    assert!(!c.truncated);
}

#[test]
fn second_order_on_variable_metric() {
    // no closed form here: compare successive differences under refinement
    let weight = Weight::scalar(1);
    let values: Vec<Vec<f64>> = [12usize, 24, 48]
        .iter()
        .map(|&n| {
            let config = BundleConfig::new(1, 1, n).unwrap();
            let metric = sample_around_constant(config, &DMatrix::from_element(1, 1, 1.0), &Matrix2::new(1.0, 0.3, 0.3, 1.2), 4, 2, 0.3).unwrap();
            let op = assemble_weight_operator(&metric, &weight).unwrap();
            lowest_eigenpairs(&op, 3, 1e-12).unwrap().iter().map(|p| p.lambda).collect()
        })
        .collect();
    for k in 0..3 {
        let coarse = values[0][k] - values[1][k];
        let fine = values[1][k] - values[2][k];
        let order = (coarse / fine).abs().log2();
        assert!(order > 1.8, "eigenvalue {k}: {:?} gives order {order}", values.iter().map(|v| v[k]).collect::<Vec<_>>());
    }
}
