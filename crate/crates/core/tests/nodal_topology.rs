use std::collections::VecDeque;

use num_complex::Complex64;
use proptest::prelude::*;
use toruslab::nodal::{nodal_report, wrap_consistency, DEFAULT_ZERO_TOL};
use toruslab::*;

/// Breadth-first search over same-sign cells, with its own neighbour rule.
fn bfs_domains(n: usize, nt: usize, e: i64, values: &[f64], zero_tol: f64) -> usize {
    let rms = (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt();
    let sign = |v: f64| if v.abs() < zero_tol * rms { 0 } else if v > 0.0 { 1 } else { -1 };
    let idx = |i: usize, j: usize, r: usize| i + n * j + n * n * r;
    let neighbours = |c: usize| -> Vec<usize> {
        let (i, j, r) = (c % n, (c / n) % n, c / (n * n));
        let shift = |j: usize| e * (j * nt / n) as i64;
        let wrap = |r: i64| r.rem_euclid(nt as i64) as usize;
        let right = if i + 1 == n { idx(0, j, wrap(r as i64 + shift(j))) } else { idx(i + 1, j, r) };
        let left = if i == 0 { idx(n - 1, j, wrap(r as i64 - shift(j))) } else { idx(i - 1, j, r) };
        vec![
            right,
            left,
            idx(i, (j + 1) % n, r),
            idx(i, (j + n - 1) % n, r),
            idx(i, j, (r + 1) % nt),
            idx(i, j, (r + nt - 1) % nt),
        ]
    };
    let mut seen = vec![false; values.len()];
    let mut count = 0;
    for start in 0..values.len() {
        let s = sign(values[start]);
        if s == 0 || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for nb in neighbours(c) {
                if !seen[nb] && sign(values[nb]) == s {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    count
}

fn section(n: usize, coeffs: &[(f64, f64)]) -> Vec<Complex64> {
    (0..n * n)
        .map(|p| {
            let (i, j) = ((p % n) as f64, (p / n) as f64);
            coeffs.iter().enumerate().map(|(k, (a, b))| Complex64::new(a * (k as f64 * i + j).cos(), b * (i - k as f64 * j).sin())).sum()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn union_find_agrees_with_bfs(
        n in 3usize..7,
        e in -2i64..3,
        alpha in -2i64..3,
        mult in 1usize..3,
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..4),
    ) {
        let nt = if e == 0 { 4 * mult } else { n * e.unsigned_abs() as usize * mult };
        let phi = section(n, &coeffs);
        let field = reconstruct_total_space(&phi, alpha, e, nt).unwrap();
        let uf = count_nodal_domains(&field, DEFAULT_ZERO_TOL);
        prop_assert_eq!(uf, bfs_domains(n, nt, e, &field.values, DEFAULT_ZERO_TOL));
        let flipped = TotalSpaceField { values: field.values.iter().map(|v| -v).collect(), ..field.clone() };
        prop_assert_eq!(count_nodal_domains(&flipped, DEFAULT_ZERO_TOL), uf);
        prop_assert_eq!(nodal_set_components(&flipped, DEFAULT_ZERO_TOL), nodal_set_components(&field, DEFAULT_ZERO_TOL));
    }
}

#[test]
fn union_find_agrees_with_bfs_on_full_size_grid() {
    let n = 32;
    let phi = section(n, &[(0.3, 0.8), (0.5, -0.2), (0.1, 0.4)]);
    let field = reconstruct_total_space(&phi, 1, 1, 32).unwrap();
    assert_eq!(count_nodal_domains(&field, DEFAULT_ZERO_TOL), bfs_domains(n, 32, 1, &field.values, DEFAULT_ZERO_TOL));
}

#[test]
fn lowest_eigenfield_on_nontrivial_bundle() {
    let n = 20;
    let metric = sample_random_metric(BundleConfig::new(1, 1, n).unwrap(), 12, 2, 0.2).unwrap();
    let op = assemble_weight_operator(&metric, &Weight::scalar(1)).unwrap();
    let phi = &lowest_eigenpairs(&op, 1, 1e-10).unwrap()[0].vector;
    let field = reconstruct_total_space(phi, 1, 1, 40).unwrap();
    assert!(wrap_consistency(&field, phi).unwrap() <= 1e-12);
    let report = nodal_report(phi, 1, 1, 40, DEFAULT_ZERO_TOL).unwrap();
    assert_eq!((report.domain_count, report.nodal_components), (2, 1));
    assert!(report.regular_margin.unwrap() > 0.05);
    assert!(report.min_orbit_norm < 0.2);
}

#[test]
fn trivial_bundle_constant_section() {
    let phi = vec![Complex64::new(1.0, 0.0); 64];
    let report = nodal_report(&phi, 1, 0, 16, DEFAULT_ZERO_TOL).unwrap();
    assert_eq!((report.domain_count, report.nodal_components), (2, 2));
    assert_eq!(report.min_orbit_norm, 1.0);
    let metric = InvariantMetric::flat(BundleConfig::new(1, 0, 8).unwrap());
    let op = assemble_weight_operator(&metric, &Weight::scalar(1)).unwrap();
    let ground = &lowest_eigenpairs(&op, 1, 1e-12).unwrap()[0].vector;
    assert!((vanish_on_orbit(ground) - 1.0).abs() < 1e-9);
}
