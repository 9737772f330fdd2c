use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toruslab::perturbation::{check_eigenvalue_velocity, fd_pairing, BranchOptions};
use toruslab::*;

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn smooth(n: usize, k: f64, phase: f64) -> Vec<f64> {
    let dx = 2.0 * std::f64::consts::PI / n as f64;
    (0..n * n)
        .map(|p| {
            let (i, j) = ((p % n) as f64, (p / n) as f64);
            (k * i * dx + phase).sin() * (j * dx).cos() + 0.3
        })
        .collect()
}

#[test]
fn mixed_vertical_rate_on_flat_two_torus_fiber() {
    // G_t = I − t(E₀₁ + E₁₀) so G_t⁻¹ = I + t(E₀₁ + E₁₀) + O(t²) and the
    // potential αᵀG⁻¹α moves at rate 2·α₀·α₁
    let metric = InvariantMetric::flat(BundleConfig::new(2, 0, 12).unwrap());
    let alpha = Weight::new(vec![1, 1]);
    let op = assemble_weight_operator(&metric, &alpha).unwrap();
    let pairs = lowest_eigenpairs(&op, 3, 1e-11).unwrap();
    let path = PerturbationPath::new(metric.clone(), PathKind::MixedVertical { j: 0, k: 1 }).unwrap();
    let rate = lambda_dot_general(&metric, &op, &pairs, 0, &path.velocity()).unwrap();
    assert!((rate - 2.0).abs() < 1e-10, "{rate}");
    let report = check_eigenvalue_velocity("mixed_vertical", &path, &alpha, &pairs, 0, &BranchOptions::default()).unwrap();
    assert!(report.rel_err < 1e-6, "{report:?}");
}

#[test]
fn velocities_on_random_metric_match_differences() {
    let n = 16;
    let metric = sample_random_metric(BundleConfig::new(1, 1, n).unwrap(), 31, 2, 0.2).unwrap();
    let alpha = Weight::scalar(1);
    let op = assemble_weight_operator(&metric, &alpha).unwrap();
    let pairs = lowest_eigenpairs(&op, 4, 1e-11).unwrap();
    let x: Vec<[f64; 2]> = smooth(n, 1.0, 0.2).into_iter().zip(smooth(n, 2.0, 1.0)).map(|(a, b)| [a, b]).collect();
    let kinds = [
        ("rank_one_vertical", PathKind::RankOneVertical { j: 0 }),
        (
            "split_rescale",
            PathKind::SplitRescale {
                a_dot: smooth(n, 1.0, 0.0),
                b_dot: smooth(n, 2.0, 0.5),
            },
        ),
        ("mixed_xy", PathKind::MixedXY { x, j: 0 }),
    ];
    for (name, kind) in kinds {
        let path = PerturbationPath::new(metric.clone(), kind).unwrap();
        let report = check_eigenvalue_velocity(name, &path, &alpha, &pairs, 0, &BranchOptions::default()).unwrap();
        assert!(report.rel_err < 1e-5, "{report:?}");
    }
}

#[test]
fn pairings_match_operator_reassembly() {
    let n = 10;
    let metric = sample_random_metric(BundleConfig::new(1, 1, n).unwrap(), 2, 2, 0.2).unwrap();
    let alpha = Weight::scalar(2);
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for trial in 0..4 {
        let (u, v) = (random_field(&mut rng, n * n), random_field(&mut rng, n * n));
        let a_dot: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b_dot: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<[f64; 2]> = (0..n * n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let split = PerturbationPath::new(metric.clone(), PathKind::SplitRescale { a_dot: a_dot.clone(), b_dot: b_dot.clone() }).unwrap();
        let xy = PerturbationPath::new(metric.clone(), PathKind::MixedXY { x: x.clone(), j: 0 }).unwrap();
        let cases = [
            (split_rescale_pairing(&metric, &alpha, &u, &v, &a_dot, &b_dot).unwrap(), fd_pairing(&split, &alpha, &u, &v, 1e-4).unwrap()),
            (mixed_xy_pairing(&metric, &alpha, &u, &v, &x, 0).unwrap(), fd_pairing(&xy, &alpha, &u, &v, 1e-4).unwrap()),
            (
                laplacian_variation_pairing(&metric, &alpha, &u, &v, &split.velocity()).unwrap(),
                fd_pairing(&split, &alpha, &u, &v, 1e-4).unwrap(),
            ),
        ];
        for (k, (analytic, numeric)) in cases.iter().enumerate() {
            assert!((analytic - numeric).abs() <= 1e-6 * analytic.abs().max(1.0), "trial {trial} case {k}: {analytic} vs {numeric}");
        }
    }
}

#[test]
fn eigenfunction_pairing_fits_vertical_constant() {
    let n = 12;
    let metric = sample_random_metric(BundleConfig::new(1, 1, n).unwrap(), 9, 2, 0.2).unwrap();
    let alpha = Weight::scalar(1);
    let op = assemble_weight_operator(&metric, &alpha).unwrap();
    let pair = &lowest_eigenpairs(&op, 1, 1e-12).unwrap()[0];
    let fs: Vec<Vec<f64>> = (0..4).map(|k| smooth(n, k as f64, 0.3 * k as f64).iter().map(|v| v.exp()).collect()).collect();
    let check = uhlenbeck_pairing_check(&metric, &alpha, pair.lambda, &pair.vector, &pair.vector, &fs, 1e-4).unwrap();
    // d = 1, n = 3: (n − 2)/d = 1
    assert!((check.c_fit - 1.0).abs() < 1e-6, "{check:?}");
    assert!(check.c_std < 1e-6);
    assert_eq!(check.paper_constant, 5.0);
    let rotated: Vec<Complex64> = pair.vector.iter().map(|z| z * Complex64::i()).collect();
    let zero = uhlenbeck_pairing_check(&metric, &alpha, pair.lambda, &pair.vector, &rotated, &fs, 1e-4).unwrap();
    assert!(zero.rows.iter().all(|r| r.lhs.abs() < 1e-8 && r.mass == 0.0));
    let none = uhlenbeck_pairing_check(&metric, &alpha, pair.lambda, &pair.vector, &pair.vector, &[vec![0.0; n * n]], 1e-4).unwrap();
    let row = &none.rows[0];
    assert_eq!((row.lhs, row.rhs_paper, row.rhs_refit, none.c_fit), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn zero_velocity_battery_is_zero() {
    let metric = sample_random_metric(BundleConfig::new(1, 0, 8).unwrap(), 1, 2, 0.2).unwrap();
    let alpha = Weight::scalar(1);
    let op = assemble_weight_operator(&metric, &alpha).unwrap();
    let pairs = lowest_eigenpairs(&op, 2, 1e-10).unwrap();
    let zero = vec![DMatrix::zeros(3, 3); 64];
    assert_eq!(lambda_dot_general(&metric, &op, &pairs, 0, &zero).unwrap(), 0.0);
}
