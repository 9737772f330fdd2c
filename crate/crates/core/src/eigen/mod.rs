//! Lowest eigenpairs of weight operators and multiplicity bookkeeping.

pub mod cluster;
pub mod inertia;
pub mod lanczos;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{InvariantMetric, Weight};
use crate::operator::{assemble_weight_operator, WeightOperator};

pub use cluster::{cluster_ids, cluster_multiplicities, Cluster};
pub use inertia::count_below;
pub use lanczos::{block_lanczos, LanczosOptions, RitzPairs};

/// An eigenvalue with its `ρ`-normalized eigenvector on the base grid.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<Complex64>,
    /// `‖Sφ − λρφ‖ / ‖ρφ‖`.
    pub residual: f64,
    pub cluster_id: usize,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub cluster_tol: f64,
    pub block_size: usize,
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Largest dimension for which a dense solve is used when Lanczos fails.
    pub dense_limit: usize,
    /// Check with an inertia count that no eigenvalue below the returned ones
    /// was missed.
    pub verify_count: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let l = LanczosOptions::default();
        Self {
            tol: l.tol,
            cluster_tol: 1e-6,
            block_size: l.block_size,
            max_basis: l.max_basis,
            max_restarts: l.max_restarts,
            seed: l.seed,
            dense_limit: 2500,
            verify_count: true,
        }
    }
}

/// Generalized residual `‖Sφ − λρφ‖ / ‖ρφ‖`.
pub fn generalized_residual(op: &WeightOperator, lambda: f64, phi: &[Complex64]) -> f64 {
    let s = op.stiffness.matvec(phi);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((sv, v), m) in s.iter().zip(phi).zip(&op.mass) {
        num += (sv - lambda * m * v).norm_sqr();
        den += (m * v).norm_sqr();
    }
    (num / den).sqrt()
}

/// Fixes the free phase (sign for real operators): the largest component
/// becomes real and positive.
fn normalize_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let z = v[best];
    if z.norm() == 0.0 {
        return;
    }
    let rot = z.conj() / z.norm();
    for c in v.iter_mut() {
        *c *= rot;
    }
}

fn finish(op: &WeightOperator, values: Vec<f64>, sym_vectors: Vec<Vec<Complex64>>, opts: &SolverOptions) -> Vec<EigenPair> {
    let inv_sqrt: Vec<f64> = op.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut vectors: Vec<Vec<Complex64>> = sym_vectors
        .into_iter()
        .map(|x| x.iter().zip(&inv_sqrt).map(|(v, s)| v * s).collect())
        .collect();
    let mut values = values;

    // Rayleigh–Ritz inside each cluster
    let ids = cluster_ids(&values, opts.cluster_tol);
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && ids[end] == ids[start] {
            end += 1;
        }
        if end - start > 1 {
            let k = end - start;
            let images: Vec<Vec<Complex64>> = vectors[start..end].iter().map(|v| op.stiffness.matvec(v)).collect();
            let mut t = DMatrix::<Complex64>::zeros(k, k);
            let mut gram = DMatrix::<Complex64>::zeros(k, k);
            for r in 0..k {
                for c in 0..k {
                    t[(r, c)] = vectors[start + r].iter().zip(&images[c]).map(|(a, b)| a.conj() * b).sum();
                    gram[(r, c)] = op.mass_inner(&vectors[start + c], &vectors[start + r]);
                }
            }
            t = lanczos::hermitian_part(&t);
            // orthonormalize against ρ first so the small problem is standard
            let chol = nalgebra::Cholesky::new(lanczos::hermitian_part(&gram));
            if let Some(chol) = chol {
                let l_inv = chol.l().try_inverse().expect("cluster Gram matrix is invertible");
                let t_std = &l_inv * &t * l_inv.adjoint();
                let t_std = lanczos::hermitian_part(&t_std);
                let (theta, y) = lanczos::hermitian_eigen(t_std, op.is_real);
                let coeffs = l_inv.adjoint() * y;
                let old: Vec<Vec<Complex64>> = vectors[start..end].to_vec();
                for i in 0..k {
                    let mut v = vec![Complex64::default(); op.dim()];
                    for r in 0..k {
                        let c = coeffs[(r, i)];
                        for (vi, oi) in v.iter_mut().zip(&old[r]) {
                            *vi += c * oi;
                        }
                    }
                    vectors[start + i] = v;
                    values[start + i] = theta[i];
                }
            }
        }
        start = end;
    }

    let mut pairs: Vec<EigenPair> = values
        .into_iter()
        .zip(vectors)
        .map(|(lambda, mut vector)| {
            let norm = op.mass_inner(&vector, &vector).re.sqrt();
            for v in vector.iter_mut() {
                *v /= norm;
            }
            normalize_phase(&mut vector);
            let residual = generalized_residual(op, lambda, &vector);
            EigenPair {
                lambda,
                vector,
                residual,
                cluster_id: 0,
            }
        })
        .collect();
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let lambdas: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    for (p, id) in pairs.iter_mut().zip(cluster_ids(&lambdas, opts.cluster_tol)) {
        p.cluster_id = id;
    }
    pairs
}

/// Lowest `m` eigenpairs by a dense Hermitian eigensolver.
pub fn dense_eigenpairs(op: &WeightOperator, m: usize, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    if m > op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: m,
        });
    }
    let (theta, y) = lanczos::hermitian_eigen(op.symmetrized_dense(), op.is_real);
    let vectors = (0..m).map(|i| y.column(i).iter().copied().collect()).collect();
    Ok(finish(op, theta[..m].to_vec(), vectors, opts))
}

fn lanczos_pairs(
    op: &WeightOperator,
    m: usize,
    opts: &SolverOptions,
    block_size: usize,
    seed: u64,
    guess: &[Vec<Complex64>],
) -> Result<RitzPairs> {
    let lopts = LanczosOptions {
        block_size,
        max_basis: opts.max_basis,
        max_restarts: opts.max_restarts,
        tol: opts.tol,
        seed,
    };
    let sqrt_mass: Vec<f64> = op.mass.iter().map(|m| m.sqrt()).collect();
    let start: Vec<Vec<Complex64>> = guess
        .iter()
        .map(|g| g.iter().zip(&sqrt_mass).map(|(v, s)| v * s).collect())
        .collect();
    let mut scratch = vec![Complex64::default(); op.dim()];
    block_lanczos(
        op.dim(),
        |x, y| op.apply_symmetrized_into(x, &mut scratch, y),
        m,
        Some(&sqrt_mass),
        op.is_real,
        &start,
        &lopts,
    )
}

/// True when an inertia count finds no eigenvalue below the returned ones
/// that the iteration missed.
fn complete(op: &WeightOperator, values: &[f64]) -> bool {
    let Some(&top) = values.last() else { return true };
    let shift = top - 1e-4 * top.abs().max(1.0);
    let found = values.iter().filter(|&&v| v < shift).count();
    count_below(op, shift) <= found
}

/// Lowest `m` eigenpairs of `op` with the given residual tolerance.
pub fn lowest_eigenpairs(op: &WeightOperator, m: usize, tol: f64) -> Result<Vec<EigenPair>> {
    lowest_eigenpairs_with(
        op,
        m,
        &SolverOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn lowest_eigenpairs_with(op: &WeightOperator, m: usize, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    lowest_eigenpairs_near(op, m, opts, &[])
}

/// Like [`lowest_eigenpairs_with`], starting from approximate eigenvectors
/// (for example those of a nearby operator).
pub fn lowest_eigenpairs_near(
    op: &WeightOperator,
    m: usize,
    opts: &SolverOptions,
    guess: &[Vec<Complex64>],
) -> Result<Vec<EigenPair>> {
    if m >= op.dim() {
        return Err(Error::InvalidConfig(format!(
            "requested {m} eigenpairs of an operator of dimension {}",
            op.dim()
        )));
    }
    let mut last_err = None;
    let mut block = opts.block_size.max(1);
    for attempt in 0..3u64 {
        let start = if attempt == 0 { guess } else { &[] };
        match lanczos_pairs(op, m, opts, block, opts.seed.wrapping_add(attempt), start) {
            Ok(r) => {
                if !opts.verify_count || complete(op, &r.values) {
                    return Ok(finish(op, r.values, r.vectors, opts));
                }
                last_err = Some(Error::NoConvergence {
                    iterations: r.restarts,
                    residuals: r.residuals,
                });
            }
            Err(e @ Error::NoConvergence { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        block *= 2;
    }
    if op.dim() <= opts.dense_limit {
        return dense_eigenpairs(op, m, opts);
    }
    Err(last_err.expect("at least one attempt ran"))
}

/// A pair of eigenvalues from different weights that agree within tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Collision {
    pub alpha: Weight,
    pub beta: Weight,
    pub lambda_alpha: f64,
    pub lambda_beta: f64,
}

/// Compares the lowest `m` eigenvalues of every pair of weights.
pub fn cross_weight_collisions(
    metric: &InvariantMetric,
    weights: &[Weight],
    m: usize,
    collision_tol: f64,
    opts: &SolverOptions,
) -> Result<Vec<Collision>> {
    for (i, a) in weights.iter().enumerate() {
        for b in &weights[i + 1..] {
            if a.same_up_to_sign(b) {
                return Err(Error::InvalidConfig(format!("weights {a} and {b} agree up to sign")));
            }
        }
    }
    let spectra = weights
        .iter()
        .map(|w| {
            let op = assemble_weight_operator(metric, w)?;
            Ok(lowest_eigenpairs_with(&op, m, opts)?.into_iter().map(|p| p.lambda).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(collisions_between(weights, &spectra, collision_tol))
}

/// Collisions between precomputed spectra, in weight-pair order.
pub fn collisions_between(weights: &[Weight], spectra: &[Vec<f64>], collision_tol: f64) -> Vec<Collision> {
    let mut out = Vec::new();
    for i in 0..weights.len() {
        for j in i + 1..weights.len() {
            for &la in &spectra[i] {
                for &lb in &spectra[j] {
                    if (la - lb).abs() <= collision_tol * la.abs().max(lb.abs()).max(1.0) {
                        out.push(Collision {
                            alpha: weights[i].clone(),
                            beta: weights[j].clone(),
                            lambda_alpha: la,
                            lambda_beta: lb,
                        });
                    }
                }
            }
        }
    }
    out
}
