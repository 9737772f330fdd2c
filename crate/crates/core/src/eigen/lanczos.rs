//! Thick-restart block Lanczos with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub block_size: usize,
    /// Basis size at which the iteration restarts; raised to at least `m + 2·block_size`.
    pub max_basis: usize,
    pub max_restarts: usize,
    /// Relative residual target, scaled by `max(1, λ)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            block_size: 4,
            max_basis: 120,
            max_restarts: 400,
            tol: 1e-8,
            seed: 0x5eed,
        }
    }
}

/// Lowest Ritz pairs of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct RitzPairs {
    pub values: Vec<f64>,
    /// Unit vectors in the space the operator acts on.
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, real: bool) -> Vec<Complex64> {
    (0..dim)
        .map(|_| {
            let re = rng.gen_range(-1.0..1.0);
            let im = if real { 0.0 } else { rng.gen_range(-1.0..1.0) };
            Complex64::new(re, im)
        })
        .collect()
}

/// Residual weighting: `weights[i]` multiplies component `i` before taking norms,
/// so that residuals can be reported in a different inner product.
type Weights<'a> = Option<&'a [f64]>;

fn weighted_norm(v: &[Complex64], w: Weights) -> f64 {
    match w {
        None => norm(v),
        Some(w) => v.iter().zip(w).map(|(x, s)| (x * s).norm_sqr()).sum::<f64>().sqrt(),
    }
}

struct Basis<'f, F> {
    apply: &'f mut F,
    vecs: Vec<Vec<Complex64>>,
    images: Vec<Vec<Complex64>>,
    /// `proj[r][c] = ⟨v_c, H v_r⟩` for `c ≤ r`.
    proj: Vec<Vec<Complex64>>,
    dim: usize,
}

impl<F: FnMut(&[Complex64], &mut [Complex64])> Basis<'_, F> {
    /// Orthonormalizes candidates against the basis (two passes of classical
    /// Gram–Schmidt) and appends the survivors. Returns how many were added.
    fn extend(&mut self, candidates: Vec<Vec<Complex64>>, room: usize) -> usize {
        let mut added = 0;
        for mut w in candidates {
            if added == room || self.vecs.len() == self.dim {
                break;
            }
            let before = norm(&w);
            if before == 0.0 {
                continue;
            }
            for _ in 0..2 {
                let coeffs: Vec<Complex64> = self.vecs.iter().map(|v| dot(v, &w)).collect();
                for (v, c) in self.vecs.iter().zip(coeffs) {
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let after = norm(&w);
            if after <= 1e-10 * before {
                continue;
            }
            for wi in w.iter_mut() {
                *wi /= after;
            }
            let mut image = vec![Complex64::default(); self.dim];
            (self.apply)(&w, &mut image);
            self.vecs.push(w);
            self.proj.push(self.vecs.iter().map(|v| dot(v, &image)).collect());
            self.images.push(image);
            added += 1;
        }
        added
    }
}

/// Computes the `m` lowest eigenpairs of the Hermitian operator `apply`.
///
/// `weights` changes the norm used for reported residuals: the residual of a
/// Ritz pair `(θ, x)` is `‖w·(Hx − θx)‖ / ‖w·x‖`. When `real` is set the
/// operator is assumed to map real vectors to real vectors and all vectors
/// are kept real. `start` vectors, if any, seed the first block.
pub fn block_lanczos<F>(
    dim: usize,
    mut apply: F,
    m: usize,
    weights: Weights,
    real: bool,
    start: &[Vec<Complex64>],
    opts: &LanczosOptions,
) -> Result<RitzPairs>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    if m == 0 {
        return Ok(RitzPairs {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
            restarts: 0,
        });
    }
    if m > dim {
        return Err(Error::DimensionMismatch { expected: dim, got: m });
    }
    let b = opts.block_size.clamp(1, dim);
    let max_basis = opts.max_basis.max(m + 2 * b).min(dim);
    let keep = (m + b).min(max_basis.saturating_sub(b)).max(m.min(max_basis));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = Basis {
        apply: &mut apply,
        vecs: Vec::new(),
        images: Vec::new(),
        proj: Vec::new(),
        dim,
    };

    let mut block: Vec<Vec<Complex64>> = start.to_vec();
    while block.len() < b {
        block.push(random_vector(&mut rng, dim, real));
    }
    let mut best_residuals = vec![f64::INFINITY; m];
    for restart in 0..=opts.max_restarts {
        // Krylov expansion
        loop {
            let room = max_basis - basis.vecs.len();
            if room == 0 {
                break;
            }
            let start = basis.vecs.len();
            let added = basis.extend(std::mem::take(&mut block), room);
            if basis.vecs.len() >= max_basis {
                break;
            }
            block = if added > 0 {
                basis.images[start..start + added].to_vec()
            } else {
                (0..b).map(|_| random_vector(&mut rng, dim, real)).collect()
            };
        }

        // Rayleigh–Ritz
        let k = basis.vecs.len();
        let mut t = DMatrix::<Complex64>::zeros(k, k);
        for r in 0..k {
            for c in 0..r {
                t[(c, r)] = basis.proj[r][c];
                t[(r, c)] = basis.proj[r][c].conj();
            }
            t[(r, r)] = Complex64::new(basis.proj[r][r].re, 0.0);
        }
        let (theta, y) = hermitian_eigen(t, real);
        let n_ritz = keep.min(k);
        let mut vectors = Vec::with_capacity(n_ritz);
        let mut residual_vecs = Vec::with_capacity(n_ritz);
        let mut residuals = Vec::with_capacity(n_ritz);
        for i in 0..n_ritz {
            let mut x = vec![Complex64::default(); dim];
            let mut hx = vec![Complex64::default(); dim];
            for r in 0..k {
                let c = y[(r, i)];
                if c == Complex64::default() {
                    continue;
                }
                for ((xi, hi), (v, hv)) in x.iter_mut().zip(hx.iter_mut()).zip(basis.vecs[r].iter().zip(&basis.images[r])) {
                    *xi += c * v;
                    *hi += c * hv;
                }
            }
            let res: Vec<Complex64> = hx.iter().zip(&x).map(|(h, v)| h - theta[i] * v).collect();
            residuals.push(weighted_norm(&res, weights) / weighted_norm(&x, weights));
            vectors.push(x);
            residual_vecs.push(res);
        }
        let converged = |i: usize| residuals[i] <= opts.tol * theta[i].abs().max(1.0);
        for i in 0..m {
            best_residuals[i] = best_residuals[i].min(residuals[i]);
        }
        if (0..m).all(converged) || k == dim {
            return Ok(RitzPairs {
                values: theta[..m].to_vec(),
                vectors: vectors.into_iter().take(m).collect(),
                residuals: residuals[..m].to_vec(),
                restarts: restart,
            });
        }
        if restart == opts.max_restarts {
            break;
        }

        // thick restart: keep the lowest Ritz vectors, continue from residuals
        let mut next: Vec<Vec<Complex64>> = (0..n_ritz)
            .filter(|&i| !converged(i))
            .take(b)
            .map(|i| residual_vecs[i].clone())
            .collect();
        while next.len() < b {
            next.push(random_vector(&mut rng, dim, real));
        }
        // re-orthonormalize the kept vectors to stop drift across restarts
        basis.vecs.clear();
        basis.images.clear();
        basis.proj.clear();
        basis.extend(vectors, n_ritz);
        block = next;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        residuals: best_residuals,
    })
}

/// `(M + Mᴴ)/2`.
pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigen-decomposition of a small Hermitian matrix, ascending.
pub(crate) fn hermitian_eigen(t: DMatrix<Complex64>, real: bool) -> (Vec<f64>, DMatrix<Complex64>) {
    let k = t.nrows();
    let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = if real {
        let re = t.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|v| Complex64::new(v, 0.0)))
    } else {
        let eig = SymmetricEigen::new(t);
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(k, k, |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let diag: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let apply = |x: &[Complex64], y: &mut [Complex64]| {
            for i in 0..x.len() {
                y[i] = diag[i] * x[i];
            }
        };
        let opts = LanczosOptions {
            block_size: 2,
            max_basis: 6,
            ..Default::default()
        };
        let out = block_lanczos(10, apply, 3, None, true, &[], &opts).unwrap();
        for (v, e) in out.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-10);
        }
    }

    #[test]
    fn repeated_eigenvalue_within_block() {
        let diag: Vec<f64> = (0..200).map(|i| if i < 3 { 0.5 } else { 1.0 + i as f64 }).collect();
        let apply = |x: &[Complex64], y: &mut [Complex64]| {
            for i in 0..x.len() {
                y[i] = diag[i] * x[i];
            }
        };
        let out = block_lanczos(200, apply, 4, None, false, &[], &LanczosOptions::default()).unwrap();
        assert!(out.values[..3].iter().all(|v| (v - 0.5).abs() < 1e-10));
        assert!((out.values[3] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn no_convergence_carries_residuals() {
        let apply = |x: &[Complex64], y: &mut [Complex64]| {
            for i in 0..x.len() {
                y[i] = (i as f64).powi(2) * x[i];
            }
        };
        let opts = LanczosOptions {
            block_size: 1,
            max_basis: 4,
            max_restarts: 1,
            tol: 1e-14,
            seed: 1,
        };
        match block_lanczos(500, apply, 2, None, true, &[], &opts) {
            Err(Error::NoConvergence { residuals, .. }) => assert_eq!(residuals.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
