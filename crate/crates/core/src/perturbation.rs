//! First variations of weight operators along paths of invariant metrics,
//! and finite-difference oracles that check them.
//!
//! For a path `g_t` the discrete operator `Δ_t = ρ_t⁻¹S_t` satisfies
//!
//! ```text
//!     Σ ρ₀ (Δ̇u) conj(v) = −Σ ρ ġ(∇u, ∇v) + Σ ρ τ (⟨∇u, ∇v⟩ − (Δu) conj(v))
//! ```
//!
//! with `τ = ½ tr(g⁻¹ġ)`. The discrete `ġ(∇u, ∇v)` uses the velocity in the
//! frame adapted to the connection (blocks `Ġ`, `G·Ȧ`, `ḣ`) and the same
//! quadrant average as the operator. In the mixed vertical/horizontal block
//! the vertical derivative `−iα u` paired with the difference along an edge is
//! taken at the far end of that edge, transported back by the link variable,
//! and weighted by the edge average of `α·Ȧ`. With these conventions the
//! identity holds exactly for the assembled operators, not just to
//! discretization order.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::{lowest_eigenpairs_near, EigenPair, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{InvariantMetric, Weight};
use crate::operator::{assemble_weight_operator, WeightOperator, QUADRANTS};
use crate::path::{PathKind, PerturbationPath};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

struct SiteBlocks {
    /// `αᵀ G⁻¹ Ġ G⁻¹ α`.
    vertical_rate: f64,
    /// `αᵀ G⁻¹ (G Ȧ)`, one entry per horizontal direction.
    mixed: [f64; 2],
    /// `h⁻¹ ḣ h⁻¹`.
    horizontal: Matrix2<f64>,
    /// `½ tr(g⁻¹ ġ)`.
    tau: f64,
}

/// Precomputed velocity data for one operator and one `ġ`.
pub struct Variation<'a> {
    op: &'a WeightOperator,
    sites: Vec<SiteBlocks>,
}

impl<'a> Variation<'a> {
    /// `op` must be the operator assembled from `metric`; `g_dot` holds
    /// coordinate-frame velocities, one per grid point.
    pub fn new(metric: &InvariantMetric, op: &'a WeightOperator, g_dot: &[DMatrix<f64>]) -> Result<Self> {
        let config = metric.config;
        let d = config.fiber_dim;
        let n = d + 2;
        if g_dot.len() != config.num_points() {
            return Err(Error::DimensionMismatch {
                expected: config.num_points(),
                got: g_dot.len(),
            });
        }
        let alpha = DVector::from_vec(op.alpha.as_f64());
        let mut sites = Vec::with_capacity(g_dot.len());
        for (p, gd) in g_dot.iter().enumerate() {
            if gd.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: gd.nrows(),
                });
            }
            let conn = metric.full_connection_at(p);
            let mut frame = DMatrix::<f64>::identity(n, n);
            for j in 0..d {
                for a in 0..2 {
                    frame[(j, d + a)] = -conn[(j, a)];
                }
            }
            let adapted = frame.transpose() * gd * &frame;
            let vv = adapted.view((0, 0), (d, d)).into_owned();
            let vh = adapted.view((0, d), (d, 2)).into_owned();
            let hh = Matrix2::new(adapted[(d, d)], adapted[(d, d + 1)], adapted[(d + 1, d)], adapted[(d + 1, d + 1)]);
            let g_inv = metric.fiber_gram_at(p).try_inverse().expect("fiber Gram matrix is invertible");
            let hi = op.h_inv[p];
            let h_inv = Matrix2::new(hi[0], hi[1], hi[2], hi[3]);
            let g_inv_alpha = &g_inv * &alpha;
            let vertical_rate = (g_inv_alpha.transpose() * &vv * &g_inv_alpha)[(0, 0)];
            let m = g_inv_alpha.transpose() * &vh;
            let tau = 0.5 * ((&g_inv * &vv).trace() + (h_inv * hh).trace());
            sites.push(SiteBlocks {
                vertical_rate,
                mixed: [m[(0, 0)], m[(0, 1)]],
                horizontal: h_inv * hh * h_inv,
                tau,
            });
        }
        Ok(Self { op, sites })
    }

    /// `½ tr(g⁻¹ġ)` per grid point.
    pub fn volume_rate(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.tau).collect()
    }

    /// `ρ_p · ġ(∇u, ∇v)` at grid point `p`.
    fn metric_density(&self, u: &[Complex64], v: &[Complex64], p: usize) -> Complex64 {
        let s = &self.sites[p];
        let op = self.op;
        let vv = s.vertical_rate * u[p] * v[p].conj();
        let hi = op.h_inv[p];
        let mut hh = Complex64::default();
        let mut vh = Complex64::default();
        for quad in QUADRANTS {
            let du = op.covariant_differences(u, p, quad);
            let dv = op.covariant_differences(v, p, quad);
            for a in 0..2 {
                for b in 0..2 {
                    hh += s.horizontal[(a, b)] * du[b] * dv[a].conj();
                }
            }
            let hdu = [hi[0] * du[0] + hi[1] * du[1], hi[2] * du[0] + hi[3] * du[1]];
            let hdv = [hi[0] * dv[0] + hi[1] * dv[1], hi[2] * dv[0] + hi[3] * dv[1]];
            for b in 0..2 {
                let (q, t) = op.step(p, b, quad[b]);
                // the link of an edge depends on the connection at both ends
                let rate = 0.5 * (s.mixed[b] + self.sites[q].mixed[b]);
                if rate == 0.0 {
                    continue;
                }
                let tu = t * u[q];
                let tv = t * v[q];
                vh += rate * (-I * tu * hdv[b].conj() + I * tv.conj() * hdu[b]);
            }
        }
        op.mass[p] * (vv + 0.25 * (hh + vh))
    }

    /// `Σ ρ ġ(∇u, ∇v)`.
    pub fn metric_term(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        (0..self.sites.len()).map(|p| self.metric_density(u, v, p)).sum()
    }

    /// `Σ ρ₀ (Δ̇u) conj(v)`.
    pub fn pairing(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let su = self.op.stiffness.matvec(u);
        let mut total = Complex64::default();
        for p in 0..self.sites.len() {
            let (qv, qh) = self.op.site_parts(u, v, p);
            let tau = self.sites[p].tau;
            total += -self.metric_density(u, v, p) + tau * (qv + qh) - tau * su[p] * v[p].conj();
        }
        total
    }

    /// Matrix `M_ij = Σ ρ [−ġ(∇φ_j, ∇φ_i) + τ(⟨∇φ_j, ∇φ_i⟩ − λ φ_j conj(φ_i))]`
    /// over a set of `ρ`-orthonormal eigenvectors with common eigenvalue `λ`.
    pub fn cluster_matrix(&self, lambda: f64, vectors: &[&[Complex64]]) -> DMatrix<Complex64> {
        let k = vectors.len();
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let (u, v) = (vectors[j], vectors[i]);
                let mut acc = Complex64::default();
                for p in 0..self.sites.len() {
                    let (qv, qh) = self.op.site_parts(u, v, p);
                    let mass = self.op.mass[p] * u[p] * v[p].conj();
                    acc += -self.metric_density(u, v, p) + self.sites[p].tau * (qv + qh - lambda * mass);
                }
                m[(i, j)] = acc;
            }
        }
        m
    }

    /// Derivative of a simple eigenvalue `λ` with eigenvector `φ`.
    pub fn eigenvalue_rate(&self, lambda: f64, phi: &[Complex64]) -> f64 {
        let num = self.cluster_matrix(lambda, &[phi])[(0, 0)].re;
        num / self.op.mass_inner(phi, phi).re
    }
}

fn velocity_of(metric: &InvariantMetric, kind: PathKind) -> Result<Vec<DMatrix<f64>>> {
    Ok(PerturbationPath::new(metric.clone(), kind)?.velocity())
}

/// Indices of the eigenpairs sharing a cluster with `pairs[index]`.
fn cluster_of(pairs: &[EigenPair], index: usize) -> Vec<usize> {
    let id = pairs[index].cluster_id;
    (0..pairs.len()).filter(|&k| pairs[k].cluster_id == id).collect()
}

/// First-order change of the eigenvalue `pairs[index].lambda` along `g_dot`.
/// Fails for eigenvalues in a cluster of size greater than one.
pub fn lambda_dot_general(
    metric: &InvariantMetric,
    op: &WeightOperator,
    pairs: &[EigenPair],
    index: usize,
    g_dot: &[DMatrix<f64>],
) -> Result<f64> {
    let cluster = cluster_of(pairs, index);
    if cluster.len() > 1 {
        return Err(Error::DegenerateCluster {
            lambda: pairs[index].lambda,
            multiplicity: cluster.len(),
        });
    }
    let pair = &pairs[index];
    Ok(Variation::new(metric, op, g_dot)?.eigenvalue_rate(pair.lambda, &pair.vector))
}

/// Derivatives (ascending) of the branches emanating from the cluster that
/// contains `pairs[index]`.
pub fn lambda_dot_cluster(
    metric: &InvariantMetric,
    op: &WeightOperator,
    pairs: &[EigenPair],
    index: usize,
    g_dot: &[DMatrix<f64>],
) -> Result<Vec<f64>> {
    let cluster = cluster_of(pairs, index);
    let lambda = cluster.iter().map(|&k| pairs[k].lambda).sum::<f64>() / cluster.len() as f64;
    let vectors: Vec<&[Complex64]> = cluster.iter().map(|&k| pairs[k].vector.as_slice()).collect();
    let m = Variation::new(metric, op, g_dot)?.cluster_matrix(lambda, &vectors);
    let (values, _) = crate::eigen::lanczos::hermitian_eigen(crate::eigen::lanczos::hermitian_part(&m), false);
    Ok(values)
}

/// `Σ ρ₀ (Δ̇u)·v` (real part of the Hermitian pairing) along a velocity `ġ`.
pub fn laplacian_variation_pairing(
    metric: &InvariantMetric,
    alpha: &Weight,
    u: &[Complex64],
    v: &[Complex64],
    g_dot: &[DMatrix<f64>],
) -> Result<f64> {
    let op = assemble_weight_operator(metric, alpha)?;
    check_fields(&op, u, v)?;
    Ok(Variation::new(metric, &op, g_dot)?.pairing(u, v).re)
}

fn check_fields(op: &WeightOperator, u: &[Complex64], v: &[Complex64]) -> Result<()> {
    for len in [u.len(), v.len()] {
        if len != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: len,
            });
        }
    }
    Ok(())
}

/// Per-site vertical and horizontal parts of `⟨∇u, ∇v⟩` and `(Su)·conj(v)`.
fn split_parts(op: &WeightOperator, u: &[Complex64], v: &[Complex64]) -> Vec<(f64, f64, f64)> {
    let su = op.stiffness.matvec(u);
    (0..op.dim())
        .map(|p| {
            let (qv, qh) = op.site_parts(u, v, p);
            (qv.re, qh.re, (su[p] * v[p].conj()).re)
        })
        .collect()
}

/// `∫(Δ̇u)·v` for the split rescaling `G ↦ a·G`, `h ↦ b·h`, evaluated as
/// half of `−∫(Δu)v (jȧ + kḃ) + ∫⟨∇ⱽu, ∇ⱽv⟩((j−2)ȧ + kḃ) + ∫⟨∇ᴴu, ∇ᴴv⟩(jȧ + (k−2)ḃ)`
/// with `j = d` and `k = 2`.
pub fn split_rescale_pairing(
    metric: &InvariantMetric,
    alpha: &Weight,
    u: &[Complex64],
    v: &[Complex64],
    a_dot: &[f64],
    b_dot: &[f64],
) -> Result<f64> {
    let op = assemble_weight_operator(metric, alpha)?;
    check_fields(&op, u, v)?;
    let j = metric.fiber_dim() as f64;
    let k = 2.0;
    let total: f64 = split_parts(&op, u, v)
        .into_iter()
        .enumerate()
        .map(|(p, (qv, qh, lap))| {
            let (a, b) = (a_dot[p], b_dot[p]);
            -lap * (j * a + k * b) + qv * ((j - 2.0) * a + k * b) + qh * (j * a + (k - 2.0) * b)
        })
        .sum();
    Ok(0.5 * total)
}

/// `∫(Δ̇u)·v` for the volume-compatible rescaling `ḃ = f`,
/// `ȧ = −(n−d−2)/d·f`: `−∫f (Δu)v + (n−2)/d ∫f ⟨∇ⱽu, ∇ⱽv⟩`.
pub fn invariant_rescale_pairing(
    metric: &InvariantMetric,
    alpha: &Weight,
    u: &[Complex64],
    v: &[Complex64],
    f: &[f64],
) -> Result<f64> {
    let op = assemble_weight_operator(metric, alpha)?;
    check_fields(&op, u, v)?;
    let d = metric.fiber_dim() as f64;
    let c = (d + 2.0 - 2.0) / d;
    Ok(split_parts(&op, u, v)
        .into_iter()
        .zip(f)
        .map(|((qv, _, lap), f)| f * (c * qv - lap))
        .sum())
}

/// `−∫((Xu)(Yv) + (Yu)(Xv))` for the horizontal lift `X` of a base field and
/// `Y = ∂_j`.
pub fn mixed_xy_pairing(
    metric: &InvariantMetric,
    alpha: &Weight,
    u: &[Complex64],
    v: &[Complex64],
    x: &[[f64; 2]],
    j: usize,
) -> Result<f64> {
    let op = assemble_weight_operator(metric, alpha)?;
    check_fields(&op, u, v)?;
    let g_dot = velocity_of(metric, PathKind::MixedXY { x: x.to_vec(), j })?;
    Ok(-Variation::new(metric, &op, &g_dot)?.metric_term(u, v).re)
}

/// Central difference of `t ↦ Σ ρ₀ (Δ_t u)·v` along a path.
pub fn fd_pairing(path: &PerturbationPath, alpha: &Weight, u: &[Complex64], v: &[Complex64], step: f64) -> Result<f64> {
    let base = assemble_weight_operator(&path.base, alpha)?;
    check_fields(&base, u, v)?;
    let value = |t: f64| -> Result<f64> {
        let op = assemble_weight_operator(&path.evaluate(t)?, alpha)?;
        let au = op.apply(u)?;
        Ok(base.mass_inner(&au, v).re)
    };
    Ok((value(step)? - value(-step)?) / (2.0 * step))
}

/// One row of the pairing identity check at eigenfunctions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhlenbeckRow {
    /// Finite difference of `∫(Δ̇u)·v`.
    pub lhs: f64,
    /// `2∫f (u·v)(b − λ)` with `b = (n+2)/d · αᵀG⁻¹α`.
    pub rhs_paper: f64,
    /// `∫f (u·v)(c_fit·αᵀG⁻¹α − λ)`.
    pub rhs_refit: f64,
    /// `∫f (u·v) αᵀG⁻¹α`.
    pub vertical: f64,
    /// `∫f (u·v)`.
    pub mass: f64,
    /// Constant that makes this row exact on its own.
    pub c_row: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhlenbeckCheck {
    pub rows: Vec<UhlenbeckRow>,
    pub c_fit: f64,
    /// Standard deviation of `c_row` across the batch.
    pub c_std: f64,
    pub paper_constant: f64,
}

/// Compares finite differences of `∫(Δ̇u)·v` along the volume-compatible
/// rescalings `ḃ = f` with the closed form `∫f (u·v)(c·αᵀG⁻¹α − λ)` and
/// fits `c` by least squares over the batch of `f`s. When the batch gives no
/// information about `c` (every vertical integral vanishes) `c_fit` is zero.
pub fn uhlenbeck_pairing_check(
    metric: &InvariantMetric,
    alpha: &Weight,
    lambda: f64,
    u: &[Complex64],
    v: &[Complex64],
    fs: &[Vec<f64>],
    step: f64,
) -> Result<UhlenbeckCheck> {
    let op = assemble_weight_operator(metric, alpha)?;
    check_fields(&op, u, v)?;
    let d = metric.fiber_dim() as f64;
    let paper_constant = (d + 2.0 + 2.0) / d;
    let mut rows = Vec::with_capacity(fs.len());
    for f in fs {
        let path = PerturbationPath::invariant_rescale(metric.clone(), f)?;
        let lhs = fd_pairing(&path, alpha, u, v, step)?;
        let mut vertical = 0.0;
        let mut mass = 0.0;
        for p in 0..op.dim() {
            let uv = op.mass[p] * (u[p] * v[p].conj()).re * f[p];
            vertical += uv * op.potential[p];
            mass += uv;
        }
        rows.push(UhlenbeckRow {
            lhs,
            rhs_paper: 2.0 * (paper_constant * vertical - lambda * mass),
            rhs_refit: 0.0,
            vertical,
            mass,
            c_row: (lhs + lambda * mass) / vertical,
        });
    }
    let den: f64 = rows.iter().map(|r| r.vertical * r.vertical).sum();
    let c_fit = if den > 0.0 {
        rows.iter().map(|r| r.vertical * (r.lhs + lambda * r.mass)).sum::<f64>() / den
    } else {
        0.0
    };
    for r in rows.iter_mut() {
        r.rhs_refit = c_fit * r.vertical - lambda * r.mass;
    }
    let c_std = if rows.len() > 1 {
        let mean = rows.iter().map(|r| r.c_row).sum::<f64>() / rows.len() as f64;
        (rows.iter().map(|r| (r.c_row - mean).powi(2)).sum::<f64>() / (rows.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(UhlenbeckCheck {
        rows,
        c_fit,
        c_std,
        paper_constant,
    })
}

/// A closed-form derivative next to its finite-difference estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationReport {
    pub formula_id: String,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    /// `abs_err / max(1, |analytic|)`.
    pub rel_err: f64,
    pub step: f64,
}

impl VariationReport {
    pub fn new(formula_id: impl Into<String>, analytic: f64, numeric: f64, step: f64) -> Self {
        let abs_err = (analytic - numeric).abs();
        Self {
            formula_id: formula_id.into(),
            analytic,
            numeric,
            abs_err,
            rel_err: abs_err / analytic.abs().max(1.0),
            step,
        }
    }
}

/// Settings for finite differences of eigenvalue branches.
#[derive(Clone, Debug)]
pub struct BranchOptions {
    /// Two step sizes; the second should be half the first for the
    /// Richardson combination to cancel the `t²` term.
    pub steps: [f64; 2],
    /// Eigenpairs computed at each perturbed metric.
    pub m: usize,
    /// Match degenerate branches by eigenvector overlap; without it a
    /// degenerate cluster is an error.
    pub overlap_matching: bool,
    pub solver: SolverOptions,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            steps: [1e-3, 5e-4],
            m: 6,
            overlap_matching: false,
            solver: SolverOptions {
                tol: 1e-10,
                ..Default::default()
            },
        }
    }
}

/// Eigenpairs at `g_t` that continue the reference cluster: the `k` pairs
/// with the largest overlap with the reference vectors.
fn follow_cluster(
    path: &PerturbationPath,
    alpha: &Weight,
    reference: &[&EigenPair],
    base_mass: &[f64],
    m: usize,
    solver: &SolverOptions,
    guess: &[Vec<Complex64>],
    t: f64,
) -> Result<Vec<EigenPair>> {
    let op = assemble_weight_operator(&path.evaluate(t)?, alpha)?;
    let pairs = lowest_eigenpairs_near(&op, m, solver, guess)?;
    let overlap = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).zip(base_mass).map(|((x, y), w)| x * y.conj() * *w).sum()
    };
    let mut scored: Vec<(f64, usize)> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (reference.iter().map(|r| overlap(&p.vector, &r.vector).norm_sqr()).sum(), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = scored.iter().take(reference.len()).map(|s| s.1).collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| pairs[i].clone()).collect())
}

/// Pairs two sets of eigenvectors greedily by largest overlap.
fn match_by_overlap(a: &[EigenPair], b: &[EigenPair], mass: &[f64]) -> Vec<usize> {
    let k = a.len();
    let mut scores = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let s: Complex64 = a[i].vector.iter().zip(&b[j].vector).zip(mass).map(|((x, y), w)| x * y.conj() * *w).sum();
            scores.push((s.norm(), i, j));
        }
    }
    scores.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut assignment = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for (_, i, j) in scores {
        if assignment[i] == usize::MAX && !used[j] {
            assignment[i] = j;
            used[j] = true;
        }
    }
    assignment
}

/// Finite-difference derivatives (ascending) of the eigenvalue branches
/// through the cluster containing `pairs[index]`, Richardson-extrapolated
/// over the two steps.
pub fn fd_branch_derivatives(
    path: &PerturbationPath,
    alpha: &Weight,
    pairs: &[EigenPair],
    index: usize,
    opts: &BranchOptions,
) -> Result<Vec<f64>> {
    let cluster = cluster_of(pairs, index);
    if cluster.len() > 1 && !opts.overlap_matching {
        return Err(Error::DegenerateCluster {
            lambda: pairs[index].lambda,
            multiplicity: cluster.len(),
        });
    }
    let reference: Vec<&EigenPair> = cluster.iter().map(|&k| &pairs[k]).collect();
    let m = opts.m.max(cluster.last().unwrap() + 3);
    let base_mass = assemble_weight_operator(&path.base, alpha)?.mass;
    let guess: Vec<Vec<Complex64>> = pairs.iter().take(m).map(|p| p.vector.clone()).collect();
    let mut estimates = Vec::new();
    for &h in &opts.steps {
        let plus = follow_cluster(path, alpha, &reference, &base_mass, m, &opts.solver, &guess, h)?;
        let minus = follow_cluster(path, alpha, &reference, &base_mass, m, &opts.solver, &guess, -h)?;
        let assignment = match_by_overlap(&plus, &minus, &base_mass);
        let mut d: Vec<f64> = (0..plus.len()).map(|i| (plus[i].lambda - minus[assignment[i]].lambda) / (2.0 * h)).collect();
        d.sort_by(f64::total_cmp);
        estimates.push(d);
    }
    let (h1, h2) = (opts.steps[0], opts.steps[1]);
    Ok(estimates[0]
        .iter()
        .zip(&estimates[1])
        .map(|(d1, d2)| (h1 * h1 * d2 - h2 * h2 * d1) / (h1 * h1 - h2 * h2))
        .collect())
}

/// Checks the eigenvalue velocity of `pairs[index]` along `path` against
/// finite differences. Degenerate clusters compare every branch and report
/// the worst one.
pub fn check_eigenvalue_velocity(
    formula_id: &str,
    path: &PerturbationPath,
    alpha: &Weight,
    pairs: &[EigenPair],
    index: usize,
    opts: &BranchOptions,
) -> Result<VariationReport> {
    let op = assemble_weight_operator(&path.base, alpha)?;
    let g_dot = path.velocity();
    let numeric = fd_branch_derivatives(path, alpha, pairs, index, opts)?;
    let analytic = if numeric.len() == 1 {
        vec![lambda_dot_general(&path.base, &op, pairs, index, &g_dot)?]
    } else {
        lambda_dot_cluster(&path.base, &op, pairs, index, &g_dot)?
    };
    let mut worst = VariationReport::new(formula_id, analytic[0], numeric[0], opts.steps[0]);
    for (a, n) in analytic.iter().zip(&numeric).skip(1) {
        let r = VariationReport::new(formula_id, *a, *n, opts.steps[0]);
        if r.rel_err > worst.rel_err {
            worst = r;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::lowest_eigenpairs;
    use crate::geometry::{sample_random_metric, BundleConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn zero_velocity_gives_zero() {
        let m = sample_random_metric(BundleConfig::new(1, 1, 8).unwrap(), 1, 2, 0.2).unwrap();
        let zero = vec![DMatrix::zeros(3, 3); 64];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (u, v) = (random_field(&mut rng, 64), random_field(&mut rng, 64));
        assert_eq!(laplacian_variation_pairing(&m, &Weight::scalar(2), &u, &v, &zero).unwrap(), 0.0);
    }

    #[test]
    fn pairing_matches_reassembly_for_general_velocity() {
        let config = BundleConfig::new(1, 1, 10).unwrap();
        let m = sample_random_metric(config, 4, 2, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut g_dot = vec![0.0; 100 * 9];
        for p in 0..100 {
            for r in 0..3 {
                for c in r..3 {
                    let x = rng.gen_range(-0.3..0.3);
                    g_dot[p * 9 + r * 3 + c] = x;
                    g_dot[p * 9 + c * 3 + r] = x;
                }
            }
        }
        let path = PerturbationPath::new(m.clone(), PathKind::GeneralSymmetric { g_dot }).unwrap();
        let alpha = Weight::scalar(2);
        for _ in 0..3 {
            let (u, v) = (random_field(&mut rng, 100), random_field(&mut rng, 100));
            let analytic = laplacian_variation_pairing(&m, &alpha, &u, &v, &path.velocity()).unwrap();
            let numeric = fd_pairing(&path, &alpha, &u, &v, 1e-4).unwrap();
            assert!((analytic - numeric).abs() <= 1e-5 * analytic.abs().max(1.0), "{analytic} vs {numeric}");
        }
    }

    #[test]
    fn two_rescaling_formulas_agree() {
        let config = BundleConfig::new(2, 0, 8).unwrap();
        let m = sample_random_metric(config, 8, 2, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // n = 4, d = 2: ȧ = −(n−d−2)/d·f = 0
        let a_dot = vec![0.0; 64];
        let alpha = Weight::new(vec![1, 2]);
        let (u, v) = (random_field(&mut rng, 64), random_field(&mut rng, 64));
        let three = split_rescale_pairing(&m, &alpha, &u, &v, &a_dot, &f).unwrap();
        let two = invariant_rescale_pairing(&m, &alpha, &u, &v, &f).unwrap();
        assert!((three - two).abs() <= 1e-12 * three.abs().max(1.0));
    }

    #[test]
    fn mixed_xy_is_symmetric_and_vanishes_at_weight_zero() {
        let config = BundleConfig::new(1, 0, 8).unwrap();
        let m = sample_random_metric(config, 3, 2, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<[f64; 2]> = (0..64).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let (u, v) = (random_field(&mut rng, 64), random_field(&mut rng, 64));
        let a = mixed_xy_pairing(&m, &Weight::scalar(3), &u, &v, &x, 0).unwrap();
        let b = mixed_xy_pairing(&m, &Weight::scalar(3), &v, &u, &x, 0).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        assert!(mixed_xy_pairing(&m, &Weight::scalar(0), &u, &v, &x, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rank_one_vertical_velocity_on_flat_metric() {
        // λ₀ = α² = 4, n = 3: λ̇ = −λ₀ + n·α² = 8
        let metric = InvariantMetric::flat(BundleConfig::new(1, 0, 12).unwrap());
        let alpha = Weight::scalar(2);
        let op = assemble_weight_operator(&metric, &alpha).unwrap();
        let pairs = lowest_eigenpairs(&op, 3, 1e-10).unwrap();
        let path = PerturbationPath::new(metric.clone(), PathKind::RankOneVertical { j: 0 }).unwrap();
        let rate = lambda_dot_general(&metric, &op, &pairs, 0, &path.velocity()).unwrap();
        assert!((rate - 8.0).abs() < 1e-10);
        let report = check_eigenvalue_velocity("rank_one_vertical", &path, &alpha, &pairs, 0, &BranchOptions::default()).unwrap();
        assert!(report.rel_err < 1e-6, "{report:?}");
    }

    #[test]
    fn degenerate_cluster_needs_overlap_matching() {
        let metric = InvariantMetric::flat(BundleConfig::new(1, 0, 8).unwrap());
        let alpha = Weight::scalar(1);
        let op = assemble_weight_operator(&metric, &alpha).unwrap();
        let pairs = lowest_eigenpairs(&op, 6, 1e-10).unwrap();
        let path = PerturbationPath::new(metric.clone(), PathKind::RankOneVertical { j: 0 }).unwrap();
        assert!(matches!(
            lambda_dot_general(&metric, &op, &pairs, 1, &path.velocity()),
            Err(Error::DegenerateCluster { multiplicity: 4, .. })
        ));
        let opts = BranchOptions::default();
        assert!(fd_branch_derivatives(&path, &alpha, &pairs, 1, &opts).is_err());
        let report = check_eigenvalue_velocity(
            "rank_one_vertical",
            &path,
            &alpha,
            &pairs,
            1,
            &BranchOptions {
                overlap_matching: true,
                ..opts
            },
        )
        .unwrap();
        assert!(report.rel_err < 1e-6, "{report:?}");
    }
}
