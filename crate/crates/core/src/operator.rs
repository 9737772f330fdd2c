//! Discrete weight-space Laplacians.
//!
//! Sections of weight `α` are written `w = e^{−iα·θ}·φ(x, y)`, which turns
//! `Δ_{g,α}` into a magnetic Schrödinger operator on the base,
//!
//! ```text
//!     Q(φ) = Σ_p ρ_p [ V_p |φ_p|² + ¼ Σ_q Σ_ab (h⁻¹)_ab · conj(D^q_a φ)(p) · D^q_b φ(p) ]
//! ```
//!
//! with `V = αᵀG⁻¹α` and lumped mass `ρ_p = √(det G·det h)·Δ²`. The inner sum
//! runs over the four quadrants `q` of one-sided covariant differences
//! `D^±_a φ(p) = ±(T φ(p ± â) − φ(p)) / Δ`, where `T` transports along the edge
//! by its link variable `U = exp(iΔ·½(a_a(p) + a_a(p + â)))`, `a_a = Σ_j α_j A^j_a`.
//! The quadrant average gives a symmetric 9-point stencil that is second-order
//! accurate for smooth variable coefficients. For a twisted circle bundle the
//! links crossing the `x = 2π` seam carry the extra transition phase
//! `exp(−iαe·y)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{BundleConfig, InvariantMetric, Weight};
use crate::sparse::CsrMatrix;

/// Assembled operator `ρ⁻¹S` together with its ingredients.
#[derive(Clone, Debug)]
pub struct WeightOperator {
    pub config: BundleConfig,
    pub alpha: Weight,
    /// Hermitian stiffness matrix `S`.
    pub stiffness: CsrMatrix,
    /// Lumped mass `ρ_p`.
    pub mass: Vec<f64>,
    /// Vertical potential `αᵀG⁻¹α`.
    pub potential: Vec<f64>,
    /// Inverse horizontal metric, row-major `2 × 2` per point.
    pub h_inv: Vec<[f64; 4]>,
    /// Link variables `[U_x(p), U_y(p)]` on the edges leaving `p`.
    pub links: Vec<[Complex64; 2]>,
    /// True when every matrix entry is real (weight zero).
    pub is_real: bool,
}

/// Hermitian pairing split into vertical and horizontal contributions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFormValue {
    pub value: Complex64,
    pub vertical: Complex64,
    pub horizontal: Complex64,
}

/// Neighbors of `p` in the `+x` and `+y` directions.
#[inline]
pub fn forward_neighbors(config: &BundleConfig, p: usize) -> [usize; 2] {
    let n = config.resolution;
    let (i, j) = config.coords(p);
    [config.index((i + 1) % n, j), config.index(i, (j + 1) % n)]
}

/// Neighbor of `p` one step along `axis` (0 = x, 1 = y), forwards or backwards.
#[inline]
pub fn neighbor(config: &BundleConfig, p: usize, axis: usize, forward: bool) -> usize {
    let n = config.resolution;
    let (i, j) = config.coords(p);
    let step = |k: usize| if forward { (k + 1) % n } else { (k + n - 1) % n };
    if axis == 0 {
        config.index(step(i), j)
    } else {
        config.index(i, step(j))
    }
}

/// Direction choices `[x forward, y forward]` of the four difference quadrants.
pub const QUADRANTS: [[bool; 2]; 4] = [[true, true], [false, true], [true, false], [false, false]];

/// Extra phase on the x-edge from `(N−1, j)` to `(0, j)`: a section satisfies
/// `φ(x + 2π, y) = exp(−iα·e·y)·φ(x, y)` in the gauge used for assembly.
pub fn x_wrap_cocycle(config: &BundleConfig, alpha: &Weight, j: usize) -> Complex64 {
    if config.euler == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let twist = alpha.0[0] as f64 * config.euler as f64;
    Complex64::from_polar(1.0, -twist * j as f64 * config.spacing())
}

/// `Σ_j α_j A^j_a` at every grid point, background included.
fn weighted_connection(metric: &InvariantMetric, alpha: &Weight) -> Vec<[f64; 2]> {
    let a = alpha.as_f64();
    (0..metric.config.num_points())
        .map(|p| {
            let conn = metric.full_connection_at(p);
            let mut out = [0.0; 2];
            for (jj, aj) in a.iter().enumerate() {
                out[0] += aj * conn[(jj, 0)];
                out[1] += aj * conn[(jj, 1)];
            }
            out
        })
        .collect()
}

/// Link variables on the two edges leaving every grid point, with the
/// trapezoid rule for the edge integral of the connection.
pub fn link_variables(metric: &InvariantMetric, alpha: &Weight) -> Vec<[Complex64; 2]> {
    let config = metric.config;
    let dx = config.spacing();
    let n = config.resolution;
    let a = weighted_connection(metric, alpha);
    (0..config.num_points())
        .map(|p| {
            let [px, py] = forward_neighbors(&config, p);
            // the background only has a y-component and is constant along y-edges
            let mut ux = Complex64::from_polar(1.0, 0.5 * dx * (a[p][0] + a[px][0]));
            let (i, j) = config.coords(p);
            if i == n - 1 {
                ux *= x_wrap_cocycle(&config, alpha, j);
            }
            let uy = Complex64::from_polar(1.0, 0.5 * dx * (a[p][1] + a[py][1]));
            [ux, uy]
        })
        .collect()
}

impl WeightOperator {
    pub fn dim(&self) -> usize {
        self.config.num_points()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        }
    }

    /// Neighbor and transport factor for the step from `p` along `axis`, so
    /// that the one-sided difference is `±(T·φ(q) − φ(p))/Δ`.
    #[inline]
    pub fn step(&self, p: usize, axis: usize, forward: bool) -> (usize, Complex64) {
        let q = neighbor(&self.config, p, axis, forward);
        if forward {
            (q, self.links[p][axis])
        } else {
            (q, self.links[q][axis].conj())
        }
    }

    /// Covariant one-sided differences `(D_x φ, D_y φ)` at `p` in quadrant `quad`.
    #[inline]
    pub fn covariant_differences(&self, phi: &[Complex64], p: usize, quad: [bool; 2]) -> [Complex64; 2] {
        let inv = 1.0 / self.config.spacing();
        let mut out = [Complex64::default(); 2];
        for (axis, d) in out.iter_mut().enumerate() {
            let (q, t) = self.step(p, axis, quad[axis]);
            let sign = if quad[axis] { inv } else { -inv };
            *d = (t * phi[q] - phi[p]) * sign;
        }
        out
    }

    /// `ρ⁻¹Sφ`.
    pub fn apply(&self, phi: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_dim(phi.len())?;
        let mut y = self.stiffness.matvec(phi);
        for (v, m) in y.iter_mut().zip(&self.mass) {
            *v /= *m;
        }
        Ok(y)
    }

    /// `ρ^{-1/2} S ρ^{-1/2} x`, the symmetrized operator.
    pub fn apply_symmetrized_into(&self, x: &[Complex64], scratch: &mut [Complex64], y: &mut [Complex64]) {
        for ((s, v), m) in scratch.iter_mut().zip(x).zip(&self.mass) {
            *s = v / m.sqrt();
        }
        self.stiffness.matvec_into(scratch, y);
        for (v, m) in y.iter_mut().zip(&self.mass) {
            *v /= m.sqrt();
        }
    }

    /// `ρ`-weighted inner product `Σ ρ φ conj(ψ)`.
    pub fn mass_inner(&self, phi: &[Complex64], psi: &[Complex64]) -> Complex64 {
        phi.iter().zip(psi).zip(&self.mass).map(|((a, b), m)| a * b.conj() * *m).sum()
    }

    /// Contribution of the cell at `p` to [`Self::quadratic_form`], split
    /// into vertical and horizontal parts.
    #[inline]
    pub fn site_parts(&self, phi: &[Complex64], psi: &[Complex64], p: usize) -> (Complex64, Complex64) {
        let rho = self.mass[p];
        let vertical = rho * self.potential[p] * phi[p] * psi[p].conj();
        let hi = self.h_inv[p];
        let mut acc = Complex64::default();
        for quad in QUADRANTS {
            let dphi = self.covariant_differences(phi, p, quad);
            let dpsi = self.covariant_differences(psi, p, quad);
            for a in 0..2 {
                for b in 0..2 {
                    acc += hi[2 * a + b] * dphi[b] * dpsi[a].conj();
                }
            }
        }
        acc *= 0.25;
        (vertical, rho * acc)
    }

    /// Pairing `Σ_p ρ_p [V φ conj(ψ) + ¼ Σ_q Σ_ab (h⁻¹)_ab D^q_b φ conj(D^q_a ψ)] = ψ†Sφ`
    /// computed site by site.
    pub fn quadratic_form(&self, phi: &[Complex64], psi: &[Complex64]) -> Result<QuadraticFormValue> {
        self.check_dim(phi.len())?;
        self.check_dim(psi.len())?;
        let mut vertical = Complex64::default();
        let mut horizontal = Complex64::default();
        for p in 0..self.dim() {
            let (v, h) = self.site_parts(phi, psi, p);
            vertical += v;
            horizontal += h;
        }
        Ok(QuadraticFormValue {
            value: vertical + horizontal,
            vertical,
            horizontal,
        })
    }

    /// Dense symmetrized matrix `ρ^{-1/2} S ρ^{-1/2}`.
    pub fn symmetrized_dense(&self) -> DMatrix<Complex64> {
        let mut m = self.stiffness.to_dense();
        let s: Vec<f64> = self.mass.iter().map(|v| 1.0 / v.sqrt()).collect();
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                m[(r, c)] *= s[r] * s[c];
            }
        }
        m
    }

    /// Writes the stiffness matrix as `row col re im` lines.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> Result<()> {
        for (r, c, v) in self.stiffness.triplets() {
            writeln!(out, "{r} {c} {:.16e} {:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// JSON header describing the triplet export, with an FNV-1a checksum
    /// of the triplet text.
    pub fn triplet_header(&self) -> Result<String> {
        let mut body = Vec::new();
        self.write_triplets(&mut body)?;
        let header = json!({
            "N": self.config.resolution,
            "alpha": self.alpha.0,
            "e": self.config.euler,
            "nnz": self.stiffness.nnz(),
            "checksum": format!("fnv1a64:{:016x}", fnv1a64(&body)),
        });
        Ok(serde_json::to_string(&header)?)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Assembles `Δ_{g,α}` for the given metric and weight.
pub fn assemble_weight_operator(metric: &InvariantMetric, alpha: &Weight) -> Result<WeightOperator> {
    let config = metric.config;
    let d = config.fiber_dim;
    if config.euler != 0 && d != 1 {
        return Err(Error::Unsupported(format!(
            "nontrivial bundles (euler = {}) are only supported for a circle fiber, got d = {d}",
            config.euler
        )));
    }
    if alpha.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: alpha.dim(),
        });
    }
    let np = config.num_points();
    let dx = config.spacing();
    let inv = 1.0 / dx;
    let a = DVector::from_vec(alpha.as_f64());

    let mut mass = Vec::with_capacity(np);
    let mut potential = Vec::with_capacity(np);
    let mut h_inv = Vec::with_capacity(np);
    for p in 0..np {
        let g = metric.fiber_gram_at(p);
        let h = metric.horizontal_at(p);
        let g_inv = g.clone().try_inverse().ok_or_else(|| singular(&config, p))?;
        let hi = h.try_inverse().ok_or_else(|| singular(&config, p))?;
        mass.push((g.determinant() * h.determinant()).sqrt() * dx * dx);
        potential.push((a.transpose() * g_inv * &a)[(0, 0)]);
        // symmetric by construction; average out round-off
        let off = 0.5 * (hi[(0, 1)] + hi[(1, 0)]);
        h_inv.push([hi[(0, 0)], off, off, hi[(1, 1)]]);
    }
    let links = link_variables(metric, alpha);

    let mut triplets = Vec::with_capacity(np * 13);
    let zero = Complex64::default();
    for p in 0..np {
        let rho = mass[p];
        let hi = h_inv[p];
        for quad in QUADRANTS {
            let mut nodes = [p; 3];
            // coef[a][k]: coefficient of φ(nodes[k]) in D_a φ(p)
            let mut coef = [[zero; 3]; 2];
            for axis in 0..2 {
                let q = neighbor(&config, p, axis, quad[axis]);
                let t = if quad[axis] { links[p][axis] } else { links[q][axis].conj() };
                let sign = if quad[axis] { inv } else { -inv };
                nodes[axis + 1] = q;
                coef[axis][0] = Complex64::new(-sign, 0.0);
                coef[axis][axis + 1] = t * sign;
            }
            for k in 0..3 {
                for l in 0..3 {
                    if nodes[k] > nodes[l] {
                        continue;
                    }
                    let mut v = zero;
                    for aa in 0..2 {
                        for bb in 0..2 {
                            v += hi[2 * aa + bb] * coef[aa][k].conj() * coef[bb][l];
                        }
                    }
                    v *= 0.25 * rho;
                    if nodes[k] == nodes[l] {
                        v = Complex64::new(v.re, 0.0);
                    }
                    if v != zero {
                        triplets.push((nodes[k], nodes[l], v));
                    }
                }
            }
        }
        triplets.push((p, p, Complex64::new(rho * potential[p], 0.0)));
    }
    let upper = CsrMatrix::from_triplets(np, triplets);
    let mut full = Vec::with_capacity(2 * upper.nnz());
    for (r, c, v) in upper.triplets() {
        full.push((r, c, v));
        if r != c {
            full.push((c, r, v.conj()));
        }
    }
    let stiffness = CsrMatrix::from_triplets(np, full);
    let is_real = stiffness.values.iter().all(|v| v.im == 0.0);
    Ok(WeightOperator {
        config,
        alpha: alpha.clone(),
        stiffness,
        mass,
        potential,
        h_inv,
        links,
        is_real,
    })
}

fn singular(config: &BundleConfig, p: usize) -> Error {
    let (i, j) = config.coords(p);
    Error::NotPositiveDefinite {
        i,
        j,
        block: "metric",
        min_eigenvalue: 0.0,
        floor: 0.0,
    }
}

/// `Q(φ, ψ)` for the operator of `(metric, alpha)`.
pub fn quadratic_form(
    metric: &InvariantMetric,
    alpha: &Weight,
    phi: &[Complex64],
    psi: &[Complex64],
) -> Result<QuadraticFormValue> {
    assemble_weight_operator(metric, alpha)?.quadratic_form(phi, psi)
}

/// Solves `½(δ_i + δ_{i+1}) = c_i` cyclically, returning the solution without
/// an alternating component. For even length `c` must have no alternating
/// component itself.
fn solve_edge_average(c: &[f64]) -> Option<Vec<f64>> {
    let n = c.len();
    let mut delta = vec![0.0; n + 1];
    for i in 0..n {
        delta[i + 1] = 2.0 * c[i] - delta[i];
    }
    let wrap = delta.pop().unwrap();
    let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let alt = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
    if n % 2 == 1 {
        // δ₀ = wrap/2 closes the cycle
        for (i, d) in delta.iter_mut().enumerate() {
            *d += alt(i) * 0.5 * wrap;
        }
    } else {
        if wrap.abs() > 1e-9 * scale * n as f64 {
            return None;
        }
        let mean = delta.iter().enumerate().map(|(i, d)| alt(i) * d).sum::<f64>() / n as f64;
        for (i, d) in delta.iter_mut().enumerate() {
            *d -= alt(i) * mean;
        }
    }
    Some(delta)
}

/// Changes the connection of fiber `j` so that every link variable picks up
/// the phase of the discrete gradient of `χ`: the trapezoid average of the
/// change along each edge is `−(χ(p + â) − χ(p))/Δ`. The operator of the result
/// is conjugate to the original by the diagonal phase `φ ↦ e^{iα_jχ}·φ`.
///
/// On an even grid the node-sampled connection cannot represent a gradient
/// whose restriction to some grid line has a `(−1)^i` component, so such `χ`
/// are rejected.
pub fn gauge_transform(metric: &InvariantMetric, j: usize, chi: &[f64]) -> Result<InvariantMetric> {
    let config = metric.config;
    let d = config.fiber_dim;
    if j >= d {
        return Err(Error::InvalidConfig(format!("fiber index {j} out of range for d = {d}")));
    }
    if chi.len() != config.num_points() {
        return Err(Error::DimensionMismatch {
            expected: config.num_points(),
            got: chi.len(),
        });
    }
    let n = config.resolution;
    let inv = 1.0 / config.spacing();
    let mut out = metric.clone();
    for axis in 0..2 {
        for line in 0..n {
            let at = |k: usize| if axis == 0 { config.index(k, line) } else { config.index(line, k) };
            let c: Vec<f64> = (0..n).map(|k| (chi[at((k + 1) % n)] - chi[at(k)]) * inv).collect();
            let delta = solve_edge_average(&c).ok_or_else(|| {
                Error::InvalidConfig("gauge function has a grid-scale oscillation that the connection cannot absorb".into())
            })?;
            for (k, dv) in delta.iter().enumerate() {
                out.connection[at(k) * d * 2 + j * 2 + axis] -= dv;
            }
        }
    }
    Ok(out)
}

/// The phase map `φ ↦ e^{iα_jχ}·φ` matching [`gauge_transform`].
pub fn gauge_phase(alpha_j: i64, chi: &[f64], phi: &[Complex64]) -> Vec<Complex64> {
    phi.iter()
        .zip(chi)
        .map(|(v, c)| v * Complex64::from_polar(1.0, alpha_j as f64 * c))
        .collect()
}
