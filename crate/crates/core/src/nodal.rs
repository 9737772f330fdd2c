//! Nodal sets of weight-α eigenfunctions lifted to the total space of a
//! circle bundle (`d = 1`).
//!
//! The total space is sampled on an `N × N × N_θ` grid with cell-centred
//! angles `θ_r = 2π(r + ½)/N_θ`. Moving off the grid across `x = 2π` lands at
//! `(0, j, r + s_j)` with `s_j = e·j·N_θ/N`, which realises the identification
//! `(x + 2π, y, θ) ~ (x, y, θ + e·y)` exactly when `N·|e|` divides `N_θ`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{BundleConfig, Weight};
use crate::operator::x_wrap_cocycle;
use crate::union_find::UnionFind;

/// Cells with `|u| < zero_tol·RMS(u)` carry no sign.
pub const DEFAULT_ZERO_TOL: f64 = 1e-7;

/// Samples of `u₁ = Re(e^{−iαθ}φ)` and `u₂ = Im(e^{−iαθ}φ)`, indexed
/// `i + N·j + N²·r`.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalSpaceField {
    pub resolution: usize,
    pub n_theta: usize,
    pub euler: i64,
    pub alpha: i64,
    pub values: Vec<f64>,
    pub conjugate: Vec<f64>,
}

impl TotalSpaceField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, r: usize) -> usize {
        i + self.resolution * (j + self.resolution * r)
    }

    pub fn coords(&self, c: usize) -> (usize, usize, usize) {
        let n = self.resolution;
        (c % n, (c / n) % n, c / (n * n))
    }

    pub fn theta(&self, r: usize) -> f64 {
        2.0 * PI * (r as f64 + 0.5) / self.n_theta as f64
    }

    /// θ-steps gained when crossing `x = 2π` at row `j`.
    pub fn twist_shift(&self, j: usize) -> i64 {
        self.euler * j as i64 * self.n_theta as i64 / self.resolution as i64
    }

    fn wrap_theta(&self, r: i64) -> usize {
        r.rem_euclid(self.n_theta as i64) as usize
    }

    /// Neighbours in the `+x`, `+y`, `+θ` directions.
    pub fn forward(&self, c: usize) -> [usize; 3] {
        let n = self.resolution;
        let (i, j, r) = self.coords(c);
        let x = if i + 1 < n {
            c + 1
        } else {
            self.index(0, j, self.wrap_theta(r as i64 + self.twist_shift(j)))
        };
        [x, self.index(i, (j + 1) % n, r), self.index(i, j, (r + 1) % self.n_theta)]
    }

    /// Neighbours in the `−x`, `−y`, `−θ` directions.
    pub fn backward(&self, c: usize) -> [usize; 3] {
        let n = self.resolution;
        let (i, j, r) = self.coords(c);
        let x = if i > 0 {
            c - 1
        } else {
            self.index(n - 1, j, self.wrap_theta(r as i64 - self.twist_shift(j)))
        };
        [x, self.index(i, (j + n - 1) % n, r), self.index(i, j, (r + self.n_theta - 1) % self.n_theta)]
    }

    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64).sqrt()
    }

    /// `+1`, `−1`, or `0` for neutral cells.
    pub fn signs(&self, zero_tol: f64) -> Vec<i8> {
        let cut = zero_tol * self.rms();
        self.values
            .iter()
            .map(|&v| {
                if v.abs() < cut {
                    0
                } else if v > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }

    /// The 2-cells with corner `c`, each as the list of its edges. An edge is
    /// `3·c + k` for the edge leaving `c` in direction `k`. The `xy` cell
    /// across `x = 2π` closes up with `|e|·N_θ/N` extra θ-edges.
    fn faces(&self, c: usize) -> Vec<Vec<usize>> {
        let f = self.forward(c);
        let fx = self.forward(f[0]);
        let fy = self.forward(f[1]);
        let fz = self.forward(f[2]);
        let mut xy = vec![3 * c, 3 * c + 1, 3 * f[0] + 1, 3 * f[1]];
        if fx[1] != fy[0] {
            let (i, j, _) = self.coords(c);
            debug_assert_eq!(i, self.resolution - 1);
            let step = self.twist_shift(j + 1) - self.twist_shift(j);
            let (_, j1, r1) = self.coords(fx[1]);
            let start = if step > 0 { r1 as i64 } else { r1 as i64 + step };
            for t in 0..step.abs() {
                xy.push(3 * self.index(0, j1, self.wrap_theta(start + t)) + 2);
            }
        }
        let xz = vec![3 * c, 3 * c + 2, 3 * f[0] + 2, 3 * f[2]];
        debug_assert_eq!(fx[2], fz[0]);
        let yz = vec![3 * c + 1, 3 * c + 2, 3 * f[1] + 2, 3 * f[2] + 1];
        vec![xy, xz, yz]
    }
}

/// Lifts a weight-α section to the total space.
pub fn reconstruct_total_space(phi: &[Complex64], alpha: i64, euler: i64, n_theta: usize) -> Result<TotalSpaceField> {
    let n = (phi.len() as f64).sqrt().round() as usize;
    if n * n != phi.len() || n == 0 {
        return Err(Error::InvalidConfig(format!("field of length {} is not an N×N grid", phi.len())));
    }
    let minimal = if euler == 0 { 1 } else { n * euler.unsigned_abs() as usize };
    if n_theta == 0 || n_theta % minimal != 0 {
        return Err(Error::AngularResolution { n_theta, minimal });
    }
    let mut field = TotalSpaceField {
        resolution: n,
        n_theta,
        euler,
        alpha,
        values: vec![0.0; n * n * n_theta],
        conjugate: vec![0.0; n * n * n_theta],
    };
    for r in 0..n_theta {
        let rot = Complex64::from_polar(1.0, -(alpha as f64) * field.theta(r));
        for (p, z) in phi.iter().enumerate() {
            let w = rot * z;
            field.values[p + n * n * r] = w.re;
            field.conjugate[p + n * n * r] = w.im;
        }
    }
    Ok(field)
}

/// Largest mismatch between the lifted field across `x = 2π`, computed from
/// the boundary phase used in operator assembly, and the cell the twisted
/// identification points to.
pub fn wrap_consistency(field: &TotalSpaceField, phi: &[Complex64]) -> Result<f64> {
    let n = field.resolution;
    let config = BundleConfig::new(1, field.euler, n)?;
    let alpha = Weight::scalar(field.alpha);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let across = x_wrap_cocycle(&config, &alpha, j) * phi[config.index(0, j)];
        for r in 0..field.n_theta {
            let expected = (Complex64::from_polar(1.0, -(field.alpha as f64) * field.theta(r)) * across).re;
            let last = field.index(n - 1, j, r);
            let landed = field.values[field.forward(last)[0]];
            worst = worst.max((expected - landed).abs());
        }
    }
    Ok(worst)
}

/// Connected components of same-sign cells under 6-neighbour adjacency.
pub fn count_nodal_domains(field: &TotalSpaceField, zero_tol: f64) -> usize {
    let signs = field.signs(zero_tol);
    let mut uf = UnionFind::new(field.len());
    for c in 0..field.len() {
        if signs[c] == 0 {
            continue;
        }
        for nb in field.forward(c) {
            if signs[nb] == signs[c] {
                uf.union(c, nb);
            }
        }
    }
    uf.count_roots((0..field.len()).filter(|&c| signs[c] != 0))
}

fn interface_edges(field: &TotalSpaceField, signs: &[i8]) -> Vec<bool> {
    let mut out = vec![false; 3 * field.len()];
    for c in 0..field.len() {
        for (k, nb) in field.forward(c).into_iter().enumerate() {
            out[3 * c + k] = signs[c] * signs[nb] < 0;
        }
    }
    out
}

/// Connected components of the nodal surface: grid edges whose endpoints
/// carry opposite signs, joined when they bound a common 2-cell.
pub fn nodal_set_components(field: &TotalSpaceField, zero_tol: f64) -> usize {
    let signs = field.signs(zero_tol);
    let crossing = interface_edges(field, &signs);
    let mut uf = UnionFind::new(crossing.len());
    for c in 0..field.len() {
        for face in field.faces(c) {
            let mut first = None;
            for e in face {
                if crossing[e] {
                    match first {
                        None => first = Some(e),
                        Some(f) => {
                            uf.union(f, e);
                        }
                    }
                }
            }
        }
    }
    uf.count_roots((0..crossing.len()).filter(|&e| crossing[e]))
}

fn gradient(field: &TotalSpaceField, c: usize) -> [f64; 3] {
    let h = 2.0 * PI / field.resolution as f64;
    let f = field.forward(c);
    let b = field.backward(c);
    [
        (field.values[f[0]] - field.values[b[0]]) / (2.0 * h),
        (field.values[f[1]] - field.values[b[1]]) / (2.0 * h),
        field.alpha as f64 * field.conjugate[c],
    ]
}

/// Smallest gradient norm over sign-change edges, relative to `RMS(u₁)`.
/// Spatial derivatives are centred differences; `∂_θ u₁ = α·u₂` is exact.
/// Infinite when there is no sign change.
pub fn regular_value_margin(field: &TotalSpaceField, zero_tol: f64) -> f64 {
    let signs = field.signs(zero_tol);
    let rms = field.rms();
    let mut best = f64::INFINITY;
    for c in 0..field.len() {
        if signs[c] == 0 {
            continue;
        }
        for nb in field.forward(c) {
            if signs[c] * signs[nb] < 0 {
                let (g0, g1) = (gradient(field, c), gradient(field, nb));
                let norm = (0..3).map(|k| (0.5 * (g0[k] + g1[k])).powi(2)).sum::<f64>().sqrt();
                best = best.min(norm / rms);
            }
        }
    }
    best
}

/// `min |φ| / RMS(|φ|)` over the base grid.
pub fn vanish_on_orbit(phi: &[Complex64]) -> f64 {
    let rms = (phi.iter().map(|z| z.norm_sqr()).sum::<f64>() / phi.len() as f64).sqrt();
    phi.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min) / rms
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodalReport {
    pub domain_count: usize,
    pub nodal_components: usize,
    /// `None` when the field has no sign change.
    pub regular_margin: Option<f64>,
    pub min_orbit_norm: f64,
    pub wrap_residual: f64,
    #[serde(rename = "N")]
    pub resolution: usize,
    #[serde(rename = "N_theta")]
    pub n_theta: usize,
    pub alpha: i64,
    pub e: i64,
}

impl NodalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)?)
    }
}

/// Wrap residual above which topology counts are refused.
pub const WRAP_TOLERANCE: f64 = 1e-10;

/// Lifts `phi` and measures its nodal topology. The identification is
/// checked against the assembly boundary phase first.
pub fn nodal_report(phi: &[Complex64], alpha: i64, euler: i64, n_theta: usize, zero_tol: f64) -> Result<NodalReport> {
    let field = reconstruct_total_space(phi, alpha, euler, n_theta)?;
    let wrap_residual = wrap_consistency(&field, phi)?;
    if wrap_residual > WRAP_TOLERANCE {
        return Err(Error::InvalidConfig(format!(
            "twisted identification disagrees with the assembly boundary phase (residual {wrap_residual:e})"
        )));
    }
    let margin = regular_value_margin(&field, zero_tol);
    Ok(NodalReport {
        domain_count: count_nodal_domains(&field, zero_tol),
        nodal_components: nodal_set_components(&field, zero_tol),
        regular_margin: margin.is_finite().then_some(margin),
        min_orbit_norm: vanish_on_orbit(phi),
        wrap_residual,
        resolution: field.resolution,
        n_theta,
        alpha,
        e: euler,
    })
}

/// Writes the sign array: one JSON header line, then four cells per byte
/// (two bits each, first cell in the low bits; 0 neutral, 1 positive,
/// 2 negative) in index order `i + N·j + N²·r`.
pub fn write_sign_dump<W: Write>(field: &TotalSpaceField, zero_tol: f64, mut out: W) -> Result<()> {
    let header = json!({
        "N": field.resolution,
        "N_theta": field.n_theta,
        "alpha": field.alpha,
        "e": field.euler,
        "order": "i + N*j + N*N*r",
        "identification": "(N, j, r) ~ (0, j, r + e*j*N_theta/N mod N_theta)",
        "theta": "2*pi*(r + 0.5)/N_theta",
        "encoding": "2 bits per cell, low bits first: 0 neutral, 1 positive, 2 negative",
    });
    writeln!(out, "{header}")?;
    let signs = field.signs(zero_tol);
    let bytes: Vec<u8> = signs
        .chunks(4)
        .map(|chunk| {
            chunk.iter().enumerate().fold(0u8, |acc, (k, &s)| {
                let code = match s {
                    1 => 1u8,
                    -1 => 2,
                    _ => 0,
                };
                acc | (code << (2 * k))
            })
        })
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}
