//! Eigenvalue counting functions of the invariant and full spectrum.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::eigen::count_below;
use crate::error::{Error, Result};
use crate::geometry::{InvariantMetric, Weight};
use crate::operator::assemble_weight_operator;

/// Fraction of `1/Δ²` up to which counts are trusted by default.
pub const DEFAULT_TRUST_FRACTION: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeylCounts {
    pub lambda: f64,
    /// Eigenvalues below `lambda` in weight zero.
    pub invariant: usize,
    /// Real dimension of all eigenspaces below `lambda` over the weights
    /// `|α_j| ≤ alpha_max`.
    pub total: usize,
    /// Set when some excluded weight may still have eigenvalues below `lambda`.
    pub truncated: bool,
}

/// One representative of every `{α, −α}` pair with `|α_j| ≤ alpha_max`,
/// starting with the zero weight.
pub fn weight_representatives(d: usize, alpha_max: i64) -> Vec<Weight> {
    let side = (2 * alpha_max + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(d as u32) {
        let mut c = code;
        let alpha: Vec<i64> = (0..d)
            .map(|_| {
                let v = (c % side) as i64 - alpha_max;
                c /= side;
                v
            })
            .collect();
        // keep α when its first nonzero entry is positive
        if alpha.iter().find(|&&a| a != 0).map_or(true, |&a| a > 0) {
            out.push(Weight(alpha));
        }
    }
    out.sort_by_key(|w| (w.0.iter().map(|a| a * a).sum::<i64>(), w.0.clone()));
    out
}

/// Counts eigenvalues below `lambda` by inertia. Weights whose potential
/// exceeds `lambda` everywhere are skipped since they contribute nothing.
pub fn weyl_counts(metric: &InvariantMetric, lambda: f64, alpha_max: i64, trust_fraction: f64) -> Result<WeylCounts> {
    let dx = metric.config.spacing();
    let limit = trust_fraction / (dx * dx);
    if lambda > limit {
        return Err(Error::UntrustedThreshold { lambda, limit });
    }
    let d = metric.fiber_dim();
    let mut invariant = 0;
    let mut total = 0;
    for w in weight_representatives(d, alpha_max) {
        let v_min = metric.vertical_potential(&w).into_iter().fold(f64::INFINITY, f64::min);
        if v_min > lambda {
            continue;
        }
        let op = assemble_weight_operator(metric, &w)?;
        let c = count_below(&op, lambda);
        if w.is_zero() {
            invariant = c;
            total += c;
        } else {
            total += 2 * c;
        }
    }
    // every excluded weight has some |α_j| ≥ alpha_max + 1
    let ginv_min = (0..metric.config.num_points())
        .map(|p| {
            let g = metric.fiber_gram_at(p);
            1.0 / SymmetricEigen::new(g).eigenvalues.max()
        })
        .fold(f64::INFINITY, f64::min);
    let bound = ginv_min * ((alpha_max + 1) * (alpha_max + 1)) as f64;
    Ok(WeylCounts {
        lambda,
        invariant,
        total,
        truncated: bound <= lambda,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}
