//! One-parameter families of invariant metrics with known velocity.
//!
//! Every path here is linear in `t` in coordinate-frame components,
//! `g_t = g_0 + t·ġ`, so `evaluate` and `velocity` agree exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{InvariantMetric, DEFAULT_SPD_FLOOR};

/// Frame-component tensors `(d+2) × (d+2)`, one per grid point.
pub type FrameField = Vec<DMatrix<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PathKind {
    /// `g_t = a_t·g_V + b_t·g_H` with `a_t = 1 + t·ȧ`, `b_t = 1 + t·ḃ`.
    SplitRescale { a_dot: Vec<f64>, b_dot: Vec<f64> },
    /// `g_t = (1+t)·g_0 − t·n·ω_j⊗ω_j` with `ω_j = g_0(∂_j, ·)`.
    RankOneVertical { j: usize },
    /// `g_t = g_0 − t·(ω_j⊗ω_k + ω_k⊗ω_j)`.
    MixedVertical { j: usize, k: usize },
    /// `g_t = g_0 + t·(ξ⊗η + η⊗ξ)` where `ξ` is dual to the horizontal lift
    /// of the base field `x` and `η` is dual to `∂_j`.
    MixedXY { x: Vec<[f64; 2]>, j: usize },
    /// `g_t = g_0 + t·ġ` for a symmetric frame field given row-major per point.
    GeneralSymmetric { g_dot: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationPath {
    pub kind: PathKind,
    pub base: InvariantMetric,
    pub spd_floor: f64,
}

impl PerturbationPath {
    pub fn new(base: InvariantMetric, kind: PathKind) -> Result<Self> {
        let np = base.config.num_points();
        let d = base.fiber_dim();
        let n = d + 2;
        let check_len = |len: usize, expected: usize| {
            if len == expected {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected, got: len })
            }
        };
        let check_fiber = |j: usize| {
            if j < d {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("fiber index {j} out of range for d = {d}")))
            }
        };
        match &kind {
            PathKind::SplitRescale { a_dot, b_dot } => {
                check_len(a_dot.len(), np)?;
                check_len(b_dot.len(), np)?;
            }
            PathKind::RankOneVertical { j } => check_fiber(*j)?,
            PathKind::MixedVertical { j, k } => {
                check_fiber(*j)?;
                check_fiber(*k)?;
                if j == k {
                    return Err(Error::InvalidConfig("mixed vertical path needs distinct fiber indices".into()));
                }
            }
            PathKind::MixedXY { x, j } => {
                check_len(x.len(), np)?;
                check_fiber(*j)?;
            }
            PathKind::GeneralSymmetric { g_dot } => {
                check_len(g_dot.len(), np * n * n)?;
                for p in 0..np {
                    let m = &g_dot[p * n * n..(p + 1) * n * n];
                    for r in 0..n {
                        for c in 0..r {
                            if m[r * n + c] != m[c * n + r] {
                                return Err(Error::InvalidConfig(format!(
                                    "velocity tensor is not symmetric at grid point {p}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            kind,
            base,
            spd_floor: DEFAULT_SPD_FLOOR,
        })
    }

    /// Path with the volume-preserving split rescaling `ḃ = f`,
    /// `ȧ = −(n−d−2)/d · f`.
    pub fn invariant_rescale(base: InvariantMetric, f: &[f64]) -> Result<Self> {
        let d = base.fiber_dim() as f64;
        let n = d + 2.0;
        let ratio = -(n - d - 2.0) / d;
        let a_dot = f.iter().map(|v| ratio * v).collect();
        Self::new(
            base,
            PathKind::SplitRescale {
                a_dot,
                b_dot: f.to_vec(),
            },
        )
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.spd_floor = floor;
        self
    }

    /// Velocity `ġ` in the coordinate frame at every grid point.
    pub fn velocity(&self) -> FrameField {
        let np = self.base.config.num_points();
        (0..np).map(|p| self.velocity_at(p)).collect()
    }

    pub fn velocity_at(&self, p: usize) -> DMatrix<f64> {
        let d = self.base.fiber_dim();
        let n = d + 2;
        match &self.kind {
            PathKind::SplitRescale { a_dot, b_dot } => {
                let g0 = self.base.frame_matrix(p);
                let mut vertical = g0.clone();
                let h = self.base.horizontal_at(p);
                for a in 0..2 {
                    for b in 0..2 {
                        vertical[(d + a, d + b)] -= h[(a, b)];
                    }
                }
                let mut out = vertical * a_dot[p];
                for a in 0..2 {
                    for b in 0..2 {
                        out[(d + a, d + b)] += b_dot[p] * h[(a, b)];
                    }
                }
                out
            }
            PathKind::RankOneVertical { j } => {
                let g0 = self.base.frame_matrix(p);
                let w = g0.column(*j).into_owned();
                &g0 - (n as f64) * &w * w.transpose()
            }
            PathKind::MixedVertical { j, k } => {
                let g0 = self.base.frame_matrix(p);
                let wj = g0.column(*j).into_owned();
                let wk = g0.column(*k).into_owned();
                -(&wj * wk.transpose() + &wk * wj.transpose())
            }
            PathKind::MixedXY { x, j } => {
                let g0 = self.base.frame_matrix(p);
                let conn = self.base.full_connection_at(p);
                let mut lift = DVector::zeros(n);
                for a in 0..2 {
                    lift[d + a] = x[p][a];
                    for r in 0..d {
                        lift[r] -= conn[(r, a)] * x[p][a];
                    }
                }
                let xi = &g0 * lift;
                let eta = g0.column(*j).into_owned();
                &xi * eta.transpose() + &eta * xi.transpose()
            }
            PathKind::GeneralSymmetric { g_dot } => DMatrix::from_row_slice(n, n, &g_dot[p * n * n..(p + 1) * n * n]),
        }
    }

    /// Metric at parameter `t` without the SPD check.
    fn evaluate_unchecked(&self, t: f64) -> InvariantMetric {
        if t == 0.0 {
            return self.base.clone();
        }
        if let PathKind::SplitRescale { a_dot, b_dot } = &self.kind {
            let d = self.base.fiber_dim();
            let mut m = self.base.clone();
            for p in 0..self.base.config.num_points() {
                let a = 1.0 + t * a_dot[p];
                let b = 1.0 + t * b_dot[p];
                for v in &mut m.fiber_gram[p * d * d..(p + 1) * d * d] {
                    *v *= a;
                }
                for v in &mut m.horizontal[p * 4..p * 4 + 4] {
                    *v *= b;
                }
            }
            m.provenance = None;
            return m;
        }
        let frames: Vec<_> = (0..self.base.config.num_points())
            .map(|p| self.base.frame_matrix(p) + t * self.velocity_at(p))
            .collect();
        InvariantMetric::from_frame_matrices(self.base.config, &frames)
    }

    fn admissible(&self, t: f64) -> bool {
        self.evaluate_unchecked(t).validate(self.spd_floor).is_ok()
    }

    /// Largest `τ` such that the path stays above the SPD floor on `[−τ, τ]`.
    /// Returns infinity when no violation is found up to `|t| = 1e6`.
    pub fn t_max(&self) -> f64 {
        if !self.admissible(0.0) {
            return 0.0;
        }
        let ok = |t: f64| self.admissible(t) && self.admissible(-t);
        let mut hi = 1.0;
        while ok(hi) {
            hi *= 2.0;
            if hi > 1e6 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// The metric `g_t`; fails with the admissible range when `g_t` violates
    /// the SPD floor.
    pub fn evaluate(&self, t: f64) -> Result<InvariantMetric> {
        let m = self.evaluate_unchecked(t);
        match m.validate(self.spd_floor) {
            Ok(()) => Ok(m),
            Err(Error::NotPositiveDefinite { .. }) => Err(Error::PathOutOfRange { t, t_max: self.t_max() }),
            Err(e) => Err(e),
        }
    }
}

/// Evaluates a path. Same as [`PerturbationPath::evaluate`].
pub fn evaluate_path(path: &PerturbationPath, t: f64) -> Result<InvariantMetric> {
    path.evaluate(t)
}

/// Velocity of a path. Same as [`PerturbationPath::velocity`].
pub fn path_velocity(path: &PerturbationPath) -> FrameField {
    path.velocity()
}

/// `½·tr(g⁻¹ġ)` at every grid point: the relative rate of change of the
/// volume density.
pub fn volume_rate(metric: &InvariantMetric, g_dot: &[DMatrix<f64>]) -> Vec<f64> {
    g_dot
        .iter()
        .enumerate()
        .map(|(p, gd)| {
            let ginv = metric.frame_matrix(p).try_inverse().expect("metric is invertible");
            0.5 * (ginv * gd).trace()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_random_metric, BundleConfig};

    fn flat(d: usize, e: i64, n: usize) -> InvariantMetric {
        InvariantMetric::flat(BundleConfig::new(d, e, n).unwrap())
    }

    #[test]
    fn evaluate_at_zero_is_base() {
        let m = sample_random_metric(BundleConfig::new(1, 1, 8).unwrap(), 2, 2, 0.2).unwrap();
        let path = PerturbationPath::new(m.clone(), PathKind::RankOneVertical { j: 0 }).unwrap();
        assert_eq!(path.evaluate(0.0).unwrap(), m);
    }

    #[test]
    fn rank_one_vertical_on_flat_circle_bundle() {
        let path = PerturbationPath::new(flat(1, 0, 6), PathKind::RankOneVertical { j: 0 }).unwrap();
        let t = 0.05;
        let m = path.evaluate(t).unwrap();
        for p in 0..36 {
            assert!((m.fiber_gram[p] - (1.0 - 2.0 * t)).abs() < 1e-15);
            let h = m.horizontal_at(p);
            assert!((h[(0, 0)] - (1.0 + t)).abs() < 1e-15);
            assert!(h[(0, 1)].abs() < 1e-15);
            assert!((h[(1, 1)] - (1.0 + t)).abs() < 1e-15);
        }
    }

    #[test]
    fn rescale_in_three_dimensions_leaves_fiber_alone() {
        let m = flat(1, 0, 5);
        let path = PerturbationPath::invariant_rescale(m.clone(), &vec![1.0; 25]).unwrap();
        let g = path.evaluate(0.1).unwrap();
        assert_eq!(g.fiber_gram, m.fiber_gram);
        assert!((g.horizontal[0] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn velocity_matches_central_difference_for_every_kind() {
        let config = BundleConfig::new(2, 0, 6).unwrap();
        let m = sample_random_metric(config, 21, 2, 0.2).unwrap();
        let np = config.num_points();
        let f: Vec<f64> = (0..np).map(|p| (p as f64 * 0.37).sin()).collect();
        let x: Vec<[f64; 2]> = (0..np).map(|p| [(p as f64).cos(), 0.5]).collect();
        let mut g_dot = vec![0.0; np * 16];
        for p in 0..np {
            for r in 0..4 {
                for c in 0..4 {
                    g_dot[p * 16 + r * 4 + c] = 0.1 * ((r + c) as f64 + f[p]);
                }
            }
        }
        let kinds = vec![
            PathKind::SplitRescale { a_dot: f.clone(), b_dot: f.iter().map(|v| 0.5 * v).collect() },
            PathKind::RankOneVertical { j: 1 },
            PathKind::MixedVertical { j: 0, k: 1 },
            PathKind::MixedXY { x, j: 1 },
            PathKind::GeneralSymmetric { g_dot },
        ];
        for kind in kinds {
            let path = PerturbationPath::new(m.clone(), kind.clone()).unwrap();
            let t = 1e-3;
            let plus = path.evaluate(t).unwrap();
            let minus = path.evaluate(-t).unwrap();
            let vel = path.velocity();
            for p in 0..np {
                let fd = (plus.frame_matrix(p) - minus.frame_matrix(p)) / (2.0 * t);
                let err = (&fd - &vel[p]).amax();
                assert!(err < 1e-9, "{kind:?}: err {err}");
            }
        }
    }

    #[test]
    fn out_of_range_reports_t_max() {
        let path = PerturbationPath::new(flat(1, 0, 4), PathKind::RankOneVertical { j: 0 }).unwrap();
        // G = 1 − 2t hits the floor 1e−2 at t = 0.495; h = 1 + t at t = −0.99
        let t_max = path.t_max();
        assert!((t_max - 0.495).abs() < 1e-9, "{t_max}");
        match path.evaluate(0.6) {
            Err(Error::PathOutOfRange { t_max, .. }) => assert!((t_max - 0.495).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_xy_keeps_volume() {
        let m = sample_random_metric(BundleConfig::new(1, 2, 8).unwrap(), 5, 2, 0.2).unwrap();
        let x = vec![[0.3, -0.7]; 64];
        let path = PerturbationPath::new(m.clone(), PathKind::MixedXY { x, j: 0 }).unwrap();
        for rate in volume_rate(&m, &path.velocity()) {
            assert!(rate.abs() < 1e-12);
        }
    }
}
