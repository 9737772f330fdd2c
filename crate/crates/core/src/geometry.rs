//! Torus bundles over the flat 2-torus and their torus-invariant metrics.
//!
//! A metric invariant under the fiber torus is stored in split form on the
//! base grid: the fiber Gram matrix `G`, the connection one-forms `A^j`
//! (horizontal distribution) and the metric `h` on horizontal vectors. In the
//! coordinate frame `{∂_1..∂_d, ∂_x, ∂_y}` the full metric reads
//!
//! ```text
//!     | G        G·A          |
//!     | Aᵀ·G     h + Aᵀ·G·A   |
//! ```
//!
//! where `A` is the `d × 2` matrix with rows `A^j = (A^j_x, A^j_y)`.
//!
//! For a circle bundle with Euler number `e ≠ 0` the connection carries the
//! background potential `(e/2π)·x·dy`, which is not periodic; only the periodic
//! remainder is stored and the background is added on demand.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest eigenvalue allowed for `G` and `h` unless a caller asks otherwise.
pub const DEFAULT_SPD_FLOOR: f64 = 1e-2;

/// Topology and discretization of the total space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    /// Dimension `d` of the fiber torus.
    pub fiber_dim: usize,
    /// Euler number of the circle bundle (zero unless `fiber_dim == 1`).
    pub euler: i64,
    /// Grid points per base coordinate.
    pub resolution: usize,
}

impl BundleConfig {
    pub fn new(fiber_dim: usize, euler: i64, resolution: usize) -> Result<Self> {
        let config = Self {
            fiber_dim,
            euler,
            resolution,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fiber_dim == 0 {
            return Err(Error::InvalidConfig("fiber dimension must be at least 1".into()));
        }
        if self.fiber_dim >= 2 && self.euler != 0 {
            return Err(Error::InvalidConfig(format!(
                "a {}-dimensional fiber requires a trivial bundle (euler = 0), got euler = {}",
                self.fiber_dim, self.euler
            )));
        }
        if self.resolution < 3 {
            return Err(Error::InvalidConfig(format!(
                "base resolution must be at least 3, got {}",
                self.resolution
            )));
        }
        Ok(())
    }

    /// Dimension `n = d + 2` of the total space.
    pub fn total_dim(&self) -> usize {
        self.fiber_dim + 2
    }

    /// Grid spacing `2π / N`.
    pub fn spacing(&self) -> f64 {
        TAU / self.resolution as f64
    }

    pub fn num_points(&self) -> usize {
        self.resolution * self.resolution
    }

    /// Linear index of grid point `(i, j)`; `i` runs along `x`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.resolution * j
    }

    #[inline]
    pub fn coords(&self, p: usize) -> (usize, usize) {
        (p % self.resolution, p / self.resolution)
    }
}

/// Integer weight `α ∈ ℤ^d` labelling an isotypic component of the torus action.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weight(pub Vec<i64>);

impl Weight {
    pub fn new(components: Vec<i64>) -> Self {
        Self(components)
    }

    pub fn scalar(alpha: i64) -> Self {
        Self(vec![alpha])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&a| a as f64).collect()
    }

    /// True when `self = ±other`.
    pub fn same_up_to_sign(&self, other: &Weight) -> bool {
        self == other || *self == other.negated()
    }
}

impl std::fmt::Display for Weight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
            write!(f, "({})", parts.join(","))
        }
    }
}

/// Where a sampled metric came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedProvenance {
    pub seed: u64,
    pub modes: usize,
    pub amplitude: f64,
}

/// A torus-invariant metric sampled on the base grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantMetric {
    pub config: BundleConfig,
    /// Fiber Gram matrices, `d × d` row-major per grid point.
    #[serde(rename = "G")]
    pub fiber_gram: Vec<f64>,
    /// Periodic part of the connection, `d × 2` row-major per grid point
    /// (`A^j_x, A^j_y` for each `j`).
    #[serde(rename = "A")]
    pub connection: Vec<f64>,
    /// Horizontal metric, `2 × 2` row-major per grid point.
    #[serde(rename = "h")]
    pub horizontal: Vec<f64>,
    #[serde(rename = "seed_provenance", default)]
    pub provenance: Option<SeedProvenance>,
}

impl InvariantMetric {
    /// The product metric with `G ≡ I`, `A ≡ 0` and `h ≡ I`.
    pub fn flat(config: BundleConfig) -> Self {
        let d = config.fiber_dim;
        let gram = DMatrix::identity(d, d);
        Self::constant(config, &gram, &Matrix2::identity())
    }

    /// A metric with constant fiber and horizontal blocks and vanishing
    /// periodic connection.
    pub fn constant(config: BundleConfig, fiber_gram: &DMatrix<f64>, horizontal: &Matrix2<f64>) -> Self {
        let d = config.fiber_dim;
        assert_eq!(fiber_gram.shape(), (d, d), "fiber Gram matrix must be d × d");
        let np = config.num_points();
        let mut g = Vec::with_capacity(np * d * d);
        let mut h = Vec::with_capacity(np * 4);
        for _ in 0..np {
            for r in 0..d {
                for c in 0..d {
                    g.push(fiber_gram[(r, c)]);
                }
            }
            h.extend_from_slice(&[horizontal[(0, 0)], horizontal[(0, 1)], horizontal[(1, 0)], horizontal[(1, 1)]]);
        }
        Self {
            config,
            fiber_gram: g,
            connection: vec![0.0; np * d * 2],
            horizontal: h,
            provenance: None,
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.config.fiber_dim
    }

    pub fn fiber_gram_at(&self, p: usize) -> DMatrix<f64> {
        let d = self.fiber_dim();
        DMatrix::from_row_slice(d, d, &self.fiber_gram[p * d * d..(p + 1) * d * d])
    }

    /// Periodic part of the connection at `p` as a `d × 2` matrix.
    pub fn connection_at(&self, p: usize) -> DMatrix<f64> {
        let d = self.fiber_dim();
        DMatrix::from_row_slice(d, 2, &self.connection[p * d * 2..(p + 1) * d * 2])
    }

    /// Background potential of the bundle at grid point `p`; nonzero only for
    /// `euler ≠ 0`, where `A^1_y = (e/2π)·x`.
    pub fn background_at(&self, p: usize) -> DMatrix<f64> {
        let d = self.fiber_dim();
        let mut bg = DMatrix::zeros(d, 2);
        if self.config.euler != 0 {
            let (i, _) = self.config.coords(p);
            let x = i as f64 * self.config.spacing();
            bg[(0, 1)] = self.config.euler as f64 / TAU * x;
        }
        bg
    }

    /// Full connection (background plus periodic part) at `p`.
    pub fn full_connection_at(&self, p: usize) -> DMatrix<f64> {
        self.connection_at(p) + self.background_at(p)
    }

    pub fn horizontal_at(&self, p: usize) -> Matrix2<f64> {
        let h = &self.horizontal[p * 4..p * 4 + 4];
        Matrix2::new(h[0], h[1], h[2], h[3])
    }

    /// Vertical potential `αᵀ G⁻¹ α` at every grid point.
    pub fn vertical_potential(&self, alpha: &Weight) -> Vec<f64> {
        let a = nalgebra::DVector::from_vec(alpha.as_f64());
        (0..self.config.num_points())
            .map(|p| {
                let ginv = self.fiber_gram_at(p).try_inverse().expect("fiber Gram matrix is invertible");
                (a.transpose() * ginv * &a)[(0, 0)]
            })
            .collect()
    }

    /// Riemannian volume density `√(det G · det h)` per grid point.
    pub fn volume_density(&self) -> Vec<f64> {
        (0..self.config.num_points())
            .map(|p| (self.fiber_gram_at(p).determinant() * self.horizontal_at(p).determinant()).sqrt())
            .collect()
    }

    /// Metric components in the coordinate frame `{∂_1..∂_d, ∂_x, ∂_y}` at `p`.
    pub fn frame_matrix(&self, p: usize) -> DMatrix<f64> {
        let d = self.fiber_dim();
        let gram = self.fiber_gram_at(p);
        let conn = self.full_connection_at(p);
        let h = self.horizontal_at(p);
        let mixed = &gram * &conn;
        let hh = conn.transpose() * &mixed;
        let mut g = DMatrix::zeros(d + 2, d + 2);
        g.view_mut((0, 0), (d, d)).copy_from(&gram);
        g.view_mut((0, d), (d, 2)).copy_from(&mixed);
        g.view_mut((d, 0), (2, d)).copy_from(&mixed.transpose());
        for a in 0..2 {
            for b in 0..2 {
                g[(d + a, d + b)] = h[(a, b)] + hh[(a, b)];
            }
        }
        g
    }

    /// Rebuilds split form from frame components at every grid point. The
    /// bundle background is subtracted from the recovered connection.
    pub fn from_frame_matrices(config: BundleConfig, frames: &[DMatrix<f64>]) -> Self {
        let d = config.fiber_dim;
        let np = config.num_points();
        assert_eq!(frames.len(), np);
        let mut out = Self::flat(config);
        for (p, g) in frames.iter().enumerate() {
            let gram = g.view((0, 0), (d, d)).into_owned();
            let mixed = g.view((0, d), (d, 2)).into_owned();
            let gram_inv = gram.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(d, d, f64::NAN));
            let conn = &gram_inv * &mixed;
            let hh = conn.transpose() * &mixed;
            let conn_periodic = &conn - out.background_at(p);
            for r in 0..d {
                for c in 0..d {
                    // symmetrize against round-off in the inverse
                    out.fiber_gram[p * d * d + r * d + c] = 0.5 * (gram[(r, c)] + gram[(c, r)]);
                }
                for a in 0..2 {
                    out.connection[p * d * 2 + r * 2 + a] = conn_periodic[(r, a)];
                }
            }
            let h01 = 0.5 * ((g[(d, d + 1)] - hh[(0, 1)]) + (g[(d + 1, d)] - hh[(1, 0)]));
            out.horizontal[p * 4] = g[(d, d)] - hh[(0, 0)];
            out.horizontal[p * 4 + 1] = h01;
            out.horizontal[p * 4 + 2] = h01;
            out.horizontal[p * 4 + 3] = g[(d + 1, d + 1)] - hh[(1, 1)];
        }
        out
    }

    /// Smallest eigenvalues of `G` and `h` over the grid, with the point where
    /// each is attained.
    pub fn min_eigenvalues(&self) -> ((f64, usize), (f64, usize)) {
        let mut g_min = (f64::INFINITY, 0);
        let mut h_min = (f64::INFINITY, 0);
        for p in 0..self.config.num_points() {
            let ge = min_sym_eigenvalue(&self.fiber_gram_at(p));
            let he = min_sym_eigenvalue(&DMatrix::from_iterator(2, 2, self.horizontal_at(p).iter().copied()));
            if !(ge >= g_min.0) {
                g_min = (ge, p);
            }
            if !(he >= h_min.0) {
                h_min = (he, p);
            }
        }
        (g_min, h_min)
    }

    /// Checks that `G` and `h` stay above `floor` everywhere.
    pub fn validate(&self, floor: f64) -> Result<()> {
        self.config.validate()?;
        let np = self.config.num_points();
        let d = self.fiber_dim();
        if self.fiber_gram.len() != np * d * d {
            return Err(Error::DimensionMismatch {
                expected: np * d * d,
                got: self.fiber_gram.len(),
            });
        }
        if self.connection.len() != np * d * 2 {
            return Err(Error::DimensionMismatch {
                expected: np * d * 2,
                got: self.connection.len(),
            });
        }
        if self.horizontal.len() != np * 4 {
            return Err(Error::DimensionMismatch {
                expected: np * 4,
                got: self.horizontal.len(),
            });
        }
        let ((g_min, gp), (h_min, hp)) = self.min_eigenvalues();
        for (value, p, block) in [(g_min, gp, "fiber Gram matrix G"), (h_min, hp, "horizontal metric h")] {
            if !(value >= floor) {
                let (i, j) = self.config.coords(p);
                return Err(Error::NotPositiveDefinite {
                    i,
                    j,
                    block,
                    min_eigenvalue: value,
                    floor,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        // Round-trip through Value so that object keys come out sorted.
        Ok(serde_json::to_string(&serde_json::to_value(self)?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let metric: Self = serde_json::from_str(text)?;
        metric.validate(0.0)?;
        Ok(metric)
    }
}

pub(crate) fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// A real trigonometric polynomial on the base torus.
struct TrigField {
    terms: Vec<(f64, f64, f64, f64)>, // (k, l, cos coefficient, sin coefficient)
}

impl TrigField {
    /// Frequencies in a half plane with `|k|, |l| ≤ modes`, damped by
    /// `1/(1 + k² + l²)` so higher modes stay small.
    fn sample(rng: &mut ChaCha8Rng, modes: usize, amplitude: f64) -> Self {
        let m = modes as i64;
        let mut terms = Vec::new();
        for k in 0..=m {
            for l in -m..=m {
                if k == 0 && l <= 0 {
                    continue;
                }
                let damping = 1.0 / (1.0 + (k * k + l * l) as f64);
                let (c, s) = if amplitude > 0.0 {
                    (
                        rng.gen_range(-amplitude..=amplitude),
                        rng.gen_range(-amplitude..=amplitude),
                    )
                } else {
                    (0.0, 0.0)
                };
                terms.push((k as f64, l as f64, damping * c, damping * s));
            }
        }
        Self { terms }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k, l, c, s)| {
                let phase = k * x + l * y;
                c * phase.cos() + s * phase.sin()
            })
            .sum()
    }
}

/// Samples a smooth torus-invariant metric near the flat product metric.
///
/// Diagonal entries of `G` and `h` are exponentials of random trigonometric
/// polynomials; off-diagonal entries and the periodic connection are the
/// polynomials themselves. The result is a pure function of the arguments.
pub fn sample_random_metric(
    config: BundleConfig,
    seed: u64,
    modes: usize,
    amplitude: f64,
) -> Result<InvariantMetric> {
    config.validate()?;
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidConfig(format!("amplitude must be finite and non-negative, got {amplitude}")));
    }
    let d = config.fiber_dim;
    let n = config.resolution;
    let dx = config.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = || TrigField::sample(&mut rng, modes, amplitude);

    let gram_fields: Vec<Vec<TrigField>> = (0..d).map(|_| (0..d).map(|_| field()).collect()).collect();
    let conn_fields: Vec<[TrigField; 2]> = (0..d).map(|_| [field(), field()]).collect();
    let h_fields = [field(), field(), field()];

    let mut metric = InvariantMetric::flat(config);
    for j in 0..n {
        for i in 0..n {
            let p = config.index(i, j);
            let (x, y) = (i as f64 * dx, j as f64 * dx);
            for r in 0..d {
                for c in 0..d {
                    let v = if r == c {
                        gram_fields[r][r].eval(x, y).exp()
                    } else {
                        let (lo, hi) = (r.min(c), r.max(c));
                        gram_fields[lo][hi].eval(x, y)
                    };
                    metric.fiber_gram[p * d * d + r * d + c] = v;
                }
                for a in 0..2 {
                    metric.connection[p * d * 2 + r * 2 + a] = conn_fields[r][a].eval(x, y);
                }
            }
            let off = h_fields[1].eval(x, y);
            metric.horizontal[p * 4] = h_fields[0].eval(x, y).exp();
            metric.horizontal[p * 4 + 1] = off;
            metric.horizontal[p * 4 + 2] = off;
            metric.horizontal[p * 4 + 3] = h_fields[2].eval(x, y).exp();
        }
    }
    metric.provenance = Some(SeedProvenance {
        seed,
        modes,
        amplitude,
    });
    metric.validate(DEFAULT_SPD_FLOOR)?;
    Ok(metric)
}

/// A random metric around the constant metric with blocks `G₀`, `h₀`: the
/// sampled `G`, `h` are pushed through the Cholesky factors of `G₀`, `h₀`.
/// With zero amplitude this is exactly the constant metric.
pub fn sample_around_constant(
    config: BundleConfig,
    fiber_gram: &DMatrix<f64>,
    horizontal: &Matrix2<f64>,
    seed: u64,
    modes: usize,
    amplitude: f64,
) -> Result<InvariantMetric> {
    config.validate()?;
    let d = config.fiber_dim;
    if fiber_gram.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: fiber_gram.nrows(),
        });
    }
    let lg = fiber_gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidConfig("base fiber Gram matrix is not positive definite".into()))?
        .l();
    let lh = horizontal
        .cholesky()
        .ok_or_else(|| Error::InvalidConfig("base horizontal metric is not positive definite".into()))?
        .l();
    if amplitude == 0.0 {
        let mut metric = InvariantMetric::constant(config, fiber_gram, horizontal);
        metric.provenance = Some(SeedProvenance { seed, modes, amplitude });
        metric.validate(DEFAULT_SPD_FLOOR)?;
        return Ok(metric);
    }
    let mut metric = sample_random_metric(config, seed, modes, amplitude)?;
    for p in 0..config.num_points() {
        let g = &lg * metric.fiber_gram_at(p) * lg.transpose();
        let h = lh * metric.horizontal_at(p) * lh.transpose();
        metric.fiber_gram[p * d * d..(p + 1) * d * d].copy_from_slice(g.transpose().as_slice());
        metric.horizontal[p * 4..(p + 1) * 4].copy_from_slice(&[h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]]);
    }
    metric.validate(DEFAULT_SPD_FLOOR)?;
    Ok(metric)
}

/// Sample points `x_i = i·2π/N`.
pub fn grid_coordinates(resolution: usize) -> Vec<f64> {
    let dx = TAU / resolution as f64;
    (0..resolution).map(|i| i as f64 * dx).collect()
}
