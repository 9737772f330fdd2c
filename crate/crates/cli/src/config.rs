//! Experiment configuration: a JSON file with every field defaulted.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};
use toruslab::{sample_around_constant, BundleConfig, InvariantMetric, Weight};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub bundle: BundleSpec,
    pub metric: MetricSpec,
    pub weights: Vec<Vec<i64>>,
    /// Eigenpairs per weight.
    pub m: usize,
    pub solver: SolverSpec,
    pub perturb: PerturbSpec,
    pub nodal: NodalSpec,
    pub ensemble: EnsembleSpec,
    pub convergence: ConvergenceSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bundle: BundleSpec::default(),
            metric: MetricSpec::default(),
            weights: vec![vec![0], vec![1], vec![2]],
            m: 5,
            solver: SolverSpec::default(),
            perturb: PerturbSpec::default(),
            nodal: NodalSpec::default(),
            ensemble: EnsembleSpec::default(),
            convergence: ConvergenceSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BundleSpec {
    pub fiber_dim: usize,
    pub euler: i64,
    pub resolution: usize,
}

impl Default for BundleSpec {
    fn default() -> Self {
        Self {
            fiber_dim: 1,
            euler: 0,
            resolution: 32,
        }
    }
}

/// A random metric around constant blocks `fiber_gram` and `horizontal`;
/// `fiber_gram = null` means the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSpec {
    pub seed: u64,
    pub modes: usize,
    pub amplitude: f64,
    pub fiber_gram: Option<Vec<Vec<f64>>>,
    pub horizontal: [[f64; 2]; 2],
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            modes: 2,
            amplitude: 0.0,
            fiber_gram: None,
            horizontal: [[1.0, 0.0], [0.0, 1.0]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub cluster_tol: f64,
    pub block_size: usize,
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let s = toruslab::SolverOptions::default();
        Self {
            tol: s.tol,
            cluster_tol: s.cluster_tol,
            block_size: s.block_size,
            max_basis: s.max_basis,
            max_restarts: s.max_restarts,
            seed: s.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckPath {
    RankOneVertical,
    MixedVertical,
    SplitRescale,
    MixedXy,
}

/// One eigenvalue-velocity check. `scale` multiplies the velocity fields of
/// `split_rescale` and `mixed_xy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub path: CheckPath,
    pub weight: Vec<i64>,
    #[serde(default)]
    pub index: usize,
    #[serde(default)]
    pub j: usize,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbSpec {
    /// `null` runs the default battery for the bundle's fiber dimension.
    pub checks: Option<Vec<CheckSpec>>,
    pub steps: [f64; 2],
    pub threshold: f64,
    pub overlap_matching: bool,
    /// Random `(u, v)` pairs per pairing formula.
    pub pairing_samples: usize,
    pub pairing_step: f64,
    /// Multiplies the perturbation fields of the pairing checks.
    pub pairing_scale: f64,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        Self {
            checks: None,
            steps: [1e-3, 5e-4],
            threshold: 1e-3,
            overlap_matching: false,
            pairing_samples: 3,
            pairing_step: 1e-4,
            pairing_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NodalSpec {
    pub alpha: i64,
    /// `null` picks the smallest admissible multiple of `N·max(|e|, 1)`
    /// that is at least `N`.
    pub n_theta: Option<usize>,
    pub zero_tol: f64,
    pub index: usize,
    pub sign_dump: bool,
    /// Replaces the eigenfield by the constant section (test fields).
    pub constant_section: bool,
}

impl Default for NodalSpec {
    fn default() -> Self {
        Self {
            alpha: 1,
            n_theta: None,
            zero_tol: toruslab::nodal::DEFAULT_ZERO_TOL,
            index: 0,
            sign_dump: false,
            constant_section: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSpec {
    /// Seeds `metric.seed + i` for `i < size`.
    pub size: usize,
    pub collision_tol: f64,
    /// Nodal statistics of the lowest weight-1 eigenfield (`d = 1` only).
    pub nodal: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            size: 10,
            collision_tol: 1e-6,
            nodal: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// One eigenvalue against a known limit.
    Eigenvalue,
    VanishOnOrbit,
    Weyl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSpec {
    pub scenario: Scenario,
    pub resolutions: Vec<usize>,
    pub weight: Vec<i64>,
    pub index: usize,
    pub exact: f64,
    /// Thresholds for the Weyl scenario, counted at the finest resolution.
    pub lambdas: Vec<f64>,
    pub alpha_max: i64,
    pub trust_fraction: f64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario::Eigenvalue,
            resolutions: vec![16, 24, 32, 48, 64],
            weight: vec![1],
            index: 1,
            exact: 2.0,
            lambdas: vec![20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
            alpha_max: 10,
            trust_fraction: toruslab::weyl::DEFAULT_TRUST_FRACTION,
        }
    }
}

/// A parse failure with the byte offset it occurred at.
#[derive(Debug)]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config parse error at byte {} (line {}, column {}): {}", self.offset, self.line, self.column, self.message)
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        serde_json::from_str(text).map_err(|e| ParseError {
            offset: byte_offset(text, e.line(), e.column()),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn bundle_config(&self, resolution: usize) -> toruslab::Result<BundleConfig> {
        BundleConfig::new(self.bundle.fiber_dim, self.bundle.euler, resolution)
    }

    pub fn weights(&self) -> Vec<Weight> {
        self.weights.iter().cloned().map(Weight::new).collect()
    }

    pub fn metric_at(&self, resolution: usize, seed: u64) -> toruslab::Result<InvariantMetric> {
        let config = self.bundle_config(resolution)?;
        let d = config.fiber_dim;
        let gram = match &self.metric.fiber_gram {
            None => DMatrix::identity(d, d),
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(toruslab::Error::InvalidConfig(format!("metric.fiber_gram must be {d} × {d}")));
                }
                DMatrix::from_fn(d, d, |r, c| rows[r][c])
            }
        };
        let h = self.metric.horizontal;
        let horizontal = Matrix2::new(h[0][0], h[0][1], h[1][0], h[1][1]);
        sample_around_constant(config, &gram, &horizontal, seed, self.metric.modes, self.metric.amplitude)
    }

    pub fn metric(&self) -> toruslab::Result<InvariantMetric> {
        self.metric_at(self.bundle.resolution, self.metric.seed)
    }

    pub fn solver_options(&self) -> toruslab::SolverOptions {
        toruslab::SolverOptions {
            tol: self.solver.tol,
            cluster_tol: self.solver.cluster_tol,
            block_size: self.solver.block_size,
            max_basis: self.solver.max_basis,
            max_restarts: self.solver.max_restarts,
            seed: self.solver.seed,
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string_pretty(&value).expect("config serializes")
    }
}
