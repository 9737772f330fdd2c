//! Browser bindings: each call builds a random invariant metric, runs one
//! experiment and returns a JSON string.

use serde_json::{json, Value};
use toruslab::eigen::lowest_eigenpairs_with;
use toruslab::perturbation::{check_eigenvalue_velocity, BranchOptions};
use toruslab::nodal::DEFAULT_ZERO_TOL;
use toruslab::{
    assemble_weight_operator, cluster_multiplicities, nodal_report, sample_random_metric, BundleConfig, EigenPair, InvariantMetric,
    PathKind, PerturbationPath, SolverOptions, Weight,
};
use wasm_bindgen::prelude::*;

const MAX_RESOLUTION: usize = 64;

fn metric(euler: i32, resolution: usize, amplitude: f64, seed: u64) -> Result<InvariantMetric, String> {
    if resolution > MAX_RESOLUTION {
        return Err(format!("resolution is capped at {MAX_RESOLUTION} in the browser"));
    }
    let config = BundleConfig::new(1, euler as i64, resolution).map_err(|e| e.to_string())?;
    sample_random_metric(config, seed, 2, amplitude).map_err(|e| e.to_string())
}

fn eigenpairs(metric: &InvariantMetric, alpha: i64, m: usize) -> Result<Vec<EigenPair>, String> {
    let op = assemble_weight_operator(metric, &Weight::scalar(alpha)).map_err(|e| e.to_string())?;
    lowest_eigenpairs_with(&op, m, &SolverOptions::default()).map_err(|e| e.to_string())
}

fn to_string(v: Value) -> String {
    v.to_string()
}

/// Lowest `m` eigenvalues for each weight, their clusters, and the number of
/// values shared between different `|α|` within `collision_tol`.
#[wasm_bindgen]
pub fn spectrum(
    euler: i32,
    resolution: usize,
    amplitude: f64,
    seed: u64,
    weights: Vec<i32>,
    m: usize,
    collision_tol: f64,
) -> Result<String, String> {
    let metric = metric(euler, resolution, amplitude, seed)?;
    let mut tables = Vec::new();
    let mut all: Vec<(i32, f64)> = Vec::new();
    for &a in &weights {
        let values: Vec<f64> = eigenpairs(&metric, a as i64, m)?.iter().map(|p| p.lambda).collect();
        all.extend(values.iter().map(|&v| (a.abs(), v)));
        tables.push(json!({
            "weight": a,
            "values": values,
            "clusters": cluster_multiplicities(&values, collision_tol, a == 0),
        }));
    }
    let mut collisions = 0;
    for (k, &(a, x)) in all.iter().enumerate() {
        collisions += all[k + 1..].iter().filter(|&&(b, y)| b != a && (x - y).abs() < collision_tol).count();
    }
    Ok(to_string(json!({ "spectra": tables, "collisions": collisions })))
}

/// Nodal data of the lowest weight-`alpha` eigenfield on a circle bundle,
/// with `|φ|` and `arg φ` over the base grid for plotting.
#[wasm_bindgen]
pub fn nodal(euler: i32, resolution: usize, amplitude: f64, seed: u64, alpha: i32) -> Result<String, String> {
    let metric = metric(euler, resolution, amplitude, seed)?;
    let pair = eigenpairs(&metric, alpha as i64, 1)?.swap_remove(0);
    let n_theta = resolution * (euler.unsigned_abs() as usize).max(1);
    let report = nodal_report(&pair.vector, alpha as i64, euler as i64, n_theta, DEFAULT_ZERO_TOL).map_err(|e| e.to_string())?;
    Ok(to_string(json!({
        "lambda": pair.lambda,
        "report": report,
        "modulus": pair.vector.iter().map(|z| z.norm()).collect::<Vec<_>>(),
        "phase": pair.vector.iter().map(|z| z.arg()).collect::<Vec<_>>(),
    })))
}

/// Eigenvalue velocity of the lowest weight-`alpha` eigenvalue along a named
/// path, against a Richardson-extrapolated finite difference.
#[wasm_bindgen]
pub fn velocity(euler: i32, resolution: usize, amplitude: f64, seed: u64, alpha: i32, path: &str) -> Result<String, String> {
    let metric = metric(euler, resolution, amplitude, seed)?;
    let n = resolution;
    let dx = std::f64::consts::TAU / n as f64;
    let wave = |kx: f64, ky: f64, c: f64| -> Vec<f64> {
        (0..n * n).map(|p| c + (kx * (p % n) as f64 * dx).sin() * (ky * (p / n) as f64 * dx).cos()).collect()
    };
    let kind = match path {
        "rank_one_vertical" => PathKind::RankOneVertical { j: 0 },
        "split_rescale" => PathKind::SplitRescale { a_dot: wave(1.0, 1.0, 0.3), b_dot: wave(2.0, 1.0, 0.2) },
        "mixed_xy" => PathKind::MixedXY {
            x: wave(1.0, 2.0, 0.1).into_iter().zip(wave(2.0, 1.0, -0.2)).map(|(a, b)| [a, b]).collect(),
            j: 0,
        },
        other => return Err(format!("unknown path `{other}`")),
    };
    let alpha_w = Weight::scalar(alpha as i64);
    let pairs = eigenpairs(&metric, alpha as i64, 4)?;
    let name = path;
    let path = PerturbationPath::new(metric, kind).map_err(|e| e.to_string())?;
    let opts = BranchOptions {
        overlap_matching: true,
        ..Default::default()
    };
    let report = check_eigenvalue_velocity(name, &path, &alpha_w, &pairs, 0, &opts).map_err(|e| e.to_string())?;
    Ok(to_string(json!({ "lambda": pairs[0].lambda, "report": report })))
}
