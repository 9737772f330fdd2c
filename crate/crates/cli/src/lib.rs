//! Commands behind the `toruslab` binary.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use toruslab::eigen::{cluster_multiplicities, collisions_between, lowest_eigenpairs_with};
use toruslab::io::{fmt_f64, write_eigenpairs_csv, write_reports_csv};
use toruslab::nodal::{reconstruct_total_space, write_sign_dump};
use toruslab::perturbation::{check_eigenvalue_velocity, fd_pairing, BranchOptions};
use toruslab::weyl::log_log_slope;
use toruslab::{
    assemble_weight_operator, laplacian_variation_pairing, mixed_xy_pairing, nodal_report, split_rescale_pairing,
    vanish_on_orbit, weyl_counts, EigenPair, Error, InvariantMetric, PathKind, PerturbationPath, VariationReport, Weight,
};

pub use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_FORMULA: i32 = 3;
pub const EXIT_CONFIG: i32 = 64;
pub const EXIT_DISCRETIZATION: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoConvergence { .. } => EXIT_SOLVER,
            Error::DegenerateCluster { .. } => EXIT_FORMULA,
            Error::Json(_) => EXIT_CONFIG,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_DISCRETIZATION,
        };
        let mut message = e.to_string();
        if let Error::DegenerateCluster { .. } = e {
            message.push_str("; set perturb.overlap_matching = true to follow the branches by eigenvector overlap");
        }
        Self { code, message }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_IO, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Where and how outputs are written.
pub struct Output {
    pub dir: PathBuf,
    pub timestamp: bool,
}

impl Output {
    fn prepare(&self) -> CliResult<()> {
        fs::create_dir_all(&self.dir)?;
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn stamp() -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }

    /// CSV body, preceded by a `# generated_at_unix=…` line unless disabled.
    fn write_csv(&self, name: &str, body: &[u8]) -> CliResult<PathBuf> {
        self.prepare()?;
        let mut bytes = Vec::new();
        if self.timestamp {
            bytes.extend_from_slice(format!("# generated_at_unix={}\n", Self::stamp()).as_bytes());
        }
        bytes.extend_from_slice(body);
        let path = self.path(name);
        fs::write(&path, bytes)?;
        Ok(path)
    }

    /// Pretty JSON with sorted keys; a `generated_at_unix` key is added to
    /// objects unless disabled.
    fn write_json(&self, name: &str, value: Value) -> CliResult<String> {
        self.prepare()?;
        let mut value = value;
        if self.timestamp {
            if let Value::Object(map) = &mut value {
                map.insert("generated_at_unix".into(), json!(Self::stamp()));
            }
        }
        let text = serde_json::to_string_pretty(&value).map_err(Error::from)? + "\n";
        fs::write(self.path(name), &text)?;
        Ok(text)
    }
}

fn solve(op: &toruslab::WeightOperator, m: usize, cfg: &Config) -> CliResult<Vec<EigenPair>> {
    Ok(lowest_eigenpairs_with(op, m, &cfg.solver_options())?)
}

fn spectra_for(metric: &InvariantMetric, weights: &[Weight], cfg: &Config) -> CliResult<Vec<(Weight, Vec<EigenPair>)>> {
    weights
        .iter()
        .map(|w| {
            let op = assemble_weight_operator(metric, w)?;
            Ok((w.clone(), solve(&op, cfg.m, cfg)?))
        })
        .collect()
}

fn values(pairs: &[EigenPair]) -> Vec<f64> {
    pairs.iter().map(|p| p.lambda).collect()
}

/// Eigenvalue tables per weight: `spectrum.csv` and `clusters.json`.
pub fn cmd_spectrum(cfg: &Config, out: &Output) -> CliResult<String> {
    let metric = cfg.metric()?;
    let spectra = spectra_for(&metric, &cfg.weights(), cfg)?;
    let mut body = Vec::new();
    write_eigenpairs_csv(&mut body, &spectra)?;
    out.write_csv("spectrum.csv", &body)?;
    let tables: Vec<Value> = spectra
        .iter()
        .map(|(w, pairs)| {
            json!({
                "weight": w,
                "clusters": cluster_multiplicities(&values(pairs), cfg.solver.cluster_tol, w.is_zero()),
            })
        })
        .collect();
    out.write_json("clusters.json", json!({ "spectra": tables }))?;
    let mut summary = String::new();
    for (w, pairs) in &spectra {
        let vals: Vec<String> = pairs.iter().map(|p| format!("{:.10}", p.lambda)).collect();
        summary.push_str(&format!("weight {w}: {}\n", vals.join(" ")));
    }
    Ok(summary)
}

fn smooth_field(n: usize, kx: f64, ky: f64, phase: f64, offset: f64) -> Vec<f64> {
    let dx = std::f64::consts::TAU / n as f64;
    (0..n * n)
        .map(|p| {
            let (i, j) = ((p % n) as f64, (p / n) as f64);
            offset + (kx * i * dx + phase).sin() * (ky * j * dx).cos()
        })
        .collect()
}

fn build_path(check: &config::CheckSpec, metric: &InvariantMetric) -> toruslab::Result<PerturbationPath> {
    use config::CheckPath::*;
    let n = metric.config.resolution;
    let scaled = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| x * check.scale).collect() };
    if check.scale != 1.0 && matches!(check.path, RankOneVertical | MixedVertical) {
        return Err(Error::InvalidConfig("scale applies only to split_rescale and mixed_xy checks".into()));
    }
    let kind = match check.path {
        RankOneVertical => PathKind::RankOneVertical { j: check.j },
        MixedVertical => PathKind::MixedVertical { j: check.j, k: check.k },
        SplitRescale => PathKind::SplitRescale {
            a_dot: scaled(smooth_field(n, 1.0, 1.0, 0.0, 0.3)),
            b_dot: scaled(smooth_field(n, 2.0, 1.0, 0.5, 0.2)),
        },
        MixedXy => {
            let a = scaled(smooth_field(n, 1.0, 2.0, 0.2, 0.1));
            let b = scaled(smooth_field(n, 2.0, 1.0, 1.0, -0.2));
            PathKind::MixedXY {
                x: a.into_iter().zip(b).map(|(p, q)| [p, q]).collect(),
                j: check.j,
            }
        }
    };
    PerturbationPath::new(metric.clone(), kind)
}

fn default_checks(d: usize) -> Vec<config::CheckSpec> {
    use config::CheckPath::*;
    let mut paths = vec![RankOneVertical, SplitRescale, MixedXy];
    if d >= 2 {
        paths.push(MixedVertical);
    }
    paths
        .into_iter()
        .map(|path| config::CheckSpec {
            path,
            weight: vec![1; d],
            index: 0,
            j: 0,
            k: 1,
            scale: 1.0,
        })
        .collect()
}

fn path_name(p: config::CheckPath) -> &'static str {
    use config::CheckPath::*;
    match p {
        RankOneVertical => "rank_one_vertical",
        MixedVertical => "mixed_vertical",
        SplitRescale => "split_rescale",
        MixedXy => "mixed_xy",
    }
}

fn random_section(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn pairing_reports(cfg: &Config, metric: &InvariantMetric) -> CliResult<Vec<VariationReport>> {
    let spec = &cfg.perturb;
    let d = metric.fiber_dim();
    let n = metric.config.resolution;
    let np = n * n;
    let alpha = Weight::new(vec![1; d]);
    let mut rng = ChaCha8Rng::seed_from_u64(metric.provenance.as_ref().map_or(0, |p| p.seed) ^ 0x9e37_79b9);
    let mut reports = Vec::new();
    let step = spec.pairing_step;
    let s = spec.pairing_scale;
    for k in 0..spec.pairing_samples {
        let (u, v) = (random_section(&mut rng, np), random_section(&mut rng, np));
        let a_dot: Vec<f64> = (0..np).map(|_| s * rng.gen_range(-1.0..1.0)).collect();
        let b_dot: Vec<f64> = (0..np).map(|_| s * rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<[f64; 2]> = (0..np).map(|_| [s * rng.gen_range(-1.0..1.0), s * rng.gen_range(-1.0..1.0)]).collect();
        let dim = d + 2;
        let mut g_dot = vec![0.0; np * dim * dim];
        for p in 0..np {
            for r in 0..dim {
                for c in r..dim {
                    let val = s * rng.gen_range(-0.3..0.3);
                    g_dot[p * dim * dim + r * dim + c] = val;
                    g_dot[p * dim * dim + c * dim + r] = val;
                }
            }
        }
        let split = PerturbationPath::new(metric.clone(), PathKind::SplitRescale { a_dot: a_dot.clone(), b_dot: b_dot.clone() })?;
        let xy = PerturbationPath::new(metric.clone(), PathKind::MixedXY { x: x.clone(), j: 0 })?;
        let general = PerturbationPath::new(metric.clone(), PathKind::GeneralSymmetric { g_dot })?;
        reports.push(VariationReport::new(
            format!("pairing:general:{k}"),
            laplacian_variation_pairing(metric, &alpha, &u, &v, &general.velocity())?,
            fd_pairing(&general, &alpha, &u, &v, step)?,
            step,
        ));
        reports.push(VariationReport::new(
            format!("pairing:split_rescale:{k}"),
            split_rescale_pairing(metric, &alpha, &u, &v, &a_dot, &b_dot)?,
            fd_pairing(&split, &alpha, &u, &v, step)?,
            step,
        ));
        reports.push(VariationReport::new(
            format!("pairing:mixed_xy:{k}"),
            mixed_xy_pairing(metric, &alpha, &u, &v, &x, 0)?,
            fd_pairing(&xy, &alpha, &u, &v, step)?,
            step,
        ));
    }
    Ok(reports)
}

/// Runs the velocity and pairing battery; `perturb_check.csv`. Fails with
/// exit code 3 when a row exceeds the threshold.
pub fn cmd_perturb_check(cfg: &Config, out: &Output) -> CliResult<String> {
    let metric = cfg.metric()?;
    let checks = cfg.perturb.checks.clone().unwrap_or_else(|| default_checks(metric.fiber_dim()));
    let branch = BranchOptions {
        steps: cfg.perturb.steps,
        m: 4,
        overlap_matching: cfg.perturb.overlap_matching,
        solver: cfg.solver_options(),
    };
    let mut reports = Vec::new();
    for check in &checks {
        let alpha = Weight::new(check.weight.clone());
        let op = assemble_weight_operator(&metric, &alpha)?;
        let pairs = solve(&op, (check.index + 4).max(cfg.m), cfg)?;
        let path = build_path(check, &metric)?;
        let id = format!("lambda_dot:{}:{}:{}", path_name(check.path), alpha, check.index);
        reports.push(check_eigenvalue_velocity(&id, &path, &alpha, &pairs, check.index, &branch)?);
    }
    reports.extend(pairing_reports(cfg, &metric)?);
    let mut body = Vec::new();
    write_reports_csv(&mut body, &reports)?;
    out.write_csv("perturb_check.csv", &body)?;
    let failing: Vec<&VariationReport> = reports.iter().filter(|r| !(r.rel_err <= cfg.perturb.threshold)).collect();
    let summary: String = reports
        .iter()
        .map(|r| format!("{:<40} rel_err {:.3e}\n", r.formula_id, r.rel_err))
        .collect();
    if failing.is_empty() {
        Ok(summary)
    } else {
        let rows: Vec<String> = failing
            .iter()
            .map(|r| format!("{} analytic {} numeric {} rel_err {}", r.formula_id, fmt_f64(r.analytic), fmt_f64(r.numeric), fmt_f64(r.rel_err)))
            .collect();
        Err(CliError::new(
            EXIT_FORMULA,
            format!("{} formula check(s) above rel_err {}:\n{}", failing.len(), cfg.perturb.threshold, rows.join("\n")),
        ))
    }
}

fn auto_n_theta(n: usize, euler: i64) -> usize {
    n * euler.unsigned_abs().max(1) as usize
}

/// Nodal topology of one eigenfield: `nodal.json`, optionally `signs.bin`.
pub fn cmd_nodal(cfg: &Config, out: &Output) -> CliResult<String> {
    if cfg.bundle.fiber_dim != 1 {
        return Err(Error::Unsupported("nodal topology is reconstructed for a circle fiber only".into()).into());
    }
    let spec = &cfg.nodal;
    let n = cfg.bundle.resolution;
    let e = cfg.bundle.euler;
    let n_theta = spec.n_theta.unwrap_or_else(|| auto_n_theta(n, e));
    let phi = if spec.constant_section {
        cfg.bundle_config(n)?;
        vec![Complex64::new(1.0, 0.0); n * n]
    } else {
        // reject a bad angular grid before paying for the solve
        reconstruct_total_space(&vec![Complex64::new(0.0, 0.0); n * n], spec.alpha, e, n_theta)?;
        let metric = cfg.metric()?;
        let op = assemble_weight_operator(&metric, &Weight::scalar(spec.alpha))?;
        solve(&op, spec.index + 2, cfg)?.swap_remove(spec.index).vector
    };
    let report = nodal_report(&phi, spec.alpha, e, n_theta, spec.zero_tol)?;
    if spec.sign_dump {
        let field = reconstruct_total_space(&phi, spec.alpha, e, n_theta)?;
        let mut buf = Vec::new();
        write_sign_dump(&field, spec.zero_tol, &mut buf)?;
        out.prepare()?;
        fs::write(out.path("signs.bin"), buf)?;
    }
    out.write_json("nodal.json", serde_json::to_value(&report).map_err(Error::from)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleRow {
    pub seed: u64,
    pub collisions: usize,
    pub max_cluster_size: usize,
    pub domain_count: Option<usize>,
    pub nodal_components: Option<usize>,
    pub regular_margin: Option<f64>,
    pub min_orbit_norm: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSummary {
    pub rows: Vec<EnsembleRow>,
    pub size: usize,
    pub collision_fraction: Option<f64>,
    pub simple_fraction: Option<f64>,
    pub two_domain_fraction: Option<f64>,
    pub median_collisions: Option<f64>,
    pub median_regular_margin: Option<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

fn fraction(rows: &[EnsembleRow], pred: impl Fn(&EnsembleRow) -> bool) -> Option<f64> {
    (!rows.is_empty()).then(|| rows.iter().filter(|r| pred(r)).count() as f64 / rows.len() as f64)
}

impl EnsembleSummary {
    pub fn from_rows(rows: Vec<EnsembleRow>) -> Self {
        let nodal: Vec<&EnsembleRow> = rows.iter().filter(|r| r.domain_count.is_some()).collect();
        let two_domain_fraction =
            (!nodal.is_empty()).then(|| nodal.iter().filter(|r| r.domain_count == Some(2)).count() as f64 / nodal.len() as f64);
        Self {
            size: rows.len(),
            collision_fraction: fraction(&rows, |r| r.collisions > 0),
            simple_fraction: fraction(&rows, |r| r.max_cluster_size <= 1),
            two_domain_fraction,
            median_collisions: median(rows.iter().map(|r| r.collisions as f64).collect()),
            median_regular_margin: median(rows.iter().filter_map(|r| r.regular_margin).collect()),
            rows,
        }
    }
}

/// One ensemble member: spectra of all weights, collisions, and the nodal
/// data of the lowest weight-1 eigenfield.
pub fn ensemble_row(cfg: &Config, seed: u64) -> CliResult<EnsembleRow> {
    let n = cfg.bundle.resolution;
    let metric = cfg.metric_at(n, seed)?;
    let weights = cfg.weights();
    let spectra = spectra_for(&metric, &weights, cfg)?;
    let vals: Vec<Vec<f64>> = spectra.iter().map(|(_, p)| values(p)).collect();
    let collisions = collisions_between(&weights, &vals, cfg.ensemble.collision_tol).len();
    let max_cluster_size = spectra
        .iter()
        .filter(|(w, _)| !w.is_zero())
        .flat_map(|(_, p)| cluster_multiplicities(&values(p), cfg.solver.cluster_tol, false))
        .map(|c| c.complex_multiplicity)
        .max()
        .unwrap_or(0);
    let mut row = EnsembleRow {
        seed,
        collisions,
        max_cluster_size,
        domain_count: None,
        nodal_components: None,
        regular_margin: None,
        min_orbit_norm: None,
    };
    if cfg.ensemble.nodal && cfg.bundle.fiber_dim == 1 {
        let one = Weight::scalar(1);
        let phi = match spectra.iter().find(|(w, _)| *w == one) {
            Some((_, p)) => p[0].vector.clone(),
            None => solve(&assemble_weight_operator(&metric, &one)?, 2, cfg)?.swap_remove(0).vector,
        };
        let e = cfg.bundle.euler;
        let report = nodal_report(&phi, 1, e, auto_n_theta(n, e), cfg.nodal.zero_tol)?;
        row.domain_count = Some(report.domain_count);
        row.nodal_components = Some(report.nodal_components);
        row.regular_margin = report.regular_margin;
        row.min_orbit_norm = Some(report.min_orbit_norm);
    }
    Ok(row)
}

/// Ensemble statistics over seeds `metric.seed + i`: `ensemble.csv` and
/// `ensemble.json`.
pub fn cmd_ensemble(cfg: &Config, out: &Output) -> CliResult<String> {
    let base = cfg.metric.seed;
    let rows: Vec<EnsembleRow> = (0..cfg.ensemble.size as u64)
        .into_par_iter()
        .map(|i| ensemble_row(cfg, base.wrapping_add(i)))
        .collect::<CliResult<_>>()?;
    let summary = EnsembleSummary::from_rows(rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    let opt_f = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let opt_u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    w.write_record(["seed", "collisions", "max_cluster_size", "domain_count", "nodal_components", "regular_margin", "min_orbit_norm"])
        .map_err(csv_error)?;
    for r in &summary.rows {
        w.write_record([
            r.seed.to_string(),
            r.collisions.to_string(),
            r.max_cluster_size.to_string(),
            opt_u(r.domain_count),
            opt_u(r.nodal_components),
            opt_f(r.regular_margin),
            opt_f(r.min_orbit_norm),
        ])
        .map_err(csv_error)?;
    }
    let body = w.into_inner().map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
    out.write_csv("ensemble.csv", &body)?;
    out.write_json("ensemble.json", serde_json::to_value(&summary).map_err(Error::from)?)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::new(EXIT_IO, e.to_string())
}

/// Observed order between consecutive rows: `log(e₀/e₁) / log(N₁/N₀)`.
pub fn observed_orders(resolutions: &[usize], errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|k| {
            (k > 0).then(|| (errors[k - 1] / errors[k]).ln() / (resolutions[k] as f64 / resolutions[k - 1] as f64).ln())
        })
        .collect()
}

/// Refinement study; `convergence.csv` plus `convergence.json`.
pub fn cmd_convergence(cfg: &Config, out: &Output) -> CliResult<String> {
    use config::Scenario::*;
    let spec = &cfg.convergence;
    let seed = cfg.metric.seed;
    let mut w = csv::Writer::from_writer(Vec::new());
    let summary = match spec.scenario {
        Eigenvalue | VanishOnOrbit => {
            let alpha = Weight::new(spec.weight.clone());
            let mut measured = Vec::new();
            for &n in &spec.resolutions {
                let metric = cfg.metric_at(n, seed)?;
                let op = assemble_weight_operator(&metric, &alpha)?;
                let pairs = solve(&op, spec.index + 2, cfg)?;
                measured.push(match spec.scenario {
                    Eigenvalue => pairs[spec.index].lambda,
                    _ => vanish_on_orbit(&pairs[0].vector),
                });
            }
            let errors: Vec<f64> = match spec.scenario {
                Eigenvalue => measured.iter().map(|v| (v - spec.exact).abs()).collect(),
                _ => measured.clone(),
            };
            let orders = observed_orders(&spec.resolutions, &errors);
            w.write_record(["N", "value", "error", "order"]).map_err(csv_error)?;
            for k in 0..measured.len() {
                w.write_record([
                    spec.resolutions[k].to_string(),
                    fmt_f64(measured[k]),
                    fmt_f64(errors[k]),
                    orders[k].map(fmt_f64).unwrap_or_default(),
                ])
                .map_err(csv_error)?;
            }
            json!({
                "scenario": spec.scenario,
                "resolutions": spec.resolutions,
                "values": measured,
                "orders": orders,
                "monotone_decreasing": errors.windows(2).all(|p| p[1] < p[0]),
            })
        }
        Weyl => {
            let n = *spec
                .resolutions
                .last()
                .ok_or_else(|| CliError::new(EXIT_CONFIG, "convergence.resolutions is empty"))?;
            let metric = cfg.metric_at(n, seed)?;
            w.write_record(["lambda", "invariant", "total", "truncated"]).map_err(csv_error)?;
            let mut inv = Vec::new();
            let mut tot = Vec::new();
            for &lambda in &spec.lambdas {
                let c = weyl_counts(&metric, lambda, spec.alpha_max, spec.trust_fraction)?;
                w.write_record([fmt_f64(lambda), c.invariant.to_string(), c.total.to_string(), c.truncated.to_string()])
                    .map_err(csv_error)?;
                inv.push(c.invariant as f64);
                tot.push(c.total as f64);
            }
            json!({
                "scenario": spec.scenario,
                "N": n,
                "lambdas": spec.lambdas,
                "invariant_slope": log_log_slope(&spec.lambdas, &inv),
                "total_slope": log_log_slope(&spec.lambdas, &tot),
            })
        }
    };
    let body = w.into_inner().map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
    out.write_csv("convergence.csv", &body)?;
    out.write_json("convergence.json", summary)
}

pub fn load_config(path: Option<&Path>) -> CliResult<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::new(EXIT_CONFIG, format!("cannot read {}: {e}", p.display())))?;
            Config::parse(&text).map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_a_power_law() {
        let n = [16, 32, 64];
        let e: Vec<f64> = n.iter().map(|&k| 3.0 / (k as f64).powi(2)).collect();
        let o = observed_orders(&n, &e);
        assert!(o[0].is_none());
        assert!((o[2].unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_ensemble_has_no_aggregates() {
        let s = EnsembleSummary::from_rows(vec![]);
        assert_eq!(s.size, 0);
        assert!(s.collision_fraction.is_none());
    }
}
