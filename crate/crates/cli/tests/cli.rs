use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Sandbox(PathBuf);

impl Sandbox {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("toruslab-cli-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Self(dir)
    }

    fn run(&self, verb: &str, config: &str, extra: &[&str]) -> Output {
        let cfg = self.0.join("config.json");
        std::fs::write(&cfg, config).unwrap();
        Command::new(env!("CARGO_BIN_EXE_toruslab"))
            .arg(verb)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(self.out())
            .args(extra)
            .output()
            .unwrap()
    }

    fn out(&self) -> PathBuf {
        self.0.join("out")
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.out().join(name)).unwrap()).unwrap()
    }
}

impl Drop for Sandbox {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let text = std::fs::read_to_string(path).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes()).records().map(Result::unwrap).collect()
}

#[test]
fn malformed_config_exits_64_with_offset() {
    let s = Sandbox::new("malformed");
    let out = s.run("spectrum", "{\"bundle\": {\"euler\": }}", &[]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 21"));
    let unknown = s.run("spectrum", "{\"bundel\": {}}", &[]);
    assert_eq!(unknown.status.code(), Some(64));
    let usage = Command::new(env!("CARGO_BIN_EXE_toruslab")).arg("no-such-verb").output().unwrap();
    assert_eq!(usage.status.code(), Some(64));
}

#[test]
fn indivisible_angular_resolution_exits_65() {
    let s = Sandbox::new("indivisible");
    let out = s.run("nodal", r#"{"bundle":{"euler":2,"resolution":8},"nodal":{"n_theta":12}}"#, &[]);
    assert_eq!(out.status.code(), Some(65), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn degenerate_cluster_without_matching_exits_3() {
    let s = Sandbox::new("degenerate");
    // the first excited weight-0 level of the flat torus is fourfold
    let config = r#"{"bundle":{"resolution":8},"perturb":{"checks":[{"path":"rank_one_vertical","weight":[0],"index":1}],"pairing_samples":0}}"#;
    let out = s.run("perturb-check", config, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overlap_matching"));
    let matched = config.replace("\"pairing_samples\":0", "\"pairing_samples\":0,\"overlap_matching\":true");
    assert_eq!(s.run("perturb-check", &matched, &[]).status.code(), Some(0));
}

#[test]
fn flat_spectrum_rows() {
    let s = Sandbox::new("spectrum");
    let out = s.run("spectrum", r#"{"bundle":{"resolution":12},"weights":[[0],[1],[-1]],"m":5}"#, &["--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&s.out().join("spectrum.csv"));
    assert_eq!(rows.len(), 15);
    let ground = |w: &str| rows.iter().find(|r| &r[0] == w && &r[1] == "0").unwrap()[2].parse::<f64>().unwrap();
    assert!(ground("0").abs() < 1e-10);
    assert!((ground("1") - 1.0).abs() < 1e-10);
    assert!((ground("-1") - 1.0).abs() < 1e-10);
    let clusters = s.json("clusters.json");
    assert_eq!(clusters["spectra"][0]["clusters"][1]["complex_multiplicity"], 4);
}

#[test]
fn landau_ground_value() {
    let s = Sandbox::new("landau");
    let out = s.run("spectrum", r#"{"bundle":{"euler":1,"resolution":32},"weights":[[1]],"m":2}"#, &["--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&s.out().join("spectrum.csv"));
    let lambda: f64 = rows[0][2].parse().unwrap();
    assert!((lambda - (1.0 + 1.0 / (2.0 * std::f64::consts::PI))).abs() < 2e-3, "{lambda}");
}

#[test]
fn zero_velocity_battery_reports_zeros() {
    let s = Sandbox::new("zero");
    let config = r#"{"bundle":{"resolution":8},"perturb":{"checks":[{"path":"split_rescale","weight":[1],"scale":0.0},{"path":"mixed_xy","weight":[1],"scale":0.0}],"pairing_scale":0.0,"pairing_samples":1}}"#;
    let out = s.run("perturb-check", config, &["--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(s.out().join("perturb_check.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty());
    for r in rows {
        assert!(r[col("analytic")].parse::<f64>().unwrap().abs() < 1e-8, "{r:?}");
        assert!(r[col("numeric")].parse::<f64>().unwrap().abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn empty_ensemble_is_fine() {
    let s = Sandbox::new("empty");
    let out = s.run("ensemble", r#"{"ensemble":{"size":0}}"#, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(s.json("ensemble.json")["size"], 0);
}

#[test]
fn constructed_collision_is_counted() {
    let s = Sandbox::new("collision");
    let config = r#"{"bundle":{"resolution":24},"metric":{"fiber_gram":[[3.0]]},"weights":[[1],[2]],"m":4,"ensemble":{"size":2,"collision_tol":1e-2,"nodal":false}}"#;
    let out = s.run("ensemble", config, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(s.json("ensemble.json")["collision_fraction"], 1.0);
}

#[test]
fn constant_section_on_trivial_bundle() {
    let s = Sandbox::new("section");
    let out = s.run("nodal", r#"{"bundle":{"resolution":8},"nodal":{"constant_section":true,"sign_dump":true}}"#, &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = s.json("nodal.json");
    assert_eq!(report["domain_count"], 2);
    assert_eq!(report["nodal_components"], 2);
    assert_eq!(report["min_orbit_norm"], 1.0);
    assert!(s.out().join("signs.bin").exists());
}

#[test]
fn print_config_round_trips() {
    let s = Sandbox::new("print");
    let out = s.run("spectrum", r#"{"m":7,"bundle":{"euler":-1}}"#, &["--print-config", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let printed = String::from_utf8(out.stdout).unwrap();
    let cfg = toruslab_cli::Config::parse(&printed).unwrap();
    assert_eq!((cfg.m, cfg.bundle.euler, cfg.metric.seed), (7, -1, 9));
    assert_eq!(cfg.to_json() + "\n", printed);
    assert!(!s.out().exists());
}
