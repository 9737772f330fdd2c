use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toruslab_cli::{
    cmd_convergence, cmd_ensemble, cmd_nodal, cmd_perturb_check, cmd_spectrum, load_config, CliError, Output, EXIT_CONFIG,
};

#[derive(Parser)]
#[command(name = "toruslab", version, about = "Weight-space Laplacians on torus bundles over the 2-torus")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// JSON experiment configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `metric.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "toruslab-out")]
    out: PathBuf,
    /// Omit the timestamp line from CSV files and the timestamp key from JSON.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Lowest eigenvalues per weight with cluster multiplicities.
    Spectrum,
    /// Eigenvalue-velocity and pairing formulas against finite differences.
    PerturbCheck,
    /// Nodal domains of a lifted eigenfield.
    Nodal,
    /// Collision, multiplicity and nodal statistics over random metrics.
    Ensemble,
    /// Refinement study.
    Convergence,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.metric.seed = seed;
    }
    if cli.print_config {
        return Ok(cfg.to_json() + "\n");
    }
    let out = Output {
        dir: cli.out.clone(),
        timestamp: !cli.no_timestamp,
    };
    match cli.verb {
        Verb::Spectrum => cmd_spectrum(&cfg, &out),
        Verb::PerturbCheck => cmd_perturb_check(&cfg, &out),
        Verb::Nodal => cmd_nodal(&cfg, &out),
        Verb::Ensemble => cmd_ensemble(&cfg, &out),
        Verb::Convergence => cmd_convergence(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
