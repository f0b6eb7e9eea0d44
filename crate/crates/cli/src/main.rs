//! Experiment CLI: figure demos, the AuReC sweep, and the verification gate.
//!
//! Exit codes: 0 success, 1 config error, 2 I/O error, 3 verification
//! failure. All commands are deterministic given the seed; `--workers`
//! affects wall time only.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use reject_gate_core::eval::{self, FigureKind};
use reject_gate_core::report;

mod config_file;
mod verify;

/// Seed used when neither `--seed`, `REJECT_GATE_SEED`, nor a config file
/// provides one.
const DEFAULT_SEED: u64 = 12345;

#[derive(Parser)]
#[command(name = "reject-gate", version, about = "Uncertainty-gated reject-option prediction experiments")]
struct Cli {
    /// Master seed; overrides REJECT_GATE_SEED and the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config file's out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the experiment sweep (wall time only, results are
    /// identical for any value).
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Skip SVG rendering; CSV is the canonical artifact.
    #[arg(long, global = true)]
    no_svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one demo table (and chart) to the output directory
    Demo {
        #[arg(value_enum)]
        which: Figure,
    },
    /// Run the AuReC experiment described by a config file
    Experiment {
        config: PathBuf,
        /// Write the stock desk-scale config to the given path and exit.
        #[arg(long)]
        init: bool,
    },
    /// Run the oracle verification suite
    Verify,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    Fig1,
    Fig2a,
    Fig2b,
}

impl From<Figure> for FigureKind {
    fn from(f: Figure) -> FigureKind {
        match f {
            Figure::Fig1 => FigureKind::Fig1,
            Figure::Fig2a => FigureKind::Fig2a,
            Figure::Fig2b => FigureKind::Fig2b,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Demo { which } => cmd_demo(&cli, (*which).into()),
        Command::Experiment { config, init: true } => cmd_init_config(config),
        Command::Experiment { config, init: false } => cmd_experiment(&cli, config),
        Command::Verify => cmd_verify(),
    };
    match code {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

/// Seed precedence: --seed, then REJECT_GATE_SEED, then the config value.
fn resolve_seed(cli_seed: Option<u64>, config_seed: u64) -> Result<u64, ExitCode> {
    if let Some(seed) = cli_seed {
        return Ok(seed);
    }
    match std::env::var("REJECT_GATE_SEED") {
        Ok(raw) => raw.trim().parse().map_err(|_| {
            eprintln!("config error: REJECT_GATE_SEED must be a 64-bit integer, got `{raw}`");
            ExitCode::from(1)
        }),
        Err(_) => Ok(config_seed),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExitCode> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            if let Err(e) = std::fs::create_dir_all(parent) {
                eprintln!("i/o error: cannot create {}: {e}", parent.display());
                return Err(ExitCode::from(2));
            }
        }
    }
    std::fs::write(path, contents).map_err(|e| {
        eprintln!("i/o error: cannot write {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn cmd_demo(cli: &Cli, which: FigureKind) -> Result<(), ExitCode> {
    let seed = resolve_seed(cli.seed, DEFAULT_SEED)?;
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let rows = eval::figure_demo_data(which, seed).map_err(|e| {
        eprintln!("config error: {e}");
        ExitCode::from(1)
    })?;
    let csv_path = out_dir.join(format!("{}.csv", which.name()));
    write_file(&csv_path, &report::figure_csv(&rows))?;
    println!("wrote {}", csv_path.display());
    if !cli.no_svg {
        let title = match which {
            FigureKind::Fig1 => "Aleatoric rule: accept where v(x) <= 1",
            FigureKind::Fig2a => "Total-uncertainty rule: accept where T(x, D) <= 2",
            FigureKind::Fig2b => "Epistemic rule: accept where E(x, D) <= 1",
        };
        let svg_path = out_dir.join(format!("{}.svg", which.name()));
        write_file(&svg_path, &report::figure_svg(&rows, title))?;
        println!("wrote {}", svg_path.display());
    }
    Ok(())
}

fn cmd_init_config(path: &Path) -> Result<(), ExitCode> {
    if path.exists() {
        eprintln!("i/o error: {} already exists, refusing to overwrite", path.display());
        return Err(ExitCode::from(2));
    }
    let text = config_file::serialize(&reject_gate_core::eval::ExperimentConfig::desk_default());
    write_file(path, &text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_experiment(cli: &Cli, config_path: &Path) -> Result<(), ExitCode> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        eprintln!("i/o error: cannot read {}: {e}", config_path.display());
        ExitCode::from(2)
    })?;
    let mut config = config_file::parse(&text).map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(1)
    })?;
    config.master_seed = resolve_seed(cli.seed, config.master_seed)?;
    if let Some(out) = &cli.out {
        config.out_dir = out.display().to_string();
    }

    let table = eval::run_experiment(&config, cli.workers).map_err(|e| {
        eprintln!("config error: {e}");
        ExitCode::from(1)
    })?;

    let out_dir = PathBuf::from(&config.out_dir);
    let csv_path = out_dir.join("aurec.csv");
    write_file(&csv_path, &report::experiment_csv(&table))?;
    if !cli.no_svg {
        write_file(&out_dir.join("aurec.svg"), &report::experiment_svg(&table))?;
    }

    println!(
        "{:>6}  {:>17}  {:>12}  {:>12}  {:>12}  {:>7}",
        "m", "method", "mean_aurec", "q40", "q60", "trials"
    );
    for row in &table.rows {
        println!(
            "{:>6}  {:>17}  {:>12.6}  {:>12.6}  {:>12.6}  {:>7}",
            row.m, row.method, row.mean_aurec, row.q40, row.q60, row.trials
        );
    }
    if !table.failures.is_empty() {
        println!("{} trial(s) failed and were recorded:", table.failures.len());
        for failure in table.failures.iter().take(10) {
            println!("  m={} trial={}: {}", failure.m, failure.trial_index, failure.message);
        }
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_verify() -> Result<(), ExitCode> {
    // Test-only hook: shifts the epistemic score inside the theorem-1 check
    // so the gate can prove it notices a broken formula.
    let bias = std::env::var("REJECT_GATE_PERTURB_E")
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .unwrap_or(0.0);
    if bias != 0.0 {
        eprintln!("warning: REJECT_GATE_PERTURB_E = {bias} perturbs the epistemic score");
    }

    let results = verify::run_all(bias);
    let mut first_failure: Option<&str> = None;
    for check in &results {
        println!(
            "check {:<24} max deviation {:>12.3e} (tol {:>8.0e})  {}  [{}]",
            check.name,
            check.max_deviation,
            check.tolerance,
            if check.passed { "PASS" } else { "FAIL" },
            check.detail
        );
        if !check.passed && first_failure.is_none() {
            first_failure = Some(check.name);
        }
    }
    let deterministic = verify::determinism_spot_check();
    println!(
        "check {:<24} worker counts agree                          {}",
        "determinism",
        if deterministic { "PASS" } else { "FAIL" }
    );
    if !deterministic && first_failure.is_none() {
        first_failure = Some("determinism");
    }

    match first_failure {
        None => Ok(()),
        Some(name) => {
            eprintln!("verification failed: {name}");
            Err(ExitCode::from(3))
        }
    }
}
