//! `qtf`: simulation, twin runs, audits and Littlewood–Paley checks from a
//! configuration file.
//!
//! Exit status: 0 success, 1 i/o failure, 2 usage or configuration error,
//! 3 numerical abort, 4 audit failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{AuditKind, AuditOptions, Control, LpOptions};
use config::RunConfig;
use error::CliError;
use output::{OutDir, Provenance};

#[derive(Debug, Parser)]
#[command(name = "qtf", version, about = "Nematic liquid-crystal flow solver and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file; every key has a default when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Replaces initial.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Replaces output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; falls back to QTF_THREADS, then to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// `section.key=value`, applied after the file; repeatable.
    #[arg(long = "override", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the configured system and write diagnostics.csv.
    Simulate,
    /// Co-evolve the state and a perturbed copy and write twin.csv.
    Twin,
    /// Run a numerical audit and write audit_<kind>.csv.
    Audit {
        kind: AuditKind,
        /// Number of consecutive seeds starting at initial.seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, value_enum, default_value_t = Control::None)]
        control: Control,
        /// Scale factor of the scaling audit (a power of two).
        #[arg(long, default_value_t = 2)]
        delta: u32,
        /// Largest accepted discrepancy of the scaling audit.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run an inequality ensemble and compare against frozen thresholds.
    LpCheck {
        /// bernstein, bernstein-derivative, commutator, product-law, sqrt-n, l2p or all.
        check: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Threshold file (check-name,grid,trials,min-ratio,max-ratio); defaults to the frozen one.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Product-law exponent s.
        #[arg(long, requires = "t", allow_hyphen_values = true)]
        s: Option<f64>,
        /// Product-law exponent t.
        #[arg(long, requires = "s", allow_hyphen_values = true)]
        t: Option<f64>,
        /// Also write the observed ratios as a threshold file.
        #[arg(long)]
        freeze: Option<PathBuf>,
    },
    /// Print the header and norms of a snapshot file.
    SnapshotInfo { path: PathBuf },
}

fn thread_count(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("QTF_THREADS") {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("QTF_THREADS must be a positive integer, got '{v}'")))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if n == 0 {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Command::SnapshotInfo { path } = &cli.command {
        return commands::snapshot_info(path);
    }
    let threads = thread_count(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;

    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("initial.seed={seed}"));
    }
    let cfg = RunConfig::resolve(cli.config.as_deref(), &overrides)?;
    if cfg.model.xi_exceeds_threshold() {
        log::warn!("|xi| = {} exceeds the advisory threshold xi0 = {}", cfg.model.xi.abs(), cfg.model.xi0);
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let out = OutDir::create(&dir, Provenance { config_hash: cfg.hash(), threads })?;
    out.write_config(&cfg.canonical())?;
    log::info!("config hash {} with {threads} threads, writing to {}", out.prov.config_hash, dir.display());

    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Twin => commands::twin(&cfg, &out),
        Command::Audit { kind, seeds, control, delta, tol } => {
            commands::audit(&cfg, &out, &AuditOptions { kind, seeds, control, delta, tol })
        }
        Command::LpCheck { check, trials, thresholds, s, t, freeze } => commands::lp_check(
            &cfg,
            &out,
            &LpOptions { check, trials, thresholds, product_exponents: s.zip(t), freeze },
        ),
        Command::SnapshotInfo { .. } => unreachable!("handled above"),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qtf: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
