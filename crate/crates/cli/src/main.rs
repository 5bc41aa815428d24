use clap::{Parser, Subcommand};
use grushin::runner::{self, Experiment, Flags, RunConfig, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run Grushin spectral experiments from a TOML config.
///
/// Values in the config file take precedence over flags, and flags over the built-in
/// defaults. The output directory may also come from GRUSHIN_OUT_DIR.
#[derive(Debug, Parser)]
#[command(name = "grushin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config with optional seed, out_dir, threads and [[experiments]] tables.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; overrides GRUSHIN_OUT_DIR.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Run every experiment listed in the config.
    Run,
    /// Hermite orthonormality and eigen-relation residuals.
    BasisCheck,
    /// Mode and dyadic-block decomposition of a random datum.
    Decompose,
    /// Kernel decay fit for one (σ, d).
    DispersionScan,
    /// Monte-Carlo Strichartz quotients across dyadic blocks.
    StrichartzScan,
    /// Quotients of a datum and its parabolic rescalings.
    ScalingCheck,
    /// Traveling-wave datum in one y dimension.
    Counterexample,
    /// Nonlinear Cauchy problem with conservation ledger.
    NlsRun,
    /// Admissible triples and Sobolev gaps.
    AdmissibilityTable,
    /// Mode-constant sums against the block power law.
    Summability,
    /// Per-mode Strichartz quotients in one block.
    ModewiseCheck,
}

impl Command {
    /// Experiment kind this subcommand restricts to, if any.
    fn kind(self) -> Option<&'static str> {
        let k = match self {
            Command::Run => return None,
            Command::BasisCheck => "basis-check",
            Command::Decompose => "decompose",
            Command::DispersionScan => "dispersion-scan",
            Command::StrichartzScan => "strichartz-scan",
            Command::ScalingCheck => "scaling-check",
            Command::Counterexample => "counterexample",
            Command::NlsRun => "nls-run",
            Command::AdmissibilityTable => "admissibility-table",
            Command::Summability => "summability",
            Command::ModewiseCheck => "modewise-check",
        };
        Some(k)
    }
}

fn load(cli: &Cli) -> Result<RunConfig, RunError> {
    let flags = Flags { seed: cli.seed, out_dir: cli.out.clone(), threads: cli.threads };
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text, &path.display().to_string(), &flags)?
        }
        None => RunConfig::from_flags(&flags, vec![])?,
    };
    if let Some(kind) = cli.command.kind() {
        if cfg.experiments.is_empty() {
            cfg.experiments = vec![Experiment::default_of(kind).expect("subcommands mirror the kinds")];
            cfg.lines = vec![0];
        }
        for (e, line) in cfg.experiments.iter().zip(&cfg.lines) {
            if e.kind() != kind {
                return Err(RunError::Config(format!(
                    "{}:{line}: experiment of kind {} under the {kind} subcommand",
                    cfg.source,
                    e.kind()
                )));
            }
        }
    }
    Ok(cfg)
}

fn set_threads(n: Option<usize>) -> Result<(), RunError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| {
        set_threads(cfg.threads)?;
        runner::run(&cfg)
    });
    match result {
        Ok(out) => {
            for rec in &out.manifest.experiments {
                let status = if rec.ok { "ok" } else { "FAILED" };
                println!("{:02} {:<20} {status:<6} {:.2}s", rec.index, rec.kind, rec.wall_seconds);
            }
            println!("manifest: {}", out.manifest_path.display());
            for f in &out.failures {
                eprintln!("numerical failure: {f}");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
