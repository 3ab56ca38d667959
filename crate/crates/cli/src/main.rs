use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermion_tdhf::harness::{self, output, Check, ExperimentConfig};
use fermion_tdhf::Error;

#[derive(Parser)]
#[command(name = "tdhf-lab", version, about = "Exact versus time-dependent Hartree-Fock dynamics of lattice fermions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare exact N_1, N_2 with TDHF and check the short-time bound.
    ErrorBound(RunArgs),
    /// Normalized TDHF errors across mode counts at mean-field coupling.
    MeanFieldSweep(RunArgs),
    /// Distance of the exact N_m(t) from the closed form N_1^{⊗m} m!A_m.
    ClosureCheck(RunArgs),
    /// Second-order convergence of the hierarchy residual.
    BbgkyCheck(RunArgs),
    /// Invariant checks on built-in seeds.
    Selftest(OutArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads for independent cells.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Replaces the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) | Error::Json(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(&args.config)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_checks(checks: &[Check]) -> bool {
    for c in checks {
        eprintln!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    harness::all_passed(checks)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let threads = match &cli.command {
        Command::Selftest(o) => o.threads,
        Command::ErrorBound(a) | Command::MeanFieldSweep(a) | Command::ClosureCheck(a) | Command::BbgkyCheck(a) => {
            a.out.threads
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
    }
    let start = Instant::now();
    let wall = || start.elapsed().as_secs_f64();

    match cli.command {
        Command::ErrorBound(args) => {
            let cfg = load(&args)?;
            let report = harness::run_error_bound(&cfg)?;
            let text = match args.out.format {
                Format::Csv => output::rows_csv(&report.rows),
                Format::Json => output::to_json("error-bound", Some(&cfg), wall(), &report)?,
            };
            emit(args.out.out.as_deref(), &text)?;
            Ok(report_checks(&report.checks))
        }
        Command::MeanFieldSweep(args) => {
            let cfg = load(&args)?;
            let report = harness::run_mean_field_sweep(&cfg, &cfg.sizes)?;
            let text = match args.out.format {
                Format::Csv => output::sweep_csv(&report),
                Format::Json => output::to_json("mean-field-sweep", Some(&cfg), wall(), &report)?,
            };
            emit(args.out.out.as_deref(), &text)?;
            Ok(report_checks(&report.checks))
        }
        Command::ClosureCheck(args) => {
            let cfg = load(&args)?;
            let report = harness::run_closure_check(&cfg, &cfg.orders)?;
            let text = match args.out.format {
                Format::Csv => output::closure_csv(&report.rows),
                Format::Json => output::to_json("closure-check", Some(&cfg), wall(), &report)?,
            };
            emit(args.out.out.as_deref(), &text)?;
            Ok(report_checks(&report.checks))
        }
        Command::BbgkyCheck(args) => {
            let cfg = load(&args)?;
            let report = harness::run_bbgky_check(&cfg)?;
            let text = match args.out.format {
                Format::Csv => output::bbgky_csv(&report.rows),
                Format::Json => output::to_json("bbgky-check", Some(&cfg), wall(), &report)?,
            };
            emit(args.out.out.as_deref(), &text)?;
            Ok(report_checks(&report.checks))
        }
        Command::Selftest(out) => {
            let checks = harness::run_selftest()?;
            let text = match out.format {
                Format::Csv => output::checks_csv(&checks),
                Format::Json => output::to_json("selftest", None, wall(), &checks)?,
            };
            emit(out.out.as_deref(), &text)?;
            Ok(report_checks(&checks))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: tdhf-lab <COMMAND> --config PATH [--out PATH] [--format csv|json] [--threads N] [--seed N]");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
