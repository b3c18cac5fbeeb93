use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qee_cli::{run, CliError, CliResult, Invocation, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "qee", version, about = "Entanglement of a dephasing qubit with its environment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time sweep of one scenario to a single CSV file.
    Simulate(Common),
    /// Uniform spin-bath curves for several initial occupations.
    Figure1(Common),
    /// Spin-bath curves with one pure bath qubit.
    Figure2(Common),
    /// Randomized oracle suites; exits 1 if any fails.
    Verify(Common),
    /// Timings of the factored and full-space paths.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file, or directory for the figure commands.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of grid points.
    #[arg(long)]
    points: Option<usize>,
}

fn thread_pool() -> CliResult<Option<rayon::ThreadPool>> {
    let Ok(raw) = std::env::var("QEE_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("QEE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| CliError::Config(format!("cannot build a pool of {n} threads: {e}")))
}

fn execute(cli: Cli) -> CliResult<()> {
    let (mode, common) = match cli.command {
        Command::Simulate(c) => (Mode::Simulate, c),
        Command::Figure1(c) => (Mode::Figure1, c),
        Command::Figure2(c) => (Mode::Figure2, c),
        Command::Verify(c) => (Mode::Verify, c),
        Command::Bench(c) => (Mode::Bench, c),
    };
    let inv = Invocation {
        mode,
        config: RunConfig::load(&common.config)?,
        out: common.out,
        seed: common.seed,
        points: common.points,
    };
    let outcome = match thread_pool()? {
        Some(pool) => pool.install(|| run(&inv))?,
        None => run(&inv)?,
    };
    for m in &outcome.messages {
        println!("{m}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
