use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wellspec::cli::{self, RunConfig};
use wellspec::{par, Error};

#[derive(Parser)]
#[command(
    name = "wellspec",
    version,
    about = "Spectral bounds for -Δ + dist(x, Σ)²"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Treat inconclusive checks as failures.
        #[arg(long)]
        strict: bool,
        /// Output directory (default: the config's `out`, else ./wellspec-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a config key, e.g. `--override cells=64`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let Command::Run {
        config,
        strict,
        out,
        overrides,
    } = cli.command;
    match execute(&config, strict, out, &overrides) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("wellspec: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn execute(
    path: &PathBuf,
    strict: bool,
    out: Option<PathBuf>,
    overrides: &[String],
) -> Result<u8, Error> {
    let threads = par::init_threads_from_env();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    for o in overrides {
        cfg.apply_override(o)?;
    }
    if strict {
        cfg.strict = Some(true);
    }
    if let Some(dir) = out {
        cfg.out = Some(dir);
    }
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("wellspec-out"));
    let report = cli::run(&cfg)?;
    let files = report.emit(&dir)?;
    for c in &report.checks {
        println!(
            "{:<13} {}  lhs={:.6e} rhs={:.6e} eps={:.3e}",
            format!("{:?}", c.verdict).to_lowercase(),
            c.name,
            c.lhs,
            c.rhs,
            c.eps_budget
        );
    }
    if let Some(e) = &report.error {
        eprintln!("wellspec: {e}");
    }
    eprintln!(
        "{}: {:?} in {:.1} s on {threads} thread(s); wrote {} files to {}",
        report.experiment,
        report.status,
        report.timing.total_seconds,
        files.len(),
        dir.display()
    );
    Ok(report.status.exit_code() as u8)
}
