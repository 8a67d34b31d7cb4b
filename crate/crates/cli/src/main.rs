//! `qtorus`: named, reproducible experiments over the quantum torus toolkit.
//!
//! Exit codes: 0 when every assertion passes, 2 on an assertion failure,
//! 3 when a search budget runs out, 4 on a configuration error.

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, ConfigError, Experiment, Format};

#[derive(Parser)]
#[command(name = "qtorus", version, about = "Reproducible quantum torus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretization maps j_{d,n} against their sinc bounds.
    DiscCheck(Flags),
    /// Multiplier norm lower bounds along a convergent ladder.
    NormScan(Flags),
    /// Nearly anticommuting monomial sequences and their span.
    SidonCheck(Flags),
    /// Fejér measures with prescribed Fourier coefficients.
    MeasureCheck(Flags),
    /// Approximate relation sequences and the pair search.
    RelationCheck(Flags),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// JSON file with any subset of the config keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    theta: Option<String>,
    /// Comma-separated exponents; `inf` for the operator norm.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<String>>,
    #[arg(long)]
    degree: Option<u64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    ladder: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Flags {
    fn apply(self, cfg: &mut Config) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v.into();
                }
            )*};
        }
        set!(theta, p, degree, seed, restarts, ladder, budget, format);
        if self.grid.is_some() {
            cfg.grid = self.grid;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
    }
}

fn resolve(cli: Cli) -> Result<Config, ConfigError> {
    let (experiment, flags) = match cli.command {
        Command::DiscCheck(f) => (Experiment::DiscCheck, f),
        Command::NormScan(f) => (Experiment::NormScan, f),
        Command::SidonCheck(f) => (Experiment::SidonCheck, f),
        Command::MeasureCheck(f) => (Experiment::MeasureCheck, f),
        Command::RelationCheck(f) => (Experiment::RelationCheck, f),
    };
    let mut cfg = Config::layered(experiment, flags.config.as_deref())?;
    flags.apply(&mut cfg);
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let report = match resolve(cli).and_then(experiments::run) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    let text = match report.config.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match &report.config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: invalid `out`: cannot write {}: {e}", path.display());
                return ExitCode::from(4);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(report.status.exit_code() as u8)
}
