mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qrnn_core::adiabatic::SolverKind;

use config::RunConfig;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const USAGE: u8 = 1;
    pub const DATA: u8 = 2;
    pub const SOLVER: u8 = 3;

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: Self::USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: Self::DATA,
            message: message.into(),
        }
    }

    /// Configuration problems found by the core library count as usage errors.
    pub fn from_core_usage(e: qrnn_core::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<qrnn_core::Error> for CliError {
    fn from(e: qrnn_core::Error) -> Self {
        use qrnn_core::Error as E;
        let code = match &e {
            E::Config(_) => Self::USAGE,
            E::Solver(_) | E::Optimizer(_) => Self::SOLVER,
            _ => Self::DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Classical,
    Adiabatic,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Classical => "classical",
            Mode::Adiabatic => "adiabatic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Exhaustive,
    Anneal,
}

#[derive(Debug, Parser)]
#[command(
    name = "qrnn",
    version,
    about = "Train and compare QRNN trend predictors on price series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    parts: Option<usize>,
    #[arg(long = "history-depth", global = true, value_name = "N")]
    history_depth: Option<usize>,
    #[arg(long, global = true, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Price CSV with Date and Close columns.
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    symbol: Option<String>,
    /// Keep only the most recent N prices.
    #[arg(long, global = true, value_name = "N")]
    records: Option<usize>,
    /// Write null instead of wall-clock times so reruns are byte-identical.
    #[arg(long = "no-timings", global = true)]
    no_timings: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize, window and split a price series into train/test row files.
    Prepare,
    /// Fit the ansatz angles on the prepared training rows.
    Train {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Also write the quadratic model as `i j coefficient` triples.
        #[arg(long = "export-qubo")]
        export_qubo: bool,
    },
    /// Score trained angles on the prepared test rows.
    Evaluate {
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Run every scenario on every configured dataset.
    Compare,
    /// Adiabatic training once per discretization level count.
    SweepParts {
        /// Level counts to try; defaults to the configured list.
        #[arg(long = "levels", value_delimiter = ',')]
        levels: Option<Vec<usize>>,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.parts {
        cfg.parts = v;
    }
    if let Some(v) = cli.history_depth {
        cfg.history_depth = v;
    }
    if let Some(v) = cli.solver {
        cfg.solver = match v {
            SolverArg::Exhaustive => SolverKind::Exhaustive,
            SolverArg::Anneal => SolverKind::Anneal,
        };
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &cli.data {
        cfg.data = Some(v.clone());
    }
    if let Some(v) = &cli.symbol {
        cfg.symbol = v.clone();
    }
    if let Some(v) = cli.records {
        cfg.records = Some(v);
    }
    if cli.no_timings {
        cfg.timings = false;
    }
    if let Command::Train { export_qubo: true, .. } = cli.command {
        cfg.export_qubo = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli)?;
    match &cli.command {
        Command::Prepare => commands::prepare(&cfg),
        Command::Train { mode, .. } => commands::train(&cfg, *mode == Mode::Adiabatic, mode.name()),
        Command::Evaluate { mode } => commands::evaluate(&cfg, mode.name()),
        Command::Compare => commands::compare(&cfg),
        Command::SweepParts { levels } => commands::sweep(&cfg, levels.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let code = |e: qrnn_core::Error| CliError::from(e).code;
        assert_eq!(code(qrnn_core::Error::Config("x".into())), 1);
        assert_eq!(code(qrnn_core::Error::Data("x".into())), 2);
        assert_eq!(code(qrnn_core::Error::Domain("x".into())), 2);
        assert_eq!(code(qrnn_core::Error::Solver("x".into())), 3);
        assert_eq!(code(qrnn_core::Error::Optimizer("x".into())), 3);
    }

    #[test]
    fn flags_override_the_config() {
        let cli = Cli::try_parse_from([
            "qrnn",
            "train",
            "--mode",
            "adiabatic",
            "--parts",
            "5",
            "--solver",
            "anneal",
            "--no-timings",
        ])
        .unwrap();
        let cfg = resolve(&cli).unwrap();
        assert_eq!(cfg.parts, 5);
        assert_eq!(cfg.solver, SolverKind::Anneal);
        assert!(!cfg.timings);
    }
}
