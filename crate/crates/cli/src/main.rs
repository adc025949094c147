use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use readout_cli::config::{ExperimentConfig, Format, Settings};
use readout_cli::run::{run_capacity, run_eval, run_gainmap, run_selftest, run_sweep, RunOutput};
use readout_cli::{CliError, EXIT_INVALID};

/// Exact readout statistics of imperfect binary optical memory cells.
#[derive(Parser)]
#[command(name = "readout", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every requested strategy at a single parameter point.
    Eval(Params),
    /// One row per point of a mu or tau0 range.
    Sweep(Params),
    /// Quantum gain over one benchmark on a mu x tau0 grid.
    Gainmap(Params),
    /// Classical Holevo capacity with convergence and concavity diagnostics.
    Capacity(Params),
    /// Quick checks against closed forms and direct enumeration.
    Selftest {
        #[arg(long, value_name = "csv|json")]
        format: Option<String>,
    },
}

#[derive(Args)]
struct Params {
    /// Flat TOML file with any of the settings below; flags win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "value|start:stop:count[:lin]")]
    tau0: Option<String>,
    #[arg(long)]
    sigma0: Option<String>,
    #[arg(long)]
    tau1: Option<String>,
    #[arg(long)]
    sigma1: Option<String>,
    /// Signal photon budget; ranges are log-spaced unless `:lin` is given.
    #[arg(long, value_name = "value|start:stop:count[:log]")]
    mu: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long, value_name = "N|inf")]
    modes: Option<String>,
    /// Grid points per discretized level.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    n_sigma: Option<String>,
    /// Comma-separated subset of CHB,CPC,CMV,QUANTUM,CHI.
    #[arg(long)]
    strategies: Option<String>,
    /// PC, HB or CHI (gainmap).
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    #[arg(long, value_name = "csv|json")]
    format: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<String>,
    /// Capacity refinement tolerance in bits.
    #[arg(long)]
    chi_tol: Option<String>,
    /// Largest discretization tried by the capacity refinement.
    #[arg(long)]
    k_cap: Option<String>,
    /// Largest count grid the quantum receiver may scan.
    #[arg(long)]
    grid_cap: Option<String>,
}

impl Params {
    fn overrides(&self) -> Settings {
        let pairs = [
            ("tau0", &self.tau0),
            ("sigma0", &self.sigma0),
            ("tau1", &self.tau1),
            ("sigma1", &self.sigma1),
            ("mu", &self.mu),
            ("eta", &self.eta),
            ("modes", &self.modes),
            ("k", &self.k),
            ("n_sigma", &self.n_sigma),
            ("strategies", &self.strategies),
            ("benchmark", &self.benchmark),
            ("out", &self.out),
            ("format", &self.format),
            ("jobs", &self.jobs),
            ("chi_tol", &self.chi_tol),
            ("k_cap", &self.k_cap),
            ("grid_cap", &self.grid_cap),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }

    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
            None => String::new(),
        };
        ExperimentConfig::from_toml_with(&text, &self.overrides())
    }
}

fn emit(out: &RunOutput, format: Format, path: Option<&PathBuf>) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => out.table.to_csv(),
        Format::Json => out.table.to_json(),
    };
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    type Runner = fn(&ExperimentConfig) -> Result<RunOutput, CliError>;
    let (params, runner): (Params, Runner) = match cli.command {
        Command::Selftest { format } => {
            let format = format.as_deref().map_or(Ok(Format::Csv), str::parse)?;
            let out = run_selftest()?;
            emit(&out, format, None)?;
            return out.failure.map_or(Ok(()), Err);
        }
        Command::Eval(p) => (p, run_eval),
        Command::Sweep(p) => (p, run_sweep),
        Command::Gainmap(p) => (p, run_gainmap),
        Command::Capacity(p) => (p, run_capacity),
    };
    let cfg = params.load()?;
    let out = runner(&cfg)?;
    emit(&out, cfg.format, cfg.out.as_ref())?;
    out.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("readout: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
