//! `itpp`: batch runner for imaginary-time Pauli propagation experiments.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Axis;
use config::{Settings, UsageError};

#[derive(Parser)]
#[command(name = "itpp", version, about = "Imaginary-time Pauli propagation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the identity in imaginary time and record the trajectory.
    RunItpp(RunArgs),
    /// Dense exact and dense Trotterized evolution for small systems.
    Exact(RunArgs),
    /// Free-fermion ground energies of the open transverse-field Ising chain.
    Bdg(BdgArgs),
    /// Repeat run-itpp over a list of values for one parameter.
    Sweep(SweepArgs),
    /// Continue a run from its checkpoint.
    Resume(ResumeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file with [model], [schedule], [truncation] and [output] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter to vary.
    #[arg(long, value_enum)]
    axis: Axis,
    /// Comma-separated values for the axis.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ResumeArgs {
    /// Checkpoint written by an earlier run.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct BdgArgs {
    /// Chain lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    j: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    h: f64,
    /// Also write the table to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// One flag per config key; a flag wins over the config file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, value_name = "tfim|file")]
    model: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    j: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long = "term_file", alias = "term-file")]
    term_file: Option<String>,
    #[arg(long)]
    ordering: Option<String>,
    #[arg(long = "delta_tau", alias = "delta-tau")]
    delta_tau: Option<String>,
    #[arg(long = "tau_final", alias = "tau-final")]
    tau_final: Option<String>,
    #[arg(long, value_name = "step|gate")]
    sample: Option<String>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long = "trace_epsilon", alias = "trace-epsilon")]
    trace_epsilon: Option<String>,
    #[arg(long = "out_dir", alias = "out-dir")]
    out_dir: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    observables: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    reference: Option<String>,
    #[arg(long = "max_dense_qubits", alias = "max-dense-qubits")]
    max_dense_qubits: Option<String>,
    #[arg(long = "checkpoint_every", alias = "checkpoint-every")]
    checkpoint_every: Option<String>,
    #[arg(long = "squared_estimator", alias = "squared-estimator")]
    squared_estimator: Option<String>,
    #[arg(long)]
    timing: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        [
            ("model", &self.model),
            ("n", &self.n),
            ("j", &self.j),
            ("h", &self.h),
            ("term_file", &self.term_file),
            ("ordering", &self.ordering),
            ("delta_tau", &self.delta_tau),
            ("tau_final", &self.tau_final),
            ("sample", &self.sample),
            ("policy", &self.policy),
            ("trace_epsilon", &self.trace_epsilon),
            ("out_dir", &self.out_dir),
            ("observables", &self.observables),
            ("reference", &self.reference),
            ("max_dense_qubits", &self.max_dense_qubits),
            ("checkpoint_every", &self.checkpoint_every),
            ("squared_estimator", &self.squared_estimator),
            ("timing", &self.timing),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn settings(config: Option<&PathBuf>, overrides: &Overrides) -> anyhow::Result<Settings> {
    let mut s = match config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for (k, v) in overrides.pairs() {
        s.set(&k, &v)?;
    }
    Ok(s)
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::RunItpp(a) => commands::run_itpp(&settings(a.config.as_ref(), &a.overrides)?),
        Command::Exact(a) => commands::exact(&settings(a.config.as_ref(), &a.overrides)?),
        Command::Bdg(a) => commands::bdg(&a.n, a.j, a.h, a.csv.as_deref()),
        Command::Sweep(a) => {
            let values = commands::parse_axis_values(&a.values)?;
            commands::sweep(&settings(a.config.as_ref(), &a.overrides)?, a.axis, &values)
        }
        Command::Resume(a) => commands::resume(&a.checkpoint, &a.overrides.pairs()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
