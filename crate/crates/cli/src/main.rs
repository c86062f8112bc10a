//! `qnet`: bounds, Monte-Carlo simulations and fits for distributed phase
//! sensing networks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qnet_core::Scheme;

use commands::{CmdError, FitRequest};
use config::{ConfigError, RunConfig, Task};

#[derive(Parser)]
#[command(name = "qnet", version, about = "Quantum sensor network bounds, simulations and fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print and store QFIM, its inverse, allocations and every applicable bound.
    Bounds(RunArgs),
    /// Run the Monte-Carlo maximum-likelihood experiment described by the config.
    Simulate(RunArgs),
    /// Fit gamma to a fixed-total CSV with columns N_T and msf.
    Fit(FitArgs),
}

#[derive(Args)]
#[group(id = "source", multiple = false)]
struct Source {
    /// JSON run configuration.
    #[arg(long, group = "source")]
    config: Option<PathBuf>,
    /// Built-in configuration: fig2e, fig2f, fig3a, fig3b, fig3c, fig3d, sumvar.
    #[arg(long, group = "source")]
    preset: Option<String>,
}

#[derive(Args)]
struct Common {
    /// Overrides the configured seed.
    #[arg(long, env = "QNET_SEED")]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    #[value(name = "ME")]
    Me,
    #[value(name = "MS")]
    Ms,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with N_T and msf columns, e.g. the output of a fixed_total run.
    #[arg(long)]
    input: PathBuf,
    /// Fit model; defaults to every scheme listed in the file.
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Number of sensors; defaults to the config's.
    #[arg(long)]
    d: Option<usize>,
    /// Optimal shot number; defaults to the config's fixed_total m_opt.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    m_opt: Option<u64>,
    /// Only use rows of this series.
    #[arg(long)]
    series: Option<String>,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    common: Common,
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_) => CmdError::Io(e.to_string()),
            _ => CmdError::Usage(e.to_string()),
        }
    }
}

fn resolve(source: &Source, common: &Common) -> Result<Option<RunConfig>, CmdError> {
    let mut config = match (&source.config, &source.preset) {
        (Some(path), _) => config::load(path)?,
        (None, Some(name)) => config::preset(name)?,
        (None, None) => return Ok(None),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(Some(config))
}

fn out_dir(common: &Common, config: Option<&RunConfig>) -> Result<PathBuf, CmdError> {
    let dir = common
        .out
        .clone()
        .or_else(|| config.and_then(|c| c.output.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qnet-out"));
    std::fs::create_dir_all(&dir).map_err(|e| CmdError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn set_workers(common: &Common) -> Result<(), CmdError> {
    if let Some(n) = common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CmdError::Io(e.to_string()))?;
    }
    Ok(())
}

fn require(args: &RunArgs) -> Result<RunConfig, CmdError> {
    resolve(&args.source, &args.common)?.ok_or_else(|| CmdError::Usage("one of --config or --preset is required".into()))
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Bounds(args) => {
            let config = require(&args)?;
            let out = out_dir(&args.common, Some(&config))?;
            let path = commands::bounds(&config, &out)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Simulate(args) => {
            let config = require(&args)?;
            set_workers(&args.common)?;
            let out = out_dir(&args.common, Some(&config))?;
            let files = commands::simulate(&config, &out)?;
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Fit(args) => {
            let config = resolve(&args.source, &args.common)?;
            let m_opt_default = config.as_ref().and_then(|c| match c.task {
                Task::FixedTotal { m_opt, .. } => Some(m_opt),
                _ => None,
            });
            let d = args
                .d
                .or(config.as_ref().map(|c| c.d))
                .ok_or_else(|| CmdError::Usage("--d is required without a config".into()))?;
            let m_opt = args
                .m_opt
                .or(m_opt_default)
                .ok_or_else(|| CmdError::Usage("--m-opt is required without a fixed_total config".into()))?;
            let models = match args.model {
                Some(Model::Me) => vec![Scheme::Entangled],
                Some(Model::Ms) => vec![Scheme::Separable],
                None => commands::schemes_in(&args.input)?,
            };
            let out = match (&args.common.out, &config) {
                (None, None) => None,
                _ => Some(out_dir(&args.common, config.as_ref())?),
            };
            let request = FitRequest {
                input: args.input,
                models,
                d,
                m_opt,
                series: args.series,
            };
            let (fits, path) = commands::fit(&request, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&fits).expect("fit results serialize"));
            if let Some(p) = path {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
