//! `gme-sim`: batch front end for the gme-core simulator.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{NamedState, ScanParam};
use config::{BsPreset, ExperimentConfig};
use error::CliError;
use output::{Format, Metadata, Writer};

#[derive(Parser)]
#[command(name = "gme-sim", version, about = "Mediated-entanglement circuit and photonic simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides the config field of the same name.
#[derive(Args)]
struct Global {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, global = true)]
    phi: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    eta_grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    v_grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    bs: Option<BsPreset>,
    /// Beam-splitter reflectivity for both polarizations, replacing the preset.
    #[arg(long, global = true)]
    reflectivity: Option<f64>,
    #[arg(long, global = true)]
    bd_imperfection: Option<f64>,
    #[arg(long, global = true)]
    counts_per_setting: Option<u64>,
    #[arg(long, global = true)]
    mc_replicas: Option<usize>,
    #[arg(long, global = true)]
    mle_max_iterations: Option<usize>,
    #[arg(long, global = true)]
    baseline_weight: Option<f64>,
    #[arg(long, global = true)]
    coherence_sigma_ps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the abstract circuit and write the full, spin and canonical states.
    Circuit,
    /// Check the coupler array against a controlled-phase gate and scan HOM interference.
    PhotonicVerify,
    /// Witness, CHSH and PPT across a noise grid.
    Scan {
        #[arg(long, value_enum)]
        param: ScanParam,
    },
    /// HOM coincidence scan and the distinguishability visibility table.
    HomScan,
    /// Certification battery on a counts CSV or a state JSON.
    Certify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Poisson counts for the certification settings.
    SimulateCounts {
        #[arg(long, value_enum, default_value = "singlet")]
        state: NamedState,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        v: f64,
        /// State JSON to sample instead of a named state.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Circuit => "circuit",
            Command::PhotonicVerify => "photonic-verify",
            Command::Scan { .. } => "scan",
            Command::HomScan => "hom-scan",
            Command::Certify { .. } => "certify",
            Command::SimulateCounts { .. } => "simulate-counts",
        }
    }
}

fn effective_config(g: &Global) -> Result<ExperimentConfig, CliError> {
    let mut c = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => {$(
            if let Some(v) = &g.$field {
                c.$field = v.clone();
            }
        )*};
    }
    apply!(seed, phi, eta_grid, v_grid, gamma_grid, bs, bd_imperfection, counts_per_setting, mc_replicas, mle_max_iterations, baseline_weight, coherence_sigma_ps);
    if g.reflectivity.is_some() {
        c.reflectivity = g.reflectivity;
    }
    if let Some(out) = &g.out {
        c.output_dir = out.clone();
    }
    c.validate()?;
    Ok(c)
}

fn limit_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("GME_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("GME_SIM_THREADS={value} is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(error::numerical)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Writer, CliError> {
    limit_threads()?;
    let cfg = effective_config(&cli.global)?;
    let mut out = Writer::new(&cfg.output_dir, Metadata::new(cli.command.name(), &cfg), cli.global.format)?;
    let result = match &cli.command {
        Command::Circuit => commands::circuit(&cfg, &mut out),
        Command::PhotonicVerify => commands::photonic_verify(&cfg, &mut out),
        Command::Scan { param } => commands::scan(&cfg, *param, &mut out),
        Command::HomScan => commands::hom_scan(&cfg, &mut out),
        Command::Certify { input } => commands::certify(&cfg, input, &mut out),
        Command::SimulateCounts { state, eta, v, input } => {
            let rho = match input {
                Some(path) => commands::read_state(path)?,
                None => commands::named_state(&cfg, *state, *eta, *v)?,
            };
            commands::simulate(&cfg, &rho, &mut out)
        }
    };
    result.map(|()| out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            for path in out.written() {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gme-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
