use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "longwave", version, about = "Long-wave experiments for power-law particle chains")]
pub struct Cli {
    /// Worker threads for independent ε-runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output location: a directory for sweeps, a file for single runs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Accepted for interface stability; every pipeline is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Resolve and print the plan without computing or writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every α-dependent constant as JSON.
    Constants {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Print the root of 2ζ(α+1) - ζ(α).
    AlphaStar {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Riemann-sum approximations of η_α as CSV rows `h,eta_h,abs_err`.
    EtaRates {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05, 0.025])]
        h_list: Vec<f64>,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
    },
    /// Integrate the BO equation from a Gaussian profile.
    SolveBo(SolveBo),
    /// Evolve the particle ring with Störmer-Verlet.
    SimulateLattice(SimulateLattice),
    /// Residual of the long-wave ansatz across an ε sweep.
    ResidualSweep(Sweep),
    /// Lattice against BO comparison across an ε sweep.
    Validate(Sweep),
}

#[derive(Debug, Args)]
pub struct SolveBo {
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 102.4)]
    pub period: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dtau: f64,
    #[arg(long, default_value_t = 0.25)]
    pub tau_end: f64,
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    /// Gaussian width; defaults to period/20.
    #[arg(long)]
    pub width: Option<f64>,
    /// Number of equal intervals at which the trace and field dumps are taken.
    #[arg(long, default_value_t = 10)]
    pub checkpoints: usize,
    #[arg(long, value_enum, default_value_t = DumpFormat::Binary)]
    pub dump: DumpFormat,
}

#[derive(Debug, Args)]
pub struct SimulateLattice {
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 32)]
    pub cutoff: usize,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Record the state every this many steps (default: ten records).
    #[arg(long)]
    pub every: Option<usize>,
    /// CSV with columns `r,p` (an optional `j` column is ignored). Without it
    /// a small right-moving bump is used.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FarFieldArg::LinearTail)]
    pub far_field: FarFieldArg,
    #[arg(long, value_enum, default_value_t = DumpFormat::Csv)]
    pub format: DumpFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FarFieldArg {
    Truncated,
    LinearTail,
}

/// Sweep settings: a JSON config, then flag overrides.
#[derive(Debug, Args)]
pub struct Sweep {
    /// JSON file with any subset of the experiment fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub checkpoints: Option<usize>,
    /// Lattice time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// BO grid size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Also run backwards in time.
    #[arg(long)]
    pub bidirectional: bool,
}
