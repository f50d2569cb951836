use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stablerank_cli::{execute, CliError, Command, ExperimentConfig, Family, EXIT_CONFIG, EXIT_OK};

/// Witness certificates for stable-rank constructions.
#[derive(Parser)]
#[command(name = "stablerank", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Right-invertible perturbation of a random pair [A B] on a nest.
    #[command(name = "witness-rtsr2")]
    WitnessRtsr2(Flags),
    /// The same pipeline on megablocks of consecutive atoms.
    WitnessMegablock(Flags),
    /// Exact isometry families and their defects.
    WitnessObstruction(Flags),
    /// Riesz idempotent and invertible corner of a perturbed A ⊕ I.
    RieszCorner(Flags),
    /// Recompute every check of a stored artifact.
    Validate {
        input: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a JSON config file.
    Run { config: PathBuf },
}

#[derive(Args)]
struct Flags {
    /// Atom dimensions, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "nest_file")]
    dims: Option<Vec<usize>>,
    /// JSON file {"atom_dims": [...]}.
    #[arg(long)]
    nest_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Defaults to $STABLERANK_TOL, then 1e-8.
    #[arg(long)]
    tol: Option<f64>,
    /// Generators of the Fock family.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    #[arg(long, default_value_t = 2)]
    pad: usize,
    /// Corner dimension.
    #[arg(long, default_value_t = 6)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long = "J", default_value_t = 1)]
    j: usize,
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Consecutive seeds to run.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Worker threads for seed sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: Command) -> ExperimentConfig {
        ExperimentConfig {
            nest_file: self.nest_file,
            dims: self.dims,
            seed: self.seed,
            eps: self.eps,
            tol: self.tol,
            n: self.n,
            depth: self.depth,
            nodes: self.nodes,
            pad: self.pad,
            dim: self.dim,
            gamma: self.gamma,
            j: self.j,
            family: self.family,
            count: self.count,
            jobs: self.jobs,
            out: self.out,
            ..ExperimentConfig::new(command)
        }
    }
}

fn config_from(sub: Sub) -> Result<ExperimentConfig, CliError> {
    Ok(match sub {
        Sub::WitnessRtsr2(f) => f.into_config(Command::WitnessRtsr2),
        Sub::WitnessMegablock(f) => f.into_config(Command::WitnessMegablock),
        Sub::WitnessObstruction(f) => f.into_config(Command::WitnessObstruction),
        Sub::RieszCorner(f) => f.into_config(Command::RieszCorner),
        Sub::Validate { input, tol, out } => ExperimentConfig {
            input: Some(input),
            tol,
            out,
            ..ExperimentConfig::new(Command::Validate)
        },
        Sub::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
            ExperimentConfig::from_json(&text)?
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match config_from(cli.command) {
        Ok(config) => execute(&config),
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
