use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use critflow_cli::acceptance::{CriterionResult, DEFAULT_SEED};
use critflow_cli::commands::{self, Context, FlowStart};
use critflow_cli::config::SurfaceKind;
use critflow_cli::{CliError, LambdaSpec, RunConfig};

#[derive(Parser)]
#[command(name = "critflow", version = critflow_cli::VERSION, about = "Critical-exponent problems on hyperbolic balls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults are used for missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random probe fields (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// λ as a number, mid(i,j), frac(i,j,x) or scale(k,x) (overrides `lambda`).
    #[arg(long, global = true)]
    lambda: Option<LambdaSpec>,
    /// Highest angular mode of the spectrum (overrides `grid.l_max`).
    #[arg(long, global = true)]
    lmax: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted Dirichlet eigenvalues per angular mode.
    Eigs,
    /// Positive ground state by the Nehari-projected flow.
    GroundState,
    /// Negative gradient flow from a chosen start.
    Flow {
        #[arg(long, value_enum, default_value = "bubble")]
        from: FlowStart,
    },
    /// ε-sweep of the truncated-bubble quotient.
    BubbleAsymptotics,
    /// Sample a minimax test surface and check it against the thresholds.
    Surface {
        #[arg(long, value_enum)]
        kind: Option<CliSurfaceKind>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Comma-separated criterion numbers; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliSurfaceKind {
    Sphere,
    Joined,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(lambda) = cli.lambda {
        cfg.lambda = lambda;
    }
    if let Some(l) = cli.lmax {
        cfg.grid.l_max = l;
    }
    if let Command::Verify { .. } = cli.command {
        if cli.seed.is_none() && cli.config.is_none() {
            cfg.seed = DEFAULT_SEED;
        }
    }
    if let Command::Surface { kind: Some(kind) } = cli.command {
        cfg.surface.kind = match kind {
            CliSurfaceKind::Sphere => SurfaceKind::Sphere,
            CliSurfaceKind::Joined => SurfaceKind::Joined,
        };
    }
    cfg.validate()?;
    let ctx = Context::new(cfg, cli.out)?;
    match cli.command {
        Command::Eigs => commands::cmd_eigs(&ctx).map(|_| true),
        Command::GroundState => commands::cmd_ground_state(&ctx).map(|_| true),
        Command::Flow { from } => commands::cmd_flow(&ctx, from).map(|_| true),
        Command::BubbleAsymptotics => commands::cmd_bubble_asymptotics(&ctx).map(|_| true),
        Command::Surface { .. } => commands::cmd_surface(&ctx).map(|_| true),
        Command::Verify { only } => {
            let ids: Vec<u8> = if only.is_empty() {
                (1..=12).collect()
            } else {
                only
            };
            if let Some(bad) = ids.iter().find(|&&i| !(1..=12).contains(&i)) {
                return Err(CliError::Config(format!("no acceptance criterion {bad}")));
            }
            let print = |r: &CriterionResult| println!("{}", r.line());
            commands::cmd_verify(&ctx, &ids, print).map(|(_, all)| all)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("critflow: some acceptance criteria failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("critflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
