//! `reebkit`: indices, lens-space invariants and surface-of-section checks from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 degenerate input,
//! 3 verification failure.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use reebkit::section::Direction;
use reebkit::OrbitLabel;

use commands::{Starts, Status};
use config::{Overrides, RunConfig};

/// Bad flags, missing files or unwritable outputs.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Parser)]
#[command(name = "reebkit", version, about = "Reeb flows on S^3 and lens spaces")]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Contact form: inline JSON, a JSON file, `round` or `ellipsoid:A,B`.
    #[arg(long, global = true, value_name = "SPEC")]
    system: Option<String>,
    /// Quotient by the Z_p action of L(p,q), as `P,Q`.
    #[arg(long, global = true, value_name = "P,Q")]
    lens: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write an SVG scatter of return-map samples next to `--out`.
    #[arg(long, global = true)]
    svg: bool,
    /// CSV instead of JSON (for `verify`: an extra CSV of return samples next to `--out`).
    #[arg(long, global = true)]
    csv: bool,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// Numerical tolerance (return-time bisection, fixed-point displacement).
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrbitArg {
    #[value(name = "K")]
    K,
    #[value(name = "K'", alias = "Kp")]
    KPrime,
}

#[derive(Subcommand)]
enum Command {
    /// Conley-Zehnder index and rotation number of the iterates 1..k of a principal circle.
    Index {
        #[arg(long, value_enum, default_value = "K")]
        orbit: OrbitArg,
        #[arg(short, default_value_t = 5)]
        k: u32,
        /// Also compute the spectral index.
        #[arg(long)]
        spectral: bool,
    },
    /// Check the global surface of section bounded by the z-circle of a lens quotient.
    Verify {
        /// Action bound C for the orbit catalogue.
        #[arg(long)]
        action: Option<f64>,
        /// Number of random page points whose returns are tested.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Homeomorphism and homotopy classification of L(p,q) over q.
    Lens { p: u32 },
    /// Validate a bubbling tree given as JSON (file or inline).
    TreeValidate {
        tree: String,
        #[arg(long)]
        sigma: Option<f64>,
        /// Action bound used to derive sigma from the system when `--sigma` is absent.
        #[arg(long)]
        action: Option<f64>,
    },
    /// Period gap sigma(C) of a period list or of a system's catalogue.
    Sigma {
        /// Comma-separated periods.
        #[arg(long)]
        periods: Option<String>,
        #[arg(long)]
        action: Option<f64>,
    },
    /// First return of page points to the page.
    ReturnMap {
        #[arg(long, requires = "theta", conflicts_with = "samples")]
        r: Option<f64>,
        #[arg(long, requires = "r")]
        theta: Option<f64>,
        /// Seeded random starts instead of a single point.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        backward: bool,
        /// Page phase.
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
    },
}

fn run(cli: Cli) -> Result<Status> {
    let cfg = RunConfig::resolve(
        cli.config.as_deref(),
        Overrides {
            system: cli.system,
            lens: cli.lens,
            seed: cli.seed,
            tol: cli.tol,
            out: cli.out,
            svg: cli.svg,
            csv: cli.csv,
            jobs: cli.jobs,
        },
    )?;
    log::debug!("run config: {cfg:?}");
    let jobs = cfg.jobs;
    let command = cli.command;
    let go = move || match command {
        Command::Index { orbit, k, spectral } => {
            let label = match orbit {
                OrbitArg::K => OrbitLabel::K,
                OrbitArg::KPrime => OrbitLabel::KPrime,
            };
            commands::index(&cfg, label, k, spectral)
        }
        Command::Verify { action, samples } => commands::verify(
            &cfg,
            action.or(cfg.action_bound).unwrap_or(5.0),
            samples.or(cfg.samples).unwrap_or(100),
        ),
        Command::Lens { p } => commands::lens(&cfg, p),
        Command::TreeValidate { tree, sigma, action } => commands::tree_validate(&cfg, &tree, sigma, action),
        Command::Sigma { periods, action } => commands::sigma(&cfg, periods.as_deref(), action),
        Command::ReturnMap {
            r,
            theta,
            samples,
            backward,
            phase,
        } => {
            let starts = match (r, theta, samples.or(cfg.samples)) {
                (Some(r), Some(t), _) => Starts::Point(r, t),
                (_, _, Some(n)) => Starts::Random(n),
                _ => anyhow::bail!(UsageError("give --r and --theta, or --samples".into())),
            };
            let dir = if backward {
                Direction::Backward
            } else {
                Direction::Forward
            };
            commands::return_map_cmd(&cfg, starts, dir, phase)
        }
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(go),
        None => go(),
    }
}

/// Exit code for an error that stopped a command.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<reebkit::Error>() {
            return match e {
                reebkit::Error::Degenerate(_) | reebkit::Error::Resolution(..) => 2,
                reebkit::Error::Precondition(_)
                | reebkit::Error::Unsupported(_)
                | reebkit::Error::NotContractible(_)
                | reebkit::Error::Structural(_) => 1,
                _ => 3,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("REEBKIT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(3),
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
