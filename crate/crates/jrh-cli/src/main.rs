mod commands;
mod config;
mod output;
mod svg;

use clap::{Args, Parser, Subcommand};
use config::{parse_point, CommandConfig, RunConfig};
use jrh::JrhError;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "jrh", version, about = "Zeros and strong asymptotics of Jacobi polynomials with varying negative parameters")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Limit of α/n.
    #[arg(long = "A", env = "JRH_A", default_value = "-0.7", allow_hyphen_values = true, global = true)]
    a: String,
    /// Limit of β/n.
    #[arg(long = "B", env = "JRH_B", default_value = "-0.8", allow_hyphen_values = true, global = true)]
    b: String,
    /// Degree.
    #[arg(long, env = "JRH_N", default_value_t = 100, global = true)]
    n: u32,
    #[arg(long, env = "JRH_ALPHA", default_value = "-69.99999", allow_hyphen_values = true, global = true)]
    alpha: String,
    #[arg(long, env = "JRH_BETA", default_value = "-79.99999", allow_hyphen_values = true, global = true)]
    beta: String,
    #[arg(long, env = "JRH_PREC_BITS", default_value_t = 128, global = true)]
    prec_bits: u32,
    /// Quadrature tolerance.
    #[arg(long, env = "JRH_TOL", default_value_t = 1e-24, global = true)]
    tol: f64,
    /// Output directory.
    #[arg(long, env = "JRH_OUT", default_value = "out", global = true)]
    out: PathBuf,
    /// Level values r for the level curves Re φ = r.
    #[arg(
        long,
        env = "JRH_LEVELS",
        value_delimiter = ',',
        default_value = "-0.1,-0.05,0.05,0.1",
        allow_hyphen_values = true,
        global = true
    )]
    levels: Vec<f64>,
    #[arg(long, env = "JRH_SEED", default_value_t = 0, global = true)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Trace Γ, the orthogonal trajectories and level curves.
    Geometry,
    /// Evaluate the phase function.
    Phase {
        #[command(subcommand)]
        action: PhaseCmd,
    },
    /// Find zeros and compare them with the predicted attractor.
    Zeros,
    /// Evaluate the strong asymptotics.
    Asym {
        #[command(subcommand)]
        action: AsymCmd,
    },
    /// Convergence table of the asymptotics against the exact polynomial.
    Converge {
        #[arg(long, value_delimiter = ',', default_value = "40,80,160")]
        ns: Vec<u32>,
        /// Extra grid points, as x,y.
        #[arg(long = "z", allow_hyphen_values = true)]
        points: Vec<String>,
    },
    /// Replay a saved config.json.
    Run {
        config: PathBuf,
        /// Write into this directory instead of the one in the config.
        #[arg(long)]
        into: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum PhaseCmd {
    Eval {
        #[arg(long = "z", allow_hyphen_values = true)]
        points: Vec<String>,
        /// Additional seeded random points.
        #[arg(long, default_value_t = 0)]
        samples: u32,
    },
}

#[derive(Subcommand, Debug)]
enum AsymCmd {
    Eval {
        #[arg(long = "z", allow_hyphen_values = true, required = true)]
        points: Vec<String>,
    },
    /// Evaluate and compare with the exact polynomial.
    Compare {
        #[arg(long = "z", allow_hyphen_values = true, required = true)]
        points: Vec<String>,
    },
}

fn points(raw: &[String]) -> Result<Vec<[f64; 2]>, JrhError> {
    raw.iter().map(|s| parse_point(s)).collect()
}

fn build_config(cli: Cli) -> anyhow::Result<RunConfig> {
    let c = cli.common;
    let command = match cli.command {
        Cmd::Geometry => CommandConfig::Geometry { a: c.a, b: c.b, levels: c.levels },
        Cmd::Phase { action: PhaseCmd::Eval { points: p, samples } } => {
            CommandConfig::Phase { a: c.a, b: c.b, points: points(&p)?, samples }
        }
        Cmd::Zeros => CommandConfig::Zeros { alpha: c.alpha, beta: c.beta, n: c.n },
        Cmd::Asym { action } => {
            let (p, compare) = match action {
                AsymCmd::Eval { points } => (points, false),
                AsymCmd::Compare { points } => (points, true),
            };
            CommandConfig::Asym { a: c.a, b: c.b, n: c.n, points: points(&p)?, compare }
        }
        Cmd::Converge { ns, points: p } => CommandConfig::Converge { a: c.a, b: c.b, ns, points: points(&p)? },
        Cmd::Run { config, into } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(d) = into {
                cfg.out = d;
            }
            return Ok(cfg);
        }
    };
    Ok(RunConfig { command, precision_bits: c.prec_bits, tol: c.tol, out: c.out, seed: c.seed })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<JrhError>()) {
        Some(e) if e.is_validation() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(cli).and_then(|cfg| commands::run(&cfg).map(|lines| (cfg, lines)));
    match result {
        Ok((cfg, lines)) => {
            // A closed stdout (e.g. piped into head) is not an error of the run.
            let mut o = std::io::stdout().lock();
            for l in lines {
                let _ = write!(o, "{l}");
                if !l.ends_with('\n') {
                    let _ = writeln!(o);
                }
            }
            let _ = writeln!(o, "{} results written to {}", cfg.command.name(), cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
