//! `bvgamma`: batch front-end for the non-local total-variation toolkit.
//!
//! Exit status: 0 when every check passed, 1 when a mathematical check
//! failed (the witness goes to stderr), 2 for configuration errors.

mod commands;
mod params;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use params::{load_config, Params, Text};

#[derive(Parser, Debug)]
#[command(name = "bvgamma", version, about = "Shape factors, log-sum minimum problems and non-local energies")]
struct Cli {
    /// JSON file with parameters; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every randomized step (default 20240601).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a law: scale factor, admissibility, value table.
    Law(LawArgs),
    /// Best values of the log-sum minimum problem for a step law.
    Minprob(MinprobArgs),
    /// Randomized inequality suites.
    Verify(VerifyArgs),
    /// Shape-factor lower bounds.
    Bounds(BoundsArgs),
    /// Energies: pointwise delta sweeps, step functions, geometric constants.
    Energy(EnergyArgs),
}

#[derive(Args, Debug)]
struct LawArgs {
    /// Law specification, e.g. `phi1`, `psi:2`, `theta`, `pca:[1,0,2]`.
    #[arg(long, alias = "law")]
    spec: Option<String>,
    /// summary, n, table or admissibility.
    #[arg(long)]
    report: Option<String>,
    /// Probe points for the value table, e.g. `0.5,1.5`.
    #[arg(long)]
    probe: Option<String>,
    /// Upper end of the default probe grid.
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Args, Debug)]
struct MinprobArgs {
    #[arg(long)]
    law: Option<String>,
    /// Tuple lengths: `8`, `16,32,64` or `2..16`.
    #[arg(long)]
    n: Option<String>,
    /// Random smooth starts per n (default 64).
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Longest period of the 0/1 pattern seeds (default 12).
    #[arg(long)]
    pattern_period_cap: Option<usize>,
    /// Add the normalized minimizer as a column.
    #[arg(long)]
    dump_minimizer: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// rearrange, telescope, domination or chain.
    suite: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    /// Margins down to minus this value pass (default 1e-10).
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// psi, theta, zeta, law or counterexample.
    target: Option<String>,
    /// Range of m for `psi`, e.g. `1..12`.
    #[arg(long)]
    m: Option<String>,
    /// Largest package index in the domination check for `theta`.
    #[arg(long)]
    m_cap: Option<u32>,
    /// JSON file with the sequence f for `zeta`.
    #[arg(long)]
    sequence: Option<PathBuf>,
    /// Law for `law`.
    #[arg(long)]
    law: Option<String>,
    /// Largest n used by the optimizer route.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    /// epsilon for `counterexample`.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    /// pointwise, step or geometric.
    mode: Option<String>,
    #[arg(long)]
    law: Option<String>,
    /// Profile name (bump, linear) for `pointwise`; step-function file for `step`.
    #[arg(long)]
    u: Option<String>,
    /// Deltas: `0.1,0.05` or a decade range `1e-1..1e-3`.
    #[arg(long)]
    deltas: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    /// Dimensions for `geometric`, e.g. `1..4`.
    #[arg(long)]
    d: Option<String>,
    /// Monte Carlo samples for `geometric`.
    #[arg(long)]
    samples: Option<usize>,
    /// Quadrature tolerance for `pointwise`.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn text(s: Option<String>) -> Option<Text> {
    s.map(Text)
}

impl Command {
    fn into_params(self) -> Params {
        match self {
            Command::Law(a) => Params {
                command: Some("law".into()),
                law: a.spec,
                report: a.report,
                probe: text(a.probe),
                t_max: a.t_max,
                ..Default::default()
            },
            Command::Minprob(a) => Params {
                command: Some("minprob".into()),
                law: a.law,
                n: text(a.n),
                starts: a.starts,
                max_iters: a.max_iters,
                pattern_period_cap: a.pattern_period_cap,
                dump_minimizer: a.dump_minimizer.then_some(true),
                ..Default::default()
            },
            Command::Verify(a) => Params {
                command: Some("verify".into()),
                suite: a.suite,
                count: a.count,
                tolerance: a.tolerance,
                ..Default::default()
            },
            Command::Bounds(a) => Params {
                command: Some("bounds".into()),
                target: a.target,
                m: text(a.m),
                m_cap: a.m_cap,
                sequence: a.sequence,
                law: a.law,
                n_max: a.n_max,
                starts: a.starts,
                eps: a.eps,
                ..Default::default()
            },
            Command::Energy(a) => Params {
                command: Some("energy".into()),
                mode: a.mode,
                law: a.law,
                u: a.u,
                deltas: text(a.deltas),
                delta: a.delta,
                d: text(a.d),
                samples: a.samples,
                tolerance: a.tolerance,
                ..Default::default()
            },
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("BVGAMMA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("BVGAMMA_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("BVGAMMA_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<commands::Outcome> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => Params::default(),
    };
    let mut flags = cli.command.map(Command::into_params).unwrap_or_default();
    flags.seed = cli.seed;
    flags.output = cli.output;
    flags.json = cli.json.then_some(true);
    let p = flags.overlay(file);
    let json_out = p.json.unwrap_or(false);
    let outcome = match p.command.as_deref() {
        Some("law") => commands::law(&p, json_out)?,
        Some("minprob") => commands::minprob(&p, json_out)?,
        Some("verify") => commands::verify(&p, json_out)?,
        Some("bounds") => commands::bounds(&p, json_out)?,
        Some("energy") => commands::energy(&p, json_out)?,
        Some(other) => bail!("unknown command `{other}`"),
        None => bail!("no command given (law, minprob, verify, bounds, energy)"),
    };
    match &p.output {
        Some(path) => {
            std::fs::write(path, &outcome.body).with_context(|| format!("cannot write `{}`", path.display()))?
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(outcome.body.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(outcome)
}

/// Failures of a mathematical check map to 1, everything else to 2.
fn exit_code(err: &anyhow::Error) -> u8 {
    use bvgamma_core::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::CheckFailed(_) | Error::QuadratureBudget { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) if o.passed => ExitCode::SUCCESS,
        Ok(o) => {
            eprintln!("check failed");
            if let Some(w) = o.witness {
                eprintln!("witness: {w}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
