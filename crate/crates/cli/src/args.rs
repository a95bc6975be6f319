use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use taboo_hitting::QuadratureConfig;

#[derive(Debug, Parser)]
#[command(
    name = "taboo",
    version,
    about = "Hitting and taboo-hitting probabilities of lattice random walks"
)]
pub struct Cli {
    /// Worker threads for quadrature and simulation.
    #[arg(long, global = true, env = "TABOO_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limit H(∞) of the hitting or taboo-hitting time.
    Limit(LimitArgs),
    /// Leading order and constant of the deficit H(∞) − H(t).
    Tail(TailArgs),
    /// c.d.f. curves on a uniform time grid, written as CSV.
    Curve(CurveArgs),
    /// Monte Carlo estimates of the c.d.f. at given times.
    Simulate(SimulateArgs),
    /// Built-in verification suites.
    Verify(VerifyArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

/// Lattice point given on the command line as `"1,-2,0"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point(pub Vec<i64>);

fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<i64>()
                .map_err(|e| format!("bad coordinate {c:?}: {e}"))
        })
        .collect::<Result<_, _>>()
        .map(Point)
}

#[derive(Debug, Args, Clone)]
pub struct QueryArgs {
    /// Model file: {"d": .., "jumps": [{"z": [..], "rate": ..}, ..]}.
    #[arg(long)]
    pub model: PathBuf,
    /// Start point, comma separated.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x: Point,
    /// Target point.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub y: Point,
    /// Taboo point; without it the plain hitting time is used.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub z: Option<Point>,
}

#[derive(Debug, Args, Clone)]
pub struct QuadArgs {
    /// Initial quadrature points per torus axis (default depends on d).
    #[arg(long)]
    pub points_per_axis: Option<usize>,
    /// Maximum number of grid doublings.
    #[arg(long)]
    pub refinement_limit: Option<u32>,
    /// Relative tolerance between successive grids.
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

impl QuadArgs {
    pub fn config(&self, d: usize) -> QuadratureConfig {
        let mut cfg = QuadratureConfig::for_dimension(d);
        if let Some(n) = self.points_per_axis {
            cfg.points_per_axis = n;
        }
        if let Some(n) = self.refinement_limit {
            cfg.refinement_limit = n;
        }
        if let Some(t) = self.rel_tol {
            cfg.rel_tol = t;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Report the first-jump clock variant with its atom at zero.
    #[arg(long)]
    pub minus: bool,
    /// Compare against the absorption oracle and Monte Carlo.
    #[arg(long)]
    pub verify: bool,
    /// Box radius for the absorption oracle (default depends on d).
    #[arg(long)]
    pub box_radius: Option<i64>,
    /// Monte Carlo paths for --verify.
    #[arg(long, default_value_t = 200_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Report the first-jump clock variant.
    #[arg(long)]
    pub minus: bool,
    /// Also estimate the constant from the Laplace transform (d ≤ 2).
    #[arg(long)]
    pub extract: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Time step (default 0.05/a).
    #[arg(long)]
    pub step: Option<f64>,
    /// Last grid time (default 50/a).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// CSV output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    /// Comma-separated evaluation times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t_list: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Paths are cut off after this many jumps.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_jumps: u64,
    /// Start the clock at the first jump.
    #[arg(long)]
    pub minus: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Limits,
    Tails,
    Curves,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Extra checks on this model alongside the built-in cases.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
