//! Argument parsing and the validated run configuration.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::report::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Project,
    Power,
    Breakdown,
    Coverage,
    Medianbias,
    Hajek,
    Ranks,
    Example,
    LemmaTv,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Project => "project",
            Command::Power => "power",
            Command::Breakdown => "breakdown",
            Command::Coverage => "coverage",
            Command::Medianbias => "medianbias",
            Command::Hajek => "hajek",
            Command::Ranks => "ranks",
            Command::Example => "example",
            Command::LemmaTv => "lemma-tv",
        }
    }

    /// Built-in example used when neither `--example` nor `--config` is given.
    fn default_example(self) -> u8 {
        match self {
            Command::Breakdown => 2,
            _ => 1,
        }
    }
}

/// Where the local model comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "source")]
pub enum ModelSource {
    /// Built-in example 1 or 2 at parameter `a`.
    Example { id: u8, a: f64 },
    /// Model file, see [`crate::config`].
    Config { path: PathBuf },
}

/// Score function for the `ranks` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreChoice {
    /// `Φ⁻¹((1 + s)/2)`.
    Normal,
    /// `ϱ(s) = s`.
    Wilcoxon,
    /// Normal scores projected onto the span of the example-1 scores at `--a`.
    Projected,
}

/// A validated invocation. `output` and `workers` do not affect results and
/// are left out of the echo written into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelSource,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
    pub c: f64,
    pub t: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    /// Index of the generator used as the path direction.
    pub tangent: Option<usize>,
    /// Weights on the generators defining the path direction.
    pub weights: Option<Vec<f64>>,
    pub probe: Option<Vec<f64>>,
    pub scores: ScoreChoice,
    /// Cone-estimator floor `a` in `Sₙ ∨ (T(P) − a/√n)`.
    pub floor: f64,
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Parameter `a` of a built-in example model, or of example 1 when the
    /// model comes from a file.
    pub fn example_a(&self) -> f64 {
        match self.model {
            ModelSource::Example { a, .. } => a,
            ModelSource::Config { .. } => 1.0,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "onesided", version, about = "One-sided efficient tests and confidence limits over tangent cones")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Gram system, span and cone projections, KKT residuals.
    Project(Flags),
    /// Size and power of the cone and span tests along a quadratic path.
    Power(Flags),
    /// Rejection rate of the cone test along a path inside the enlarged null.
    Breakdown(Flags),
    /// Coverage of the lower confidence limits and two-sided span intervals.
    Coverage(Flags),
    /// Probability of underestimating the first-order target along a path.
    Medianbias(Flags),
    /// Distribution of the centered estimators along paths against the base.
    Hajek(Flags),
    /// Signed rank tests: identity check, size and agreement with the κ test.
    Ranks(Flags),
    /// Printed table of example 1 (exit 1 on deviation > 1e-3).
    Example(Flags),
    /// Total-variation bound for near-optimal discrete tests on random instances.
    #[command(name = "lemma-tv")]
    LemmaTv(Flags),
}

#[derive(Debug, Clone, Args)]
struct Flags {
    /// Built-in example model (1 or 2).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), conflicts_with = "config")]
    example: Option<u8>,
    /// Model file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Example parameter a > 0.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    a: f64,
    /// Sample size.
    #[arg(long, default_value_t = 2000, value_parser = at_least_one)]
    n: usize,
    /// Monte Carlo replications (random instances for lemma-tv).
    #[arg(long, default_value_t = 10_000, value_parser = at_least_one)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Level in (0, 1).
    #[arg(long, default_value_t = 0.05, value_parser = level)]
    alpha: f64,
    /// Separation c > 0: `t⟨κ|g⟩ = c` for power, limit offset for coverage.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    c: f64,
    /// Path parameter t > 0.
    #[arg(long, value_parser = positive)]
    t: Option<f64>,
    /// Grid `start:stop:step` or comma-separated list.
    #[arg(long, value_parser = parse_grid)]
    t_grid: Option<Grid>,
    /// Generator index (from 0) giving the path direction.
    #[arg(long)]
    tangent: Option<usize>,
    /// Comma-separated generator weights giving the path direction.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "tangent")]
    weights: Option<Vec<f64>>,
    /// Comma-separated probe points for hajek.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    probe: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = ScoreChoice::Normal)]
    scores: ScoreChoice,
    /// Floor a ≥ 0 of the modified cone estimator.
    #[arg(long, default_value_t = 1.0, value_parser = nonnegative)]
    floor: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: ONESIDED_WORKERS, else all cores).
    #[arg(long, value_parser = at_least_one)]
    workers: Option<usize>,
}

/// Parsed `--t-grid`.
#[derive(Debug, Clone, PartialEq)]
struct Grid(Vec<f64>);

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {x}"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be nonnegative, got {x}"))
    }
}

fn level(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("must lie in (0, 1), got {x}"))
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("must be an integer ≥ 1, got `{s}`")),
    }
}

const MAX_GRID: usize = 100_000;

fn parse_grid(s: &str) -> Result<Grid, String> {
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("grid `{s}` must be start:stop:step"));
        };
        let (start, stop, step) = (finite(start)?, finite(stop)?, positive(step)?);
        if stop < start {
            return Err(format!("grid stop {stop} is below start {start}"));
        }
        // tolerate stop landing a rounding error short of the last step
        let count = ((stop - start) / step + 1e-9).floor() + 1.0;
        if count > MAX_GRID as f64 {
            return Err(format!("grid `{s}` has more than {MAX_GRID} points"));
        }
        (0..count as usize).map(|i| crate::report::round_sig(start + i as f64 * step)).collect()
    } else {
        s.split(',').map(finite).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("grid is empty".to_string());
    }
    Ok(Grid(values))
}

/// Parses arguments (without the program name) into a validated config.
/// Usage errors carry exit code 2; `--help` and `--version` come back as
/// errors with exit code 0.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = std::iter::once(OsString::from("onesided")).chain(argv.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(args)?;
    let (command, f) = match cli.command {
        Sub::Project(f) => (Command::Project, f),
        Sub::Power(f) => (Command::Power, f),
        Sub::Breakdown(f) => (Command::Breakdown, f),
        Sub::Coverage(f) => (Command::Coverage, f),
        Sub::Medianbias(f) => (Command::Medianbias, f),
        Sub::Hajek(f) => (Command::Hajek, f),
        Sub::Ranks(f) => (Command::Ranks, f),
        Sub::Example(f) => (Command::Example, f),
        Sub::LemmaTv(f) => (Command::LemmaTv, f),
    };
    let model = match (f.config, f.example) {
        (Some(path), _) => ModelSource::Config { path },
        (None, id) => ModelSource::Example { id: id.unwrap_or(command.default_example()), a: f.a },
    };
    Ok(RunConfig {
        command,
        model,
        n: f.n,
        replications: f.reps,
        seed: f.seed,
        alpha: f.alpha,
        c: f.c,
        t: f.t,
        t_grid: f.t_grid.map(|g| g.0),
        tangent: f.tangent,
        weights: f.weights,
        probe: f.probe,
        scores: f.scores,
        floor: f.floor,
        format: f.format,
        output: f.output,
        workers: f.workers,
    })
}
