//! Command-line driver for the `fiberlap` spectral toolkit.
//!
//! Every invocation resolves one task — a band tabulation, a resolvent
//! query, a limiting-absorption sweep, a projection audit, a spectral
//! density export, a decay certificate, an analytic continuation, or the
//! built-in selftest battery — and always emits one machine-readable
//! summary on stdout:
//!
//! ```json
//! {"subcommand": "...", "config_echo": {...}, "results": {...},
//!  "checks": [{"name": "...", "pass": true, "value": ..., "tolerance": ...}]}
//! ```
//!
//! Floats are printed in fixed 17-significant-digit scientific notation,
//! so summaries and CSV artifacts are byte-stable across runs.  Exit codes
//! separate the three failure classes: `0` when every check passes, `1`
//! when the science fails (a check is violated or a computation refuses
//! its inputs), `2` when the invocation itself is unusable (unknown flag,
//! invalid value, unwritable output path, malformed config file).
//!
//! Flag defaults can be kept in a JSON config file (`--config path`); the
//! file holds the same keys as the subcommand's long flags, and explicit
//! flags win over file values.  The `FIBERLAP_THREADS` environment
//! variable sets the default parallelism degree; `--threads` overrides it.

mod descriptor;
mod tasks;

pub use descriptor::ModeSpec;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "FIBERLAP_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The invocation cannot run: bad flag value, malformed config file,
    /// unwritable output path.  Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// The computation ran (or refused honestly) and the science failed.
    /// Exit code 1.
    #[error("{0}")]
    Scientific(String),
}

impl From<fiberlap::Error> for CliError {
    fn from(e: fiberlap::Error) -> Self {
        CliError::Scientific(e.to_string())
    }
}

/// One verified statement about the finished run.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckEntry {
    pub fn new(name: &str, pass: bool, value: f64, tolerance: f64) -> CheckEntry {
        CheckEntry {
            name: name.to_string(),
            pass,
            value,
            tolerance,
        }
    }
}

/// The machine-readable run summary; the only stdout output.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub subcommand: String,
    pub config_echo: Value,
    pub results: Value,
    pub checks: Vec<CheckEntry>,
}

// ---------------------------------------------------------------------
// Command-line surface
// ---------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "fiberlap",
    version,
    about = "Spectral toolkit for the magnetic Dirichlet Laplacian on the half-plane"
)]
pub struct Cli {
    /// Worker threads (default: FIBERLAP_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory receiving CSV artifacts and summary.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file with defaults for this subcommand's flags (flags win).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate one dispersion band with its derivative and weight.
    Bands(BandsArgs),
    /// Resolvent matrix element at one query point.
    Resolvent(ResolventArgs),
    /// Hölder certificate of a resolvent element over a spectral window.
    LapSweep(LapSweepArgs),
    /// Synthesize a harmonic on a rectangle and project it back.
    Project(ProjectArgs),
    /// Export the spectral density of a mode over an energy range.
    Density(DensityArgs),
    /// Edge-decay certificate of a harmonic.
    Decay(DecayArgs),
    /// Analytic continuation of a squared harmonic norm.
    Continue(ContinueArgs),
    /// Deterministic verification battery.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Default)]
pub struct BandsArgs {
    /// Band index n (threshold E_n = 2n-1).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub k_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k_max: Option<f64>,
    /// Half-line box for the fiber solver.
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Grid points on the coarse solver grid.
    #[arg(long)]
    pub n_points: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct ResolventArgs {
    /// Momentum-space test function, repeatable (one per band).
    #[arg(long = "mode")]
    pub modes: Vec<String>,
    /// Real part of an off-axis query point.
    #[arg(long, allow_negative_numbers = true)]
    pub re: Option<f64>,
    /// Imaginary part of an off-axis query point (nonzero).
    #[arg(long, allow_negative_numbers = true)]
    pub im: Option<f64>,
    /// On-axis energy for a one-sided boundary value.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Boundary side, `plus` or `minus`.
    #[arg(long)]
    pub side: Option<String>,
    /// Bands summed explicitly; the rest enter the tail bound.
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct LapSweepArgs {
    #[arg(long = "mode")]
    pub modes: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_hi: Option<f64>,
    /// Height of the sampling rectangle above the axis.
    #[arg(long)]
    pub eta_max: Option<f64>,
    /// Hölder exponent in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Energy samples per window.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Skip the membership gate (negative controls).
    #[arg(long)]
    pub allow_nonmember: bool,
    /// Threshold for a shrinking-window divergence sweep.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Comma-separated decreasing window widths for the sweep.
    #[arg(long)]
    pub widths: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ProjectArgs {
    #[arg(long = "mode")]
    pub modes: Vec<String>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub ny: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct DensityArgs {
    #[arg(long = "mode")]
    pub modes: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_hi: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct DecayArgs {
    #[arg(long = "mode")]
    pub modes: Vec<String>,
    /// Weight exponent entering the admissible-rate bound.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub l_lo: Option<f64>,
    #[arg(long)]
    pub l_hi: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct ContinueArgs {
    #[arg(long = "mode")]
    pub modes: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_re: Option<f64>,
    /// Imaginary part of y; the continuation lives in Im y <= 0.
    #[arg(long, allow_negative_numbers = true)]
    pub y_im: Option<f64>,
    /// Stencil radius for the Cauchy-Riemann residual.
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct SelftestArgs {
    /// Run the fast subset only.
    #[arg(long)]
    pub quick: bool,
}

// ---------------------------------------------------------------------
// Config files: same keys as the flags, flags win.
// ---------------------------------------------------------------------

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct BandsFile {
    n: Option<usize>,
    k_min: Option<f64>,
    k_max: Option<f64>,
    x_max: Option<f64>,
    n_points: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ResolventFile {
    modes: Option<Vec<String>>,
    re: Option<f64>,
    im: Option<f64>,
    lambda: Option<f64>,
    side: Option<String>,
    cutoff: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct LapSweepFile {
    modes: Option<Vec<String>>,
    lambda_lo: Option<f64>,
    lambda_hi: Option<f64>,
    eta_max: Option<f64>,
    alpha: Option<f64>,
    samples: Option<usize>,
    allow_nonmember: Option<bool>,
    threshold: Option<f64>,
    widths: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ProjectFile {
    modes: Option<Vec<String>>,
    y_max: Option<f64>,
    ny: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct DensityFile {
    modes: Option<Vec<String>>,
    lambda_lo: Option<f64>,
    lambda_hi: Option<f64>,
    steps: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct DecayFile {
    modes: Option<Vec<String>>,
    alpha: Option<f64>,
    l_lo: Option<f64>,
    l_hi: Option<f64>,
    steps: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ContinueFile {
    modes: Option<Vec<String>>,
    y_re: Option<f64>,
    y_im: Option<f64>,
    radius: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SelftestFile {
    quick: Option<bool>,
}

fn load_file<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Usage(format!("cannot read config file {}: {e}", p.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!("config file {}: {e}", p.display()))
            })
        }
    }
}

// ---------------------------------------------------------------------
// Resolved tasks
// ---------------------------------------------------------------------

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BandsTask {
    pub n: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub x_max: f64,
    pub n_points: usize,
}

/// Where a resolvent query sits relative to the spectrum.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Point {
    Offaxis { re: f64, im: f64 },
    Boundary { lambda: f64, side: BoundarySide },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySide {
    Plus,
    Minus,
}

impl BoundarySide {
    fn parse(s: &str) -> Result<BoundarySide, CliError> {
        match s {
            "plus" => Ok(BoundarySide::Plus),
            "minus" => Ok(BoundarySide::Minus),
            other => Err(CliError::Usage(format!(
                "side must be `plus` or `minus`, got `{other}`"
            ))),
        }
    }

    pub fn to_lib(self) -> fiberlap::Side {
        match self {
            BoundarySide::Plus => fiberlap::Side::Plus,
            BoundarySide::Minus => fiberlap::Side::Minus,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ResolventTask {
    pub modes: Vec<ModeSpec>,
    pub point: Point,
    pub cutoff: usize,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LapSweepTask {
    pub modes: Vec<ModeSpec>,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub eta_max: f64,
    pub alpha: f64,
    pub samples: usize,
    pub allow_nonmember: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepSpec {
    pub threshold: f64,
    pub widths: Vec<f64>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ProjectTask {
    pub modes: Vec<ModeSpec>,
    pub y_max: f64,
    pub ny: usize,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DensityTask {
    pub modes: Vec<ModeSpec>,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub steps: usize,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DecayTask {
    pub modes: Vec<ModeSpec>,
    pub alpha: f64,
    pub l_lo: f64,
    pub l_hi: f64,
    pub steps: usize,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ContinueTask {
    pub modes: Vec<ModeSpec>,
    pub y_re: f64,
    pub y_im: f64,
    pub radius: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SelftestTask {
    pub quick: bool,
}

#[derive(Debug)]
pub enum Task {
    Bands(BandsTask),
    Resolvent(ResolventTask),
    LapSweep(LapSweepTask),
    Project(ProjectTask),
    Density(DensityTask),
    Decay(DecayTask),
    Continue(ContinueTask),
    Selftest(SelftestTask),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Bands(_) => "bands",
            Task::Resolvent(_) => "resolvent",
            Task::LapSweep(_) => "lap-sweep",
            Task::Project(_) => "project",
            Task::Density(_) => "density",
            Task::Decay(_) => "decay",
            Task::Continue(_) => "continue",
            Task::Selftest(_) => "selftest",
        }
    }

    /// Scientific parameters of the run, echoed into the summary.
    pub fn echo(&self) -> Value {
        let v = match self {
            Task::Bands(t) => serde_json::to_value(t),
            Task::Resolvent(t) => serde_json::to_value(t),
            Task::LapSweep(t) => serde_json::to_value(t),
            Task::Project(t) => serde_json::to_value(t),
            Task::Density(t) => serde_json::to_value(t),
            Task::Decay(t) => serde_json::to_value(t),
            Task::Continue(t) => serde_json::to_value(t),
            Task::Selftest(t) => serde_json::to_value(t),
        };
        v.expect("task parameters are plain data")
    }
}

/// Fully resolved invocation: flags merged over the config file, with
/// defaults filled in and every value validated.
#[derive(Debug)]
pub struct RunConfig {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub task: Task,
}

// ---------------------------------------------------------------------
// Merging and validation
// ---------------------------------------------------------------------

fn parse_modes(
    flag: &[String],
    file: Option<Vec<String>>,
    want: Option<usize>,
) -> Result<Vec<ModeSpec>, CliError> {
    let tokens: Vec<String> = if !flag.is_empty() {
        flag.to_vec()
    } else {
        file.unwrap_or_default()
    };
    if tokens.is_empty() {
        return Err(CliError::Usage(
            "at least one --mode descriptor is required".into(),
        ));
    }
    if let Some(n) = want {
        if tokens.len() != n {
            return Err(CliError::Usage(format!(
                "this subcommand takes exactly {n} --mode descriptor(s), got {}",
                tokens.len()
            )));
        }
    }
    tokens
        .iter()
        .map(|t| ModeSpec::parse(t).map_err(CliError::Usage))
        .collect()
}

fn check_alpha(alpha: f64) -> Result<f64, CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(CliError::Usage(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )))
    }
}

fn check_window(lo: f64, hi: f64, what: &str) -> Result<(), CliError> {
    if lo < hi {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what} must be increasing, got ({lo}, {hi})"
        )))
    }
}

fn check_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| {
        CliError::Usage(format!("output path {} is unusable: {e}", out.display()))
    })?;
    let probe = out.join(".write-probe");
    std::fs::write(&probe, b"")
        .and_then(|()| std::fs::remove_file(&probe))
        .map_err(|e| {
            CliError::Usage(format!("output path {} is not writable: {e}", out.display()))
        })
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{THREADS_ENV}: {e}"))),
        Ok(s) => {
            let n: usize = s.parse().map_err(|_| {
                CliError::Usage(format!(
                    "{THREADS_ENV} must be a positive integer, got `{s}`"
                ))
            })?;
            if n == 0 {
                return Err(CliError::Usage(format!("{THREADS_ENV} must be positive")));
            }
            Ok(Some(n))
        }
    }
}

fn parse_widths(s: &str) -> Result<Vec<f64>, CliError> {
    let widths: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("width `{t}` is not a number")))
        })
        .collect::<Result<_, _>>()?;
    if widths.is_empty() || widths.windows(2).any(|w| w[1] >= w[0]) || widths[0] <= 0.0 {
        return Err(CliError::Usage(
            "widths must be positive and strictly decreasing".into(),
        ));
    }
    Ok(widths)
}

/// Merge flags over the config file, validate, and resolve defaults.
/// Every failure here is a usage error (exit code 2).
pub fn parse_config(cli: Cli) -> Result<RunConfig, CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    if let Some(out) = &cli.out {
        check_out_dir(out)?;
    }
    let config = cli.config.as_deref();
    let task = match cli.command {
        Command::Bands(a) => {
            let f: BandsFile = load_file(config)?;
            let t = BandsTask {
                n: a.n.or(f.n).unwrap_or(1),
                k_min: a.k_min.or(f.k_min).unwrap_or(-4.0),
                k_max: a.k_max.or(f.k_max).unwrap_or(4.5),
                x_max: a.x_max.or(f.x_max).unwrap_or(10.0),
                n_points: a.n_points.or(f.n_points).unwrap_or(2501),
            };
            if t.n == 0 || t.n > 6 {
                return Err(CliError::Usage(format!(
                    "band index must lie in 1..=6, got {}",
                    t.n
                )));
            }
            check_window(t.k_min, t.k_max, "the momentum range")?;
            if t.k_min > -4.0 + 1e-12 || t.k_max < 4.5 - 1e-12 {
                return Err(CliError::Usage(format!(
                    "the tabulation grid must span [-4, 4.5], got [{}, {}]",
                    t.k_min, t.k_max
                )));
            }
            if t.n_points < 200 || t.x_max / (t.n_points as f64 - 1.0) > 0.02 {
                return Err(CliError::Usage(
                    "the solver grid needs at least 200 points with spacing <= 0.02".into(),
                ));
            }
            Task::Bands(t)
        }
        Command::Resolvent(a) => {
            let f: ResolventFile = load_file(config)?;
            let modes = parse_modes(&a.modes, f.modes, None)?;
            let lambda = a.lambda.or(f.lambda);
            let re = a.re.or(f.re);
            let im = a.im.or(f.im);
            let side = a.side.or(f.side);
            let point = match (lambda, re) {
                (Some(lam), None) => {
                    let side = side.as_deref().unwrap_or("plus");
                    Point::Boundary {
                        lambda: lam,
                        side: BoundarySide::parse(side)?,
                    }
                }
                (None, Some(re)) => {
                    let im = im.ok_or_else(|| {
                        CliError::Usage("--re needs --im (nonzero) for an off-axis query".into())
                    })?;
                    if im == 0.0 {
                        return Err(CliError::Usage(
                            "on-axis queries go through --lambda/--side".into(),
                        ));
                    }
                    Point::Offaxis { re, im }
                }
                _ => {
                    return Err(CliError::Usage(
                        "give either --re/--im or --lambda/--side, not both".into(),
                    ))
                }
            };
            let cutoff = a.cutoff.or(f.cutoff).unwrap_or(6);
            let top = modes.iter().map(ModeSpec::band).max().unwrap_or(0);
            if cutoff < top {
                return Err(CliError::Usage(format!(
                    "--cutoff {cutoff} is below the highest populated band {top}"
                )));
            }
            Task::Resolvent(ResolventTask {
                modes,
                point,
                cutoff,
            })
        }
        Command::LapSweep(a) => {
            let f: LapSweepFile = load_file(config)?;
            let modes = parse_modes(&a.modes, f.modes, None)?;
            let lambda_lo = a.lambda_lo.or(f.lambda_lo).unwrap_or(0.9);
            let lambda_hi = a.lambda_hi.or(f.lambda_hi).unwrap_or(1.5);
            check_window(lambda_lo, lambda_hi, "the energy window")?;
            let eta_max = a.eta_max.or(f.eta_max).unwrap_or(0.1);
            if eta_max < 0.0 {
                return Err(CliError::Usage("eta-max must be nonnegative".into()));
            }
            let alpha = check_alpha(a.alpha.or(f.alpha).unwrap_or(0.4))?;
            let samples = a.samples.or(f.samples).unwrap_or(8);
            if !(2..=64).contains(&samples) {
                return Err(CliError::Usage(
                    "samples must lie between 2 and 64".into(),
                ));
            }
            let widths = match a.widths.or(f.widths) {
                Some(s) => Some(parse_widths(&s)?),
                None => None,
            };
            let threshold = a.threshold.or(f.threshold);
            let sweep = match (threshold, widths) {
                (Some(t), Some(w)) => Some(SweepSpec {
                    threshold: t,
                    widths: w,
                }),
                (None, None) => None,
                _ => {
                    return Err(CliError::Usage(
                        "a divergence sweep needs both --threshold and --widths".into(),
                    ))
                }
            };
            Task::LapSweep(LapSweepTask {
                modes,
                lambda_lo,
                lambda_hi,
                eta_max,
                alpha,
                samples,
                allow_nonmember: a.allow_nonmember || f.allow_nonmember.unwrap_or(false),
                sweep,
            })
        }
        Command::Project(a) => {
            let f: ProjectFile = load_file(config)?;
            let modes = parse_modes(&a.modes, f.modes, Some(1))?;
            let y_max = a.y_max.or(f.y_max).unwrap_or(20.0);
            let ny = a.ny.or(f.ny).unwrap_or(501);
            if y_max <= 0.0 || ny < 64 {
                return Err(CliError::Usage(
                    "the rectangle needs y-max > 0 and ny >= 64".into(),
                ));
            }
            Task::Project(ProjectTask { modes, y_max, ny })
        }
        Command::Density(a) => {
            let f: DensityFile = load_file(config)?;
            let modes = parse_modes(&a.modes, f.modes, Some(1))?;
            let lambda_lo = a.lambda_lo.or(f.lambda_lo).unwrap_or(1.0);
            let lambda_hi = a.lambda_hi.or(f.lambda_hi).unwrap_or(3.0);
            check_window(lambda_lo, lambda_hi, "the energy range")?;
            let steps = a.steps.or(f.steps).unwrap_or(101);
            if !(2..=100_000).contains(&steps) {
                return Err(CliError::Usage("steps must lie in 2..=100000".into()));
            }
            Task::Density(DensityTask {
                modes,
                lambda_lo,
                lambda_hi,
                steps,
            })
        }
        Command::Decay(a) => {
            let f: DecayFile = load_file(config)?;
            let modes = parse_modes(&a.modes, f.modes, Some(1))?;
            let alpha = check_alpha(a.alpha.or(f.alpha).unwrap_or(0.4))?;
            let l_lo = a.l_lo.or(f.l_lo).unwrap_or(3.0);
            let l_hi = a.l_hi.or(f.l_hi).unwrap_or(6.0);
            check_window(l_lo, l_hi, "the abscissa window")?;
            if l_lo < 0.0 {
                return Err(CliError::Usage("l-lo must be nonnegative".into()));
            }
            let steps = a.steps.or(f.steps).unwrap_or(13);
            if !(4..=1000).contains(&steps) {
                return Err(CliError::Usage("steps must lie in 4..=1000".into()));
            }
            Task::Decay(DecayTask {
                modes,
                alpha,
                l_lo,
                l_hi,
                steps,
            })
        }
        Command::Continue(a) => {
            let f: ContinueFile = load_file(config)?;
            let modes = parse_modes(&a.modes, f.modes, Some(1))?;
            let y_re = a.y_re.or(f.y_re).unwrap_or(0.0);
            let y_im = a.y_im.or(f.y_im).unwrap_or(-0.5);
            if y_im > 0.0 {
                return Err(CliError::Usage(format!(
                    "the continuation lives in Im y <= 0, got {y_im}"
                )));
            }
            let radius = a.radius.or(f.radius).unwrap_or(1e-3);
            if radius <= 0.0 {
                return Err(CliError::Usage("radius must be positive".into()));
            }
            Task::Continue(ContinueTask {
                modes,
                y_re,
                y_im,
                radius,
            })
        }
        Command::Selftest(a) => {
            let f: SelftestFile = load_file(config)?;
            if cli.out.is_none() {
                return Err(CliError::Usage(
                    "selftest writes artifacts and requires --out".into(),
                ));
            }
            Task::Selftest(SelftestTask {
                quick: a.quick || f.quick.unwrap_or(false),
            })
        }
    };
    Ok(RunConfig {
        threads,
        out: cli.out,
        task,
    })
}

// ---------------------------------------------------------------------
// Execution and output
// ---------------------------------------------------------------------

/// Run the resolved task and assemble its summary.
pub fn run(rc: &RunConfig) -> Result<Summary, CliError> {
    let out = rc.out.as_deref();
    let (results, checks) = match &rc.task {
        Task::Bands(t) => tasks::bands(t, out)?,
        Task::Resolvent(t) => tasks::resolvent(t)?,
        Task::LapSweep(t) => tasks::lap_sweep(t)?,
        Task::Project(t) => tasks::project(t, out)?,
        Task::Density(t) => tasks::density(t, out)?,
        Task::Decay(t) => tasks::decay(t, out)?,
        Task::Continue(t) => tasks::continuation(t)?,
        Task::Selftest(t) => tasks::selftest(t, out.expect("selftest requires --out"))?,
    };
    Ok(Summary {
        subcommand: rc.task.name().to_string(),
        config_echo: rc.task.echo(),
        results,
        checks,
    })
}

struct Sci17Formatter;

impl serde_json::ser::Formatter for Sci17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{:.16e}", value)
    }
}

/// Serialize a summary with fixed 17-significant-digit floats.
pub fn summary_to_json(summary: &Summary) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci17Formatter);
    summary
        .serialize(&mut ser)
        .expect("summaries are plain trees");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

fn emit(summary: &Summary, out: Option<&Path>) -> Result<(), CliError> {
    let text = summary_to_json(summary);
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Scientific(format!("cannot write summary: {e}")))?;
    if let Some(dir) = out {
        std::fs::write(dir.join("summary.json"), &text).map_err(|e| {
            CliError::Scientific(format!("cannot write summary.json: {e}"))
        })?;
    }
    Ok(())
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // First initialization wins; later calls are harmless no-ops.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Full process entry: returns the exit code instead of calling `exit`.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let rc = match parse_config(cli) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    init_threads(rc.threads);
    match run(&rc) {
        Ok(summary) => {
            if let Err(e) = emit(&summary, rc.out.as_deref()) {
                eprintln!("error: {e}");
                return 1;
            }
            if summary.checks.iter().all(|c| c.pass) {
                0
            } else {
                1
            }
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Scientific(m)) => {
            // The science failed outright; still emit a summary so the
            // caller sees what ran and why it stopped.
            let summary = Summary {
                subcommand: rc.task.name().to_string(),
                config_echo: rc.task.echo(),
                results: serde_json::json!({ "error": m }),
                checks: vec![CheckEntry::new("run-completed", false, 0.0, 0.0)],
            };
            let _ = emit(&summary, rc.out.as_deref());
            1
        }
    }
}
