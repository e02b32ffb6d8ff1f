use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "mcl", version, about = "Noisy monitored circuit simulator")]
pub struct Cli {
    /// Output CSV path; stdout when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads; defaults to available parallelism.
    #[arg(long, global = true, env = "MCL_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Steady-state order parameter and fluctuations on a p_m × Θ grid.
    AdaptiveSweep(AdaptiveSweepArgs),
    /// Order-parameter time series of the adaptive model.
    AdaptiveDynamics(DynamicsArgs),
    /// Final-time fluctuations and purity of the U(1) model on a p_m × Θ grid.
    U1Sweep(U1SweepArgs),
    /// Histograms of per-script U(1) charge fluctuations.
    U1Hist(U1HistArgs),
    /// Simulated steady state next to the classical channel model.
    ClassicalCompare(CompareArgs),
    /// Closed-form tables: gate fidelity, error-channel decomposition, superoperators.
    Analytics(AnalyticsArgs),
    /// Infer the noise amplitude and gate fidelity from a measured order parameter.
    BenchmarkNoise(BenchmarkArgs),
    /// Regenerate an output file from its `# meta:` header.
    RerunFromMeta(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::AdaptiveSweep(_) => "adaptive-sweep",
            Command::AdaptiveDynamics(_) => "adaptive-dynamics",
            Command::U1Sweep(_) => "u1-sweep",
            Command::U1Hist(_) => "u1-hist",
            Command::ClassicalCompare(_) => "classical-compare",
            Command::Analytics(_) => "analytics",
            Command::BenchmarkNoise(_) => "benchmark-noise",
            Command::RerunFromMeta(_) => "rerun-from-meta",
        }
    }

    pub fn seed_mut(&mut self) -> Option<&mut SeedArg> {
        match self {
            Command::AdaptiveSweep(a) => Some(&mut a.circuit.seed),
            Command::AdaptiveDynamics(a) => Some(&mut a.circuit.seed),
            Command::U1Sweep(a) => Some(&mut a.circuit.seed),
            Command::U1Hist(a) => Some(&mut a.circuit.seed),
            Command::ClassicalCompare(a) => Some(&mut a.circuit.seed),
            Command::Analytics(a) => Some(&mut a.seed),
            Command::BenchmarkNoise(_) | Command::RerunFromMeta(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CircuitArgs {
    /// Number of qubits.
    #[arg(long = "L", default_value_t = 12)]
    #[serde(rename = "L")]
    pub size: usize,
    /// Circuit depth; 4L (adaptive) or 2L (U(1)) when absent.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Per-qubit noise probability after each gate.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Master seed, or `random`.
    #[arg(long, default_value = "0")]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AdaptiveSweepArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    /// Measurement rates, `start:stop:step` or comma list.
    #[arg(long, default_value = "0:1:0.05")]
    pub pm: Grid,
    /// Noise amplitudes Θ.
    #[arg(long, default_value = "0:1:0.1")]
    pub theta: Grid,
    /// Trajectories per cell.
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, default_value = "0.4")]
    pub pm: Grid,
    #[arg(long, default_value = "0:1:0.25")]
    pub theta: Grid,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct U1SweepArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, default_value = "0:1:0.1")]
    pub pm: Grid,
    #[arg(long, default_value = "0:1:0.1")]
    pub theta: Grid,
    /// Circuit scripts per cell.
    #[arg(long, default_value_t = 200)]
    pub scripts: usize,
    /// Noise replays per script.
    #[arg(long, default_value_t = 100)]
    pub noise_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct U1HistArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, default_value = "0.8")]
    pub pm: Grid,
    #[arg(long, default_value = "0.2")]
    pub theta: Grid,
    #[arg(long, default_value_t = 200)]
    pub scripts: usize,
    #[arg(long, default_value_t = 50)]
    pub noise_reps: usize,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, default_value = "0.4,0.8")]
    pub pm: Grid,
    #[arg(long, default_value = "0:1:0.1")]
    pub theta: Grid,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    /// Skip the simulation and emit only the classical columns.
    #[arg(long)]
    pub analytic_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Table {
    Fidelity,
    Decomposition,
    Superops,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyticsArgs {
    #[arg(long, value_enum, default_value_t = Table::Fidelity)]
    pub table: Table,
    #[arg(long, default_value = "0:1:0.1")]
    pub theta: Grid,
    #[arg(long, default_value = "0.25,0.5,1")]
    pub gamma: Grid,
    #[arg(long, default_value = "0,0.3,1")]
    pub pm: Grid,
    /// Monte Carlo samples per fidelity row; 0 disables the estimate.
    #[arg(long, default_value_t = 0)]
    pub mc_samples: u64,
    #[arg(long, default_value = "0")]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    /// Measured steady-state order parameter.
    #[arg(long, allow_negative_numbers = true)]
    pub n_bar: f64,
    #[arg(long, default_value_t = 0.8)]
    pub pm: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// CSV file carrying a `# meta:` header.
    pub input: PathBuf,
    /// Compare the regenerated bytes with the input instead of writing them.
    #[arg(long)]
    pub check: bool,
}

/// Master seed as given on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SeedArg {
    Fixed(u64),
    Random,
}

impl SeedArg {
    pub fn value(self) -> u64 {
        match self {
            SeedArg::Fixed(s) => s,
            SeedArg::Random => panic!("random seed must be resolved before use"),
        }
    }
}

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(SeedArg::Random);
        }
        s.parse().map(SeedArg::Fixed).map_err(|_| format!("seed must be an unsigned integer or `random`, got `{s}`"))
    }
}

impl fmt::Display for SeedArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedArg::Fixed(s) => write!(f, "{s}"),
            SeedArg::Random => f.write_str("random"),
        }
    }
}

impl TryFrom<String> for SeedArg {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<SeedArg> for String {
    fn from(s: SeedArg) -> String {
        s.to_string()
    }
}

const MAX_GRID_POINTS: usize = 100_000;

/// Parameter list from comma-separated items, each a number or an
/// inclusive `start:stop:step` range (endpoints within 1e-12).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Grid {
    text: String,
    values: Vec<f64>,
}

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

/// Drops float noise such as 0.30000000000000004.
fn snap(v: f64) -> f64 {
    format!("{v:.12}").parse().unwrap_or(v)
}

fn parse_range(item: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = item.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![parse_number(single)?]),
        [start, stop, step] => {
            let (a, b, s) = (parse_number(start)?, parse_number(stop)?, parse_number(step)?);
            if s <= 0.0 {
                return Err(format!("step must be positive in `{item}`"));
            }
            if b < a - 1e-12 {
                return Err(format!("stop is below start in `{item}`"));
            }
            let count = ((b - a + 1e-12) / s).floor() as usize + 1;
            if count > MAX_GRID_POINTS {
                return Err(format!("`{item}` has more than {MAX_GRID_POINTS} points"));
            }
            Ok((0..count).map(|k| snap(a + k as f64 * s)).collect())
        }
        _ => Err(format!("expected `value` or `start:stop:step`, got `{item}`")),
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut values = Vec::new();
        for item in s.split(',') {
            if item.trim().is_empty() {
                return Err(format!("empty item in grid `{s}`"));
            }
            values.extend(parse_range(item.trim())?);
        }
        if values.len() > MAX_GRID_POINTS {
            return Err(format!("grid `{s}` has more than {MAX_GRID_POINTS} points"));
        }
        Ok(Grid { text: s.to_string(), values })
    }
}

impl TryFrom<String> for Grid {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Grid> for String {
    fn from(g: Grid) -> String {
        g.text
    }
}
