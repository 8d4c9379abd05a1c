use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Parser)]
#[command(name = "orderest", version, about = "Improved equivariant estimators for ordered location and scale parameters")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate psi_lambda(t) from the closed form and the generic solver.
    Psi(PsiArgs),
    /// Print the envelope bounds of psi_lambda(t) over lambda.
    Bounds(BoundsArgs),
    /// Apply a catalogued estimator and its clipped version to one observation.
    Improve(ImproveArgs),
    /// Simulate risk curves and write CSV and/or SVG files.
    Simulate(SimulateArgs),
    /// Restricted estimates of two ordered means from paired data.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalArgs {
    /// Base seed of the random number streams [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo replicates per grid point [default: 10000]
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Directory for simulation output [default: .]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// JSON file whose keys mirror the command-line flags
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Simulation output format [default: csv]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Absolute tolerance of the root finder
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Largest lambda of the envelope grid
    #[arg(long, global = true)]
    pub lambda_grid_max: Option<f64>,
    /// Number of points in the envelope grid
    #[arg(long, global = true)]
    pub lambda_grid_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelArgs {
    /// bvn, dep_exp_gamma, indep_exp, cheriyan_gamma, power_uniform or indep_gamma
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub s2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a2: Option<f64>,
    /// squared_error or linex [default: the model's catalogued loss]
    #[arg(long)]
    pub loss: Option<String>,
    /// smaller or larger
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PsiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Comma-separated lambda values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Option<Vec<f64>>,
    /// Comma-separated ancillary values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Comma-separated ancillary values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ImproveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Estimator key such as smaller:bsee or bvn:larger:rmle
    #[arg(long)]
    pub key: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x2: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    /// Built-in configuration, fig1a..fig1h or fig2a..fig2f
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Comma-separated estimator kinds [default: every catalogued kind]
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Comma-separated lambda grid
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Option<Vec<f64>>,
    /// Stem of the output files [default: the preset name or "custom"]
    #[arg(long)]
    pub name: Option<String>,
    /// Draw independent samples for each estimator
    #[arg(long)]
    pub no_crn: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzeArgs {
    /// CSV with columns label, value_a, value_b [default: bundled sprinters data]
    #[arg(long)]
    pub data: Option<PathBuf>,
}

/// Keys accepted in a config file, with `-` and `_` interchangeable.
fn known_keys() -> BTreeSet<String> {
    let mut keys = BTreeSet::new();
    let mut add = |v: Value| {
        if let Value::Object(m) = v {
            keys.extend(m.into_iter().map(|(k, _)| k));
        }
    };
    add(serde_json::to_value(GlobalArgs::default()).unwrap_or_default());
    add(serde_json::to_value(PsiArgs::default()).unwrap_or_default());
    add(serde_json::to_value(BoundsArgs::default()).unwrap_or_default());
    add(serde_json::to_value(ImproveArgs::default()).unwrap_or_default());
    add(serde_json::to_value(SimulateArgs::default()).unwrap_or_default());
    add(serde_json::to_value(AnalyzeArgs::default()).unwrap_or_default());
    keys
}

pub fn parse_config(text: &str) -> Result<Map<String, Value>, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    let Value::Object(map) = value else {
        return Err("config must be a JSON object".into());
    };
    let known = known_keys();
    let mut out = Map::new();
    for (k, v) in map {
        let key = k.replace('-', "_");
        if !known.contains(&key) {
            return Err(format!("unknown config key '{k}'"));
        }
        out.insert(key, v);
    }
    Ok(out)
}

/// Flags given on the command line take precedence over config values.
pub fn merge<T: Serialize + DeserializeOwned>(cli: &T, config: &Map<String, Value>) -> Result<T, String> {
    let mut merged = config.clone();
    if let Ok(Value::Object(given)) = serde_json::to_value(cli) {
        for (k, v) in given {
            if !v.is_null() && v != Value::Bool(false) {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| format!("bad config value: {e}"))
}
