//! Command-line surface. Every resolved command is serializable so that a
//! run manifest can replay it.

use std::path::PathBuf;

use cavity_squeeze::{LoPhase, Normalization};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "cavity-squeeze", version, about = "Spectral covariance, hidden squeezing and homodyne limits of multimode cavity systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "command", content = "args")]
pub enum Command {
    /// Decide whether the spectral covariance is real or complex.
    Classify(ClassifyArgs),
    /// Optimal and homodyne squeezing spectra, or a matrix dump.
    Spectrum(SpectrumArgs),
    /// Best homodyne detection at one frequency.
    Hd(HdArgs),
    /// Sweep one scenario parameter.
    Scan(ScanArgs),
    /// List, run or export the built-in scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Run the invariant suite and the preset golden checks.
    Selftest(SelftestArgs),
    /// Print the model-file JSON schema or validate a model file.
    Schema(SchemaArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action", content = "args")]
pub enum ScenarioCommand {
    List(ListArgs),
    Run(RunArgs),
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// Spectral covariance σ(ω).
    Sigma,
    /// Transfer function S(ω).
    Transfer,
}

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelSource {
    /// Built-in scenario name (see `scenario list`).
    #[arg(long, required_unless_present = "model_file", conflicts_with = "model_file")]
    pub scenario: Option<String>,
    /// Model JSON file.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Scenario parameter override.
    #[arg(long = "set", value_name = "KEY=VALUE", requires = "scenario")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Args, Serialize, Deserialize)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub omega_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub omega_count: Option<usize>,
    /// Explicit comma-separated frequencies, strictly increasing.
    #[arg(
        long = "omega",
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with_all = ["omega_min", "omega_max", "omega_count"]
    )]
    pub omega_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t)]
    pub output: Format,
    /// Data file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest file; defaults to `<out>.manifest.json`, or
    /// `cavity-squeeze.manifest.json` when writing to stdout.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, default_value_t = cavity_squeeze::criteria::DEFAULT_TOL)]
    pub tol: f64,
    /// Also check the verdict against the covariance on a frequency grid.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Comma-separated LO mode weights (normalized); unit weight on the first analysed mode by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lo_mode_weights: Vec<f64>,
    /// LO phase in radians, or `scan` to optimize it at every frequency.
    #[arg(long, default_value = "scan")]
    pub lo_phase: LoPhase,
    #[arg(long, default_value = "unity")]
    pub normalization: Normalization,
    /// Comma-separated modes to keep (reduced state); scenario focus modes by default.
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<usize>,
    /// Dump a full matrix per frequency instead of the squeezing columns.
    #[arg(long, value_enum)]
    pub matrix: Option<MatrixKind>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct HdArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Sideband frequency; the scenario reference frequency by default.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<usize>,
    #[arg(long, default_value = "unity")]
    pub normalization: Normalization,
    /// Random restarts of the LO optimization.
    #[arg(long, default_value_t = cavity_squeeze::squeezing::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = cavity_squeeze::squeezing::DEFAULT_SEED)]
    pub seed: u64,
    /// Also evaluate this fixed LO (comma-separated weights, normalized).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lo_mode_weights: Vec<f64>,
    #[arg(long, default_value = "scan")]
    pub lo_phase: LoPhase,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Parameter to vary.
    #[arg(long)]
    pub param: String,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["from", "to", "steps"])]
    pub values: Vec<f64>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["to", "steps"])]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ListArgs {
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RunArgs {
    pub name: String,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value = "unity")]
    pub normalization: Normalization,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExportArgs {
    pub name: String,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0xC0FFEE)]
    pub seed: u64,
    /// Number of random models in the invariant suite.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 4)]
    pub max_modes: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SchemaArgs {
    /// Validate this model file instead of printing the schema.
    #[arg(long)]
    pub validate: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest_file: PathBuf,
    /// Write the data here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl Command {
    /// Data destination and manifest override.
    pub fn destinations(&self) -> (Option<PathBuf>, Option<PathBuf>) {
        let pair = |o: &OutputArgs| (o.out.clone(), o.manifest.clone());
        match self {
            Command::Classify(a) => (a.out.clone(), a.manifest.clone()),
            Command::Spectrum(a) => pair(&a.output),
            Command::Hd(a) => pair(&a.output),
            Command::Scan(a) => pair(&a.output),
            Command::Scenario(ScenarioCommand::List(a)) => pair(&a.output),
            Command::Scenario(ScenarioCommand::Run(a)) => pair(&a.output),
            Command::Scenario(ScenarioCommand::Export(a)) => (a.out.clone(), a.manifest.clone()),
            Command::Selftest(a) => pair(&a.output),
            Command::Schema(a) => (a.out.clone(), a.manifest.clone()),
            Command::Replay(a) => (a.out.clone(), a.manifest.clone()),
        }
    }

    /// Redirect the data output, dropping any recorded manifest location.
    pub fn redirect(&mut self, out: PathBuf) {
        let set = |o: &mut OutputArgs| {
            o.out = Some(out.clone());
            o.manifest = None;
        };
        match self {
            Command::Classify(a) => (a.out, a.manifest) = (Some(out), None),
            Command::Spectrum(a) => set(&mut a.output),
            Command::Hd(a) => set(&mut a.output),
            Command::Scan(a) => set(&mut a.output),
            Command::Scenario(ScenarioCommand::List(a)) => set(&mut a.output),
            Command::Scenario(ScenarioCommand::Run(a)) => set(&mut a.output),
            Command::Scenario(ScenarioCommand::Export(a)) => (a.out, a.manifest) = (Some(out), None),
            Command::Selftest(a) => set(&mut a.output),
            Command::Schema(a) => (a.out, a.manifest) = (Some(out), None),
            Command::Replay(a) => (a.out, a.manifest) = (Some(out), None),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Spectrum(_) => "spectrum",
            Command::Hd(_) => "hd",
            Command::Scan(_) => "scan",
            Command::Scenario(ScenarioCommand::List(_)) => "scenario list",
            Command::Scenario(ScenarioCommand::Run(_)) => "scenario run",
            Command::Scenario(ScenarioCommand::Export(_)) => "scenario export",
            Command::Selftest(_) => "selftest",
            Command::Schema(_) => "schema",
            Command::Replay(_) => "replay",
        }
    }
}
