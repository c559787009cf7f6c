use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use labelrefine::event_log::{CsvSchema, PartitionKey, DEFAULT_TIME_FORMAT};
use labelrefine::mixture::EmConfig;
use labelrefine::refinement::{PipelineConfig, WatsonMode};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "labelrefine", version, about = "Time-based label refinement for sensor event logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the refinement analysis on every label and write a JSON report.
    Analyze(AnalyzeArgs),
    /// Apply accepted refinements and write the relabeled log.
    Refine(RefineArgs),
    /// Write a DOT rendering of a Petri net or of a log's directly-follows graph.
    Export(ExportArgs),
    /// Enumerate the language of a Petri net and check words against it.
    TestNet(TestNetArgs),
    /// Re-run the analyze or refine run recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LogArgs {
    /// Event log CSV.
    #[arg(long)]
    pub log: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SchemaArgs {
    #[arg(long, default_value = "timestamp")]
    pub timestamp_col: String,
    #[arg(long, default_value = "sensor")]
    pub sensor_col: String,
    #[arg(long, default_value = "value")]
    pub value_col: String,
    #[arg(long, default_value = "address")]
    pub address_col: String,
    /// Column holding existing labels; the sensor name is used when absent.
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// chrono format string of the timestamp column.
    #[arg(long, default_value = DEFAULT_TIME_FORMAT)]
    pub time_format: String,
    /// How events are grouped into traces.
    #[arg(long, value_enum, default_value_t = Partition::AddressDay)]
    pub partition: Partition,
}

impl SchemaArgs {
    pub fn csv_schema(&self) -> CsvSchema {
        CsvSchema {
            timestamp: self.timestamp_col.clone(),
            sensor: self.sensor_col.clone(),
            value: Some(self.value_col.clone()),
            address: Some(self.address_col.clone()),
            label: Some(self.label_col.clone()),
            time_format: self.time_format.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Partition {
    AddressDay,
    Day,
    Address,
}

impl From<Partition> for PartitionKey {
    fn from(p: Partition) -> Self {
        match p {
            Partition::AddressDay => PartitionKey::AddressDay,
            Partition::Day => PartitionKey::Day,
            Partition::Address => PartitionKey::Address,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PipelineArgs {
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Significance level for all tests unless overridden individually.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub alpha_uniformity: Option<f64>,
    #[arg(long)]
    pub alpha_unimodality: Option<f64>,
    #[arg(long)]
    pub alpha_watson: Option<f64>,
    #[arg(long)]
    pub alpha_controlflow: Option<f64>,
    /// Largest mixture size considered.
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
    /// Labels with fewer events are skipped.
    #[arg(long, default_value_t = 20)]
    pub min_events: usize,
    /// EM restarts per component count.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1000)]
    pub dip_replicates: usize,
    /// Parametric-bootstrap replicates for the Watson critical value; the tabulated value is used when absent.
    #[arg(long)]
    pub watson_bootstrap: Option<usize>,
    /// Reject refinements whose clusters fail the Watson test.
    #[arg(long)]
    pub watson_gate: bool,
    #[arg(long, default_value_t = 10_000)]
    pub controlflow_replicates: usize,
}

impl PipelineArgs {
    pub fn config(&self) -> Result<PipelineConfig, CliError> {
        let base = self.alpha.unwrap_or(0.01);
        let config = PipelineConfig {
            alpha_uniformity: self.alpha_uniformity.unwrap_or(base),
            alpha_unimodality: self.alpha_unimodality.unwrap_or(base),
            alpha_watson: self.alpha_watson.unwrap_or(base),
            alpha_controlflow: self.alpha_controlflow.unwrap_or(base),
            k_max: self.k_max,
            em: EmConfig {
                restarts: self.restarts,
                ..EmConfig::default()
            },
            dip_replicates: self.dip_replicates,
            watson_mode: match self.watson_bootstrap {
                Some(replicates) => WatsonMode::Bootstrap { replicates },
                None => WatsonMode::Tabulated,
            },
            watson_gate: self.watson_gate,
            controlflow_replicates: self.controlflow_replicates,
            min_events: self.min_events,
            seed: self.seed,
            ..PipelineConfig::default()
        };
        config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub log: LogArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// JSON report path.
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    /// Run manifest path; defaults to the report path with `.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RefineArgs {
    #[command(flatten)]
    pub log: LogArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Keep refining until nothing changes or the round cap is reached.
    #[arg(long)]
    pub iterative: bool,
    #[arg(long, default_value_t = 5)]
    pub max_rounds: usize,
    /// Refinements applied per round, most significant first [default: 1 with
    /// --iterative, otherwise all accepted ones].
    #[arg(long)]
    pub refinements_per_round: Option<usize>,
    /// Refined log CSV path.
    #[arg(long, default_value = "refined.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Petri net in the line-oriented text format.
    #[arg(long, conflicts_with = "log", required_unless_present = "log")]
    pub net: Option<PathBuf>,
    /// Render the net as DOT (the default for --net).
    #[arg(long, requires = "net")]
    pub dot: bool,
    /// Event log CSV whose directly-follows graph is rendered.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Render the log's directly-follows graph (the default for --log).
    #[arg(long, requires = "log")]
    pub dfg: bool,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestNetArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// Longest word to enumerate.
    #[arg(long, default_value_t = 10)]
    pub max_len: usize,
    /// Comma-separated word to check; repeatable.
    #[arg(long)]
    pub word: Vec<String>,
    /// Also print the prefix closure.
    #[arg(long)]
    pub prefixes: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the report here instead of the recorded path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the refined log here instead of the recorded path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
