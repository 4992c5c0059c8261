//! Scenario configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blocks::{DelayProfile, DeltaPolicy, DutStyle};
use crate::harness::{FaultSpec, GoldenReference, Scenario, TestVectorSet};
use crate::kernel::{SimTime, DEFAULT_EVENT_BUDGET};

use super::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaConfig {
    Ticks(SimTime),
    Named(String),
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig::Named("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorConfig {
    pub words: Vec<String>,
    #[serde(default = "yes")]
    pub repeat: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldenConfig {
    #[default]
    Echo,
    Table(BTreeMap<String, String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StuckKind {
    Stuck0,
    Stuck1,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub net: String,
    pub kind: StuckKind,
    #[serde(default)]
    pub at: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default)]
    pub max_ticks: Option<SimTime>,
    #[serde(default = "one")]
    pub min_responses: usize,
    #[serde(default = "budget")]
    pub event_budget: u64,
}

fn one() -> usize {
    1
}

fn budget() -> u64 {
    DEFAULT_EVENT_BUDGET
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_ticks: None,
            min_responses: 1,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }
}

/// Artifact file names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "vcd_name")]
    pub vcd: Option<String>,
    #[serde(default = "streams_name")]
    pub streams_csv: Option<String>,
    #[serde(default = "violations_name")]
    pub violations_csv: Option<String>,
    #[serde(default = "report_name")]
    pub report: Option<String>,
}

fn vcd_name() -> Option<String> {
    Some("trace.vcd".into())
}

fn streams_name() -> Option<String> {
    Some("streams.csv".into())
}

fn violations_name() -> Option<String> {
    Some("violations.csv".into())
}

fn report_name() -> Option<String> {
    Some("report.txt".into())
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            dir: None,
            vcd: vcd_name(),
            streams_csv: streams_name(),
            violations_csv: violations_name(),
            report: report_name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub style: DutStyle,
    pub stages: usize,
    pub width: usize,
    #[serde(default)]
    pub delta: DeltaConfig,
    /// Combinational delay per stage, in ticks.
    #[serde(default)]
    pub comb: Vec<SimTime>,
    pub user_words: Vec<String>,
    pub test_vectors: VectorConfig,
    #[serde(default)]
    pub golden: GoldenConfig,
    #[serde(default)]
    pub faults: Vec<FaultConfig>,
    #[serde(default)]
    pub delay_profile: DelayProfile,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Parses `9B`, `0x9b` and similar.
pub fn parse_hex(s: &str) -> Result<u64, CliError> {
    let t = s.trim();
    let t = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
    if t.is_empty() || t.len() > 16 {
        return Err(CliError::Config(format!("`{s}` is not a hex word")));
    }
    u64::from_str_radix(t, 16).map_err(|_| CliError::Config(format!("`{s}` is not a hex word")))
}

fn hex_list(v: &[String]) -> Result<Vec<u64>, CliError> {
    v.iter().map(|s| parse_hex(s)).collect()
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Read {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn delta_policy(&self) -> Result<DeltaPolicy, CliError> {
        match &self.delta {
            DeltaConfig::Ticks(t) => Ok(DeltaPolicy::Fixed(*t)),
            DeltaConfig::Named(s) if s.eq_ignore_ascii_case("auto") => Ok(DeltaPolicy::Auto),
            DeltaConfig::Named(s) => Err(CliError::Config(format!("delta must be \"auto\" or a tick count, got `{s}`"))),
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let mut sc = Scenario::new(self.style, self.stages, self.width);
        sc.delta = self.delta_policy()?;
        sc.comb = self.comb.clone();
        sc.user_words = hex_list(&self.user_words)?;
        sc.vectors = TestVectorSet {
            vectors: hex_list(&self.test_vectors.words)?,
            repeat: self.test_vectors.repeat,
        };
        sc.golden = match &self.golden {
            GoldenConfig::Echo => GoldenReference::Echo,
            GoldenConfig::Table(t) => GoldenReference::Table(
                t.iter()
                    .map(|(k, v)| Ok((parse_hex(k)?, parse_hex(v)?)))
                    .collect::<Result<_, CliError>>()?,
            ),
        };
        sc.faults = self
            .faults
            .iter()
            .map(|f| FaultSpec {
                net: f.net.clone(),
                stuck_at: f.kind == StuckKind::Stuck1,
                from: f.at,
            })
            .collect();
        sc.delays = self.delay_profile;
        sc.max_ticks = self.limits.max_ticks;
        sc.min_responses = self.limits.min_responses;
        sc.event_budget = self.limits.event_budget;
        sc.validate()?;
        Ok(sc)
    }
}
