//! Experiment configuration and its layered resolution.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracethresh::exp_analysis::CritCase;
use tracethresh::ModelParams;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    AnalyzeConst,
    #[default]
    AnalyzeExp,
    LambdaCrit,
    LambdaStar,
    SimBdp,
    SimEpidemic,
    Sweep,
    Reproduce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    /// Critical contact rate against latent mean.
    Fig7a,
    /// Critical contact rate against delay mean.
    Fig7b,
    Fig8,
    Table2,
}

/// A model parameter that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    ContactRate,
    NamingProb,
    InterviewNatural,
    InterviewTraced,
    LatentMean,
    DelayMean,
    Population,
    InitialInfectives,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::ContactRate => "contact_rate",
            Axis::NamingProb => "naming_prob",
            Axis::InterviewNatural => "interview_natural",
            Axis::InterviewTraced => "interview_traced",
            Axis::LatentMean => "latent_mean",
            Axis::DelayMean => "delay_mean",
            Axis::Population => "population",
            Axis::InitialInfectives => "initial_infectives",
        }
    }

    /// Copy of `params` with this parameter set to `value`.
    pub fn apply(self, params: &ModelParams, value: f64) -> Result<ModelParams, CliError> {
        let mut p = *params;
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as u64)
            } else {
                Err(CliError::Validation(format!("{} needs whole numbers, got {value}", self.name())))
            }
        };
        match self {
            Axis::ContactRate => p.contact_rate = value,
            Axis::NamingProb => p.naming_prob = value,
            Axis::InterviewNatural => p.interview_natural = value,
            Axis::InterviewTraced => p.interview_traced = value,
            Axis::LatentMean => p.latent = p.latent.with_mean(value),
            Axis::DelayMean => p.delay = p.delay.with_mean(value),
            Axis::Population => p.population = count()?,
            Axis::InitialInfectives => p.initial_infectives = count()?,
        }
        Ok(p)
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "contact_rate" | "lambda" => Axis::ContactRate,
            "naming_prob" | "p" => Axis::NamingProb,
            "interview_natural" | "pi_R" | "pi_r" => Axis::InterviewNatural,
            "interview_traced" | "pi_T" | "pi_t" => Axis::InterviewTraced,
            "latent_mean" => Axis::LatentMean,
            "delay_mean" => Axis::DelayMean,
            "population" | "N" => Axis::Population,
            "initial_infectives" | "m" => Axis::InitialInfectives,
            other => return Err(CliError::Validation(format!("unknown sweep parameter '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: Axis,
    pub grid: Vec<f64>,
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Validation(format!("cannot parse grid '{s}'"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
                return Err(bad());
            }
            Ok(linspace_step(a, b, h))
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

/// `a, a + h, ...` up to `b` inclusive, computed by index to avoid drift.
pub fn linspace_step(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = ((b - a) / h + 1e-9).floor() as usize;
    (0..=n).map(|i| a + i as f64 * h).collect()
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Model parameters in the caller's time unit.
    pub params: ModelParams,
    /// Grid values are in units of the mean infectious period.
    pub sweep_axis: Option<SweepAxis>,
    pub n_replicates: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub case: CritCase,
    /// `None` keeps every cluster finite.
    pub inf_threshold: Option<u64>,
    pub cutoff: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: Command::default(),
            params: ModelParams::default(),
            sweep_axis: None,
            n_replicates: 100_000,
            seed: 42,
            output_path: None,
            preset: None,
            case: CritCase::ExpRu,
            inf_threshold: Some(100),
            cutoff: None,
        }
    }
}

const PARAM_ALIASES: [(&str, &str); 6] = [
    ("lambda", "contact_rate"),
    ("p", "naming_prob"),
    ("pi_R", "interview_natural"),
    ("pi_T", "interview_traced"),
    ("N", "population"),
    ("m", "initial_infectives"),
];

// Deep merge; sweep axes and tagged distribution objects are replaced whole.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && k != "sweep_axis" && v.get("kind").is_none() => {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Reads a config file: either an experiment config or a sidecar holding one
/// under `config`. Fields present in the file replace those of `base`.
pub fn overlay_file(base: &ExperimentConfig, text: &str) -> Result<ExperimentConfig, CliError> {
    let mut file: Value = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config file: {e}")))?;
    if let Some(inner) = file.get("config").filter(|v| v.is_object()) {
        file = inner.clone();
    }
    if let Some(Value::Object(params)) = file.get_mut("params") {
        for (short, long) in PARAM_ALIASES {
            if let Some(v) = params.remove(short) {
                params.insert(long.to_string(), v);
            }
        }
    }
    let mut merged = serde_json::to_value(base).expect("config serializes");
    merge(&mut merged, file);
    serde_json::from_value(merged).map_err(|e| CliError::Validation(format!("config file: {e}")))
}
