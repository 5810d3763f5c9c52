//! TOML run configuration.
//!
//! ```toml
//! [run]
//! seed = 20241018
//! workers = 4
//! out = "results"
//!
//! [field]
//! gamma = 1.0
//! n = 256
//!
//! [experiment]            # shared by every experiment
//! replicas = 400
//!
//! [experiments.log-phi]   # one experiment only
//! angles = 32
//! ```
//!
//! Precedence, lowest first: built-in experiment defaults, `[experiment]`,
//! `[experiments.<name>]`, then `[run]` seed and workers (which the
//! `--seed`/`--workers` flags overwrite).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clarkchaos::experiments::{ExperimentConfig, ExperimentKind};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

pub const RUN_KEYS: &[&str] = &["seed", "workers", "out"];
pub const FIELD_KEYS: &[&str] = &["gamma", "n", "m", "kernel", "eps", "g_spec", "count"];
pub const ZEROS_KEYS: &[&str] = &["r_max", "budget"];
pub const DECOMPOSE_KEYS: &[&str] = &["g_spec", "degree", "cutoff", "grid", "tol_eig"];
const SECTIONS: &[&str] = &["run", "field", "zeros", "decompose", "experiment", "experiments"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub run: RunSection,
    pub field: FieldSection,
    pub zeros: ZerosSection,
    pub decompose: DecomposeSection,
    /// Keys applied to every experiment.
    pub experiment: Table,
    /// Per-experiment keys, by experiment name.
    pub experiments: BTreeMap<String, Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: None, workers: None, out: PathBuf::from("results") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Canonical,
    Perturbed,
    ExactScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub gamma: f64,
    /// Truncation level `N`.
    pub n: usize,
    /// Grid size; `4 N` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub kernel: KernelChoice,
    /// Mollification scale of the exact-scaling field; two grid steps when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Kernel file for the perturbed field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_spec: Option<PathBuf>,
    /// Number of samples printed by `sample-field`.
    pub count: usize,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { gamma: 1.0, n: 256, m: None, kernel: KernelChoice::Canonical, eps: None, g_spec: None, count: 1 }
    }
}

impl FieldSection {
    pub fn grid_size(&self) -> usize {
        self.m.unwrap_or(4 * self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZerosSection {
    pub r_max: f64,
    pub budget: usize,
}

impl Default for ZerosSection {
    fn default() -> Self {
        ZerosSection { r_max: 0.9, budget: clarkchaos::zeros::DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeSection {
    /// Kernel file; `g = 0` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_spec: Option<PathBuf>,
    pub degree: usize,
    /// Fourier cutoff of the operator grid.
    pub cutoff: usize,
    /// Angular grid for the `f1² + f2²` search.
    pub grid: usize,
    pub tol_eig: f64,
}

impl Default for DecomposeSection {
    fn default() -> Self {
        DecomposeSection {
            g_spec: None,
            degree: 4,
            cutoff: 32,
            grid: 1024,
            tol_eig: clarkchaos::decomp::DEFAULT_TOL_EIG,
        }
    }
}

fn experiment_keys() -> Vec<String> {
    match Value::try_from(ExperimentConfig::default()) {
        Ok(Value::Table(t)) => t.keys().cloned().collect(),
        _ => unreachable!("experiment configs serialize to tables"),
    }
}

/// Lists every key of `doc` that no section understands.
fn unknown_keys(doc: &Table) -> Vec<String> {
    let exp_keys = experiment_keys();
    let mut bad = Vec::new();
    let check = |bad: &mut Vec<String>, prefix: &str, table: &Table, known: &[&str]| {
        bad.extend(table.keys().filter(|k| !known.contains(&k.as_str())).map(|k| format!("{prefix}.{k}")));
    };
    let exp_known: Vec<&str> = exp_keys.iter().map(String::as_str).collect();
    for (section, value) in doc {
        match (section.as_str(), value) {
            ("run", Value::Table(t)) => check(&mut bad, "run", t, RUN_KEYS),
            ("field", Value::Table(t)) => check(&mut bad, "field", t, FIELD_KEYS),
            ("zeros", Value::Table(t)) => check(&mut bad, "zeros", t, ZEROS_KEYS),
            ("decompose", Value::Table(t)) => check(&mut bad, "decompose", t, DECOMPOSE_KEYS),
            ("experiment", Value::Table(t)) => check(&mut bad, "experiment", t, &exp_known),
            ("experiments", Value::Table(t)) => {
                for (name, sub) in t {
                    if ExperimentKind::from_name(name).is_none() {
                        bad.push(format!("experiments.{name}"));
                    } else if let Value::Table(sub) = sub {
                        check(&mut bad, &format!("experiments.{name}"), sub, &exp_known);
                    }
                }
            }
            (s, _) if !SECTIONS.contains(&s) => bad.push(s.to_string()),
            _ => {}
        }
    }
    bad
}

/// Parses a command-line value as a TOML scalar or array, falling back to a
/// bare string.
fn parse_value(text: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

/// Applies a `key=value` override. Dotted keys address the document
/// directly; a bare key goes to `[run]` or to the shared `[experiment]`
/// section, whichever knows it.
pub fn apply_override(doc: &mut Table, spec: &str) -> Result<(), CliError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not of the form key=value")))?;
    let key = key.trim();
    let path: Vec<String> = if key.contains('.') {
        key.split('.').map(str::to_string).collect()
    } else if RUN_KEYS.contains(&key) {
        vec!["run".into(), key.into()]
    } else if experiment_keys().iter().any(|k| k == key) {
        vec!["experiment".into(), key.into()]
    } else {
        return Err(CliError::Config(format!("override key {key:?} is not a run or experiment key")));
    };
    let (last, parents) = path.split_last().expect("split yields at least one part");
    let mut table = doc;
    for part in parents {
        let entry = table.entry(part.clone()).or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {part} is not a section")))?;
    }
    table.insert(last.clone(), parse_value(value.trim()));
    Ok(())
}

impl Config {
    /// Parses a document after applying overrides; unknown keys are
    /// reported all at once.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Config, CliError> {
        let mut doc: Table = toml::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let bad = unknown_keys(&doc);
        if !bad.is_empty() {
            return Err(CliError::Config(format!("unknown config keys: {}", bad.join(", "))));
        }
        doc.try_into().map_err(|e: toml::de::Error| CliError::Config(format!("invalid config: {e}")))
    }

    /// Reads `path`, or starts from defaults when no file is given.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize to TOML")
    }

    /// Effective configuration of one experiment.
    pub fn experiment_config(&self, kind: ExperimentKind) -> Result<ExperimentConfig, CliError> {
        let mut merged = match Value::try_from(kind.default_config()) {
            Ok(Value::Table(t)) => t,
            _ => unreachable!("experiment configs serialize to tables"),
        };
        merged.extend(self.experiment.clone());
        if let Some(own) = self.experiments.get(kind.name()) {
            merged.extend(own.clone());
        }
        let mut cfg: ExperimentConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("experiment {}: {e}", kind.name())))?;
        if let Some(seed) = self.run.seed {
            cfg.master_seed = seed;
        }
        if let Some(workers) = self.run.workers {
            cfg.workers = workers;
        }
        cfg.validate().map_err(|e| CliError::Config(format!("experiment {}: {e}", kind.name())))?;
        Ok(cfg)
    }

    /// Seed for the single-sample subcommands.
    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(ExperimentConfig::default().master_seed)
    }
}
