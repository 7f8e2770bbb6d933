//! Campaign configuration, read from a TOML file.
//!
//! ```toml
//! mode = "targeted"                      # or "pipeline"
//! grammar = "builtin:mini-c"             # path or builtin:NAME
//! annotations = "builtin:mini-c"         # defaults to the grammar's builtin
//! optimization_corpus = "corpus/opt"
//! seed_corpus = "corpus/seed"
//! output_dir = "out"
//! rng_seed = 1
//! workers = 4
//! scheduler = "styles"                   # or "baseline"
//!
//! [budget]
//! iterations = 1000
//! seconds = 300
//!
//! [harness]
//! command = ["opt", "-passes={prep},{pass}", "-stats", "{input}"]
//! pass = "loop-fusion"
//! prep = ["mem2reg", "loop-simplify"]
//! timeout_ms = 2000
//!
//! [[harness.counters]]
//! name = "loop_fusion"
//! pattern = "fused: (\\d+)"
//!
//! [weights]
//! "Cousins/Replicate" = 4.0
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::styles::{admissible_pairs, MutatorKind, StyleName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Targeted,
    Pipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    /// Style-guided mutation.
    Styles,
    /// Random same-rule subtree swap, kept as a reference point.
    Baseline,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub iterations: Option<u64>,
    pub seconds: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counter {
    pub name: String,
    /// Regex over stdout and stderr. With a capture group, the captured
    /// integers are summed; otherwise matches are counted.
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessSpec {
    /// Argument vector with `{input}`, `{pass}` and `{prep}` placeholders.
    pub command: Vec<String>,
    #[serde(default)]
    pub pass: Option<String>,
    #[serde(default)]
    pub prep: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub counters: Vec<Counter>,
    /// Front-end-only command deciding validity; exit 0 means valid.
    #[serde(default)]
    pub validity_command: Option<Vec<String>>,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
}

fn default_timeout() -> u64 {
    5000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Mode,
    grammar: String,
    annotations: Option<String>,
    optimization_corpus: PathBuf,
    seed_corpus: PathBuf,
    #[serde(default = "default_output")]
    output_dir: PathBuf,
    #[serde(default)]
    rng_seed: u64,
    #[serde(default = "default_workers")]
    workers: usize,
    #[serde(default = "default_scheduler")]
    scheduler: SchedulerKind,
    #[serde(default)]
    budget: Budget,
    harness: HarnessSpec,
    #[serde(default)]
    weights: BTreeMap<String, f64>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

fn default_scheduler() -> SchedulerKind {
    SchedulerKind::Styles
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub grammar: String,
    pub annotations: String,
    pub optimization_corpus: PathBuf,
    pub seed_corpus: PathBuf,
    pub output_dir: PathBuf,
    pub rng_seed: u64,
    pub workers: usize,
    pub scheduler: SchedulerKind,
    pub budget: Budget,
    pub harness: HarnessSpec,
    /// Weight of every admissible (style, mutator) pair, in table order.
    pub weights: Vec<((StyleName, MutatorKind), f64)>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<CampaignConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        CampaignConfig::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<CampaignConfig, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let resolve_lang = |s: &str| {
            if s.starts_with("builtin:") {
                s.to_string()
            } else {
                resolve(Path::new(s)).display().to_string()
            }
        };
        let grammar = resolve_lang(&raw.grammar);
        let annotations = match &raw.annotations {
            Some(a) => resolve_lang(a),
            None if raw.grammar.starts_with("builtin:") => raw.grammar.clone(),
            None => return Err(invalid("annotations is required for a grammar file")),
        };
        let h = &raw.harness;
        if h.command.is_empty() {
            return Err(invalid("harness.command is empty"));
        }
        if !h.command.iter().any(|a| a.contains("{input}")) {
            return Err(invalid("harness.command must contain {input}"));
        }
        if h.timeout_ms == 0 {
            return Err(invalid("harness.timeout_ms must be positive"));
        }
        match raw.mode {
            Mode::Targeted => match &h.pass {
                Some(p) if !p.is_empty() && !p.contains(',') => {}
                _ => return Err(invalid("targeted mode needs exactly one harness.pass")),
            },
            Mode::Pipeline => {
                if h.command.iter().any(|a| a.contains("{pass}")) && h.pass.is_none() {
                    return Err(invalid("harness.command uses {pass} but no pass is set"));
                }
            }
        }
        for c in &h.counters {
            regex::Regex::new(&c.pattern)
                .map_err(|e| invalid(format!("counter {}: {e}", c.name)))?;
        }
        if raw.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        let pairs = admissible_pairs();
        let mut weights: Vec<_> = pairs.iter().map(|p| (*p, 1.0)).collect();
        if !raw.weights.is_empty() {
            weights.iter_mut().for_each(|w| w.1 = 0.0);
            for (key, w) in &raw.weights {
                let pair = parse_pair(key).ok_or_else(|| invalid(format!("unknown weight key {key}")))?;
                let slot = weights
                    .iter_mut()
                    .find(|(p, _)| *p == pair)
                    .ok_or_else(|| invalid(format!("{key} is not an admissible pair")))?;
                if !(w.is_finite() && *w >= 0.0) {
                    return Err(invalid(format!("weight {key} must be nonnegative")));
                }
                slot.1 = *w;
            }
            if weights.iter().all(|(_, w)| *w == 0.0) {
                return Err(invalid("all weights are zero"));
            }
        }
        Ok(CampaignConfig {
            mode: raw.mode,
            grammar,
            annotations,
            optimization_corpus: resolve(&raw.optimization_corpus),
            seed_corpus: resolve(&raw.seed_corpus),
            output_dir: resolve(&raw.output_dir),
            rng_seed: raw.rng_seed,
            workers: raw.workers,
            scheduler: raw.scheduler,
            budget: raw.budget,
            harness: raw.harness,
            weights,
        })
    }
}

/// `"Cousins/Replicate"` to its pair.
pub fn parse_pair(key: &str) -> Option<(StyleName, MutatorKind)> {
    let (s, m) = key.split_once('/')?;
    Some((s.trim().parse().ok()?, m.trim().parse().ok()?))
}
