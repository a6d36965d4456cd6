use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DEFAULT_R_CAP;
use crate::error::{Error, Result};
use crate::inner::InnerSamplerConfig;
use crate::models::{InnerKind, ModelKind, DEFAULT_ENUMERATION_CAP};
use crate::outer::Prior;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Exchange,
    Dmh,
    Abc,
    Alr,
    Likem,
    SpikeSlab,
}

impl SamplerKind {
    /// Name of the tuning parameter swept by the grid.
    pub fn tuning_name(self) -> &'static str {
        match self {
            SamplerKind::Exchange => "none",
            SamplerKind::Dmh | SamplerKind::SpikeSlab => "m",
            SamplerKind::Abc => "epsilon",
            SamplerKind::Alr | SamplerKind::Likem => "d",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SamplerKind::Exchange => "exchange",
            SamplerKind::Dmh => "dmh",
            SamplerKind::Abc => "abc",
            SamplerKind::Alr => "alr",
            SamplerKind::Likem => "likem",
            SamplerKind::SpikeSlab => "spike_slab",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Data file, relative to the config file.
    pub data: PathBuf,
    /// Potts colors K; defaults to the largest color in the lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: Option<SamplerKind>,
    /// Values of m, ε or d, one chain each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal_sd: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    /// Inner cycles per ABC simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumeration_cap: Option<u64>,
    /// Pilot draws used to standardize the ABC distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot_draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prerun_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prerun_cycles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_spacing: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ess_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_cycles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_capacity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refresh_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slab_step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub iterations: usize,
    /// Defaults to 10% of the iterations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default = "one")]
    pub thin: usize,
    /// 0 disables checkpoints.
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcdConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Pool size N.
    #[serde(default = "default_acd_pool")]
    pub pool_size: usize,
    /// Replications R.
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_cap")]
    pub cap: usize,
    /// Inner cycles before the first pooled draw.
    #[serde(default = "default_pool_burn_in")]
    pub burn_in: usize,
    /// Inner cycles between pooled draws.
    #[serde(default = "one")]
    pub spacing: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
}

impl Default for AcdConfig {
    fn default() -> Self {
        AcdConfig {
            enabled: true,
            pool_size: default_acd_pool(),
            replications: default_replications(),
            cap: default_cap(),
            burn_in: default_pool_burn_in(),
            spacing: 1,
            inner: None,
            batch: None,
        }
    }
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_checkpoint() -> usize {
    10_000
}
fn default_acd_pool() -> usize {
    500
}
fn default_replications() -> usize {
    30
}
fn default_cap() -> usize {
    DEFAULT_R_CAP
}
fn default_pool_burn_in() -> usize {
    100
}

/// A tuning-grid study: one chain per grid value, each assessed by ACD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Prior>,
    pub sampler: SamplerConfig,
    pub chain: ChainConfig,
    #[serde(default)]
    pub acd: AcdConfig,
}

/// Field-precise parse error for TOML input.
fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.message().to_string(),
    }
}

pub(crate) fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| toml_error(path, text, e))
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    /// Parse and validate; relative paths are resolved against the config's
    /// directory.
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = parse_toml(text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.model.data.is_relative() {
            cfg.model.data = base.join(&cfg.model.data);
        }
        if let Some(out) = &cfg.out {
            if out.is_relative() {
                cfg.out = Some(base.join(out));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn kind(&self) -> SamplerKind {
        self.sampler.kind.unwrap_or(SamplerKind::Dmh)
    }

    pub fn inner(&self) -> InnerKind {
        self.sampler.inner.unwrap_or(match self.model.kind {
            ModelKind::Potts => InnerKind::SwendsenWang,
            _ => InnerKind::GibbsSweep,
        })
    }

    pub fn burn_in(&self) -> usize {
        self.chain.burn_in.unwrap_or(self.chain.iterations / 10)
    }

    pub fn enumeration_cap(&self) -> u64 {
        self.sampler.enumeration_cap.unwrap_or(DEFAULT_ENUMERATION_CAP)
    }

    /// Grid values; a single placeholder entry for the exchange sampler.
    pub fn grid(&self) -> Vec<f64> {
        match (&self.sampler.grid, self.kind()) {
            (Some(g), _) => g.clone(),
            (None, SamplerKind::Exchange) => vec![f64::NAN],
            (None, _) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.sampler.kind.ok_or_else(|| config_err("sampler.kind", "missing field"))?;
        let s = &self.sampler;
        match &s.grid {
            Some(g) if g.is_empty() => return Err(config_err("sampler.grid", "grid is empty")),
            None if kind != SamplerKind::Exchange => {
                return Err(config_err(
                    "sampler.grid",
                    format!("missing; list the {} values to run", kind.tuning_name()),
                ))
            }
            Some(_) if kind == SamplerKind::Exchange => {
                return Err(config_err("sampler.grid", "the exchange sampler has no tuning parameter"))
            }
            _ => {}
        }
        for (i, &v) in self.grid().iter().enumerate() {
            let field = format!("sampler.grid[{i}]");
            match kind {
                SamplerKind::Exchange => {}
                SamplerKind::Dmh | SamplerKind::SpikeSlab => {
                    if !(v >= 1.0 && v.fract() == 0.0) {
                        return Err(config_err(&field, format!("m must be a positive integer, got {v}")));
                    }
                }
                SamplerKind::Abc => {
                    if !(v >= 0.0) {
                        return Err(config_err(&field, format!("epsilon must be >= 0, got {v}")));
                    }
                }
                SamplerKind::Alr | SamplerKind::Likem => {
                    if !(v >= 2.0 && v.fract() == 0.0) {
                        return Err(config_err(&field, format!("d must be an integer >= 2, got {v}")));
                    }
                }
            }
        }
        let allowed: &[&str] = match kind {
            SamplerKind::Exchange => &["enumeration_cap"],
            SamplerKind::Dmh => &[],
            SamplerKind::Abc => &["cycles", "pilot_draws"],
            SamplerKind::Alr => &[
                "prerun_iterations",
                "prerun_cycles",
                "warmup_cycles",
                "initial_draws",
                "pool_capacity",
                "refresh_every",
            ],
            SamplerKind::Likem => &[
                "prerun_iterations",
                "prerun_cycles",
                "pool_size",
                "pool_burn_in",
                "pool_spacing",
                "ess_floor",
            ],
            SamplerKind::SpikeSlab => &["precision_step", "slab_step"],
        };
        let set = [
            ("cycles", s.cycles.is_some()),
            ("enumeration_cap", s.enumeration_cap.is_some()),
            ("pilot_draws", s.pilot_draws.is_some()),
            ("prerun_iterations", s.prerun_iterations.is_some()),
            ("prerun_cycles", s.prerun_cycles.is_some()),
            ("pool_size", s.pool_size.is_some()),
            ("pool_burn_in", s.pool_burn_in.is_some()),
            ("pool_spacing", s.pool_spacing.is_some()),
            ("ess_floor", s.ess_floor.is_some()),
            ("warmup_cycles", s.warmup_cycles.is_some()),
            ("initial_draws", s.initial_draws.is_some()),
            ("pool_capacity", s.pool_capacity.is_some()),
            ("refresh_every", s.refresh_every.is_some()),
            ("precision_step", s.precision_step.is_some()),
            ("slab_step", s.slab_step.is_some()),
        ];
        for (name, present) in set {
            if present && !allowed.contains(&name) {
                return Err(config_err(
                    &format!("sampler.{name}"),
                    format!("not used by the {} sampler", kind.label()),
                ));
            }
        }
        InnerSamplerConfig::new(self.inner(), 1, 0)
            .validate_for(self.model.kind)
            .map_err(|e| config_err("sampler.inner", e))?;
        if let Some(inner) = self.acd.inner {
            InnerSamplerConfig::new(inner, 1, 0)
                .validate_for(self.model.kind)
                .map_err(|e| config_err("acd.inner", e))?;
        }
        if kind == SamplerKind::SpikeSlab && self.model.kind != ModelKind::IsingNet {
            return Err(config_err("sampler.kind", "spike_slab requires the isingnet model"));
        }
        if kind == SamplerKind::SpikeSlab && self.prior.is_some() {
            return Err(config_err("prior", "spike_slab uses its own hierarchical prior"));
        }
        if let Some(prior) = &self.prior {
            prior.validate().map_err(|e| config_err("prior", e))?;
        }
        if self.chain.thin == 0 {
            return Err(config_err("chain.thin", "must be at least 1"));
        }
        if self.burn_in() > self.chain.iterations {
            return Err(config_err("chain.burn_in", "exceeds chain.iterations"));
        }
        if self.workers == Some(0) {
            return Err(config_err("workers", "must be at least 1"));
        }
        if self.acd.enabled && (self.acd.pool_size == 0 || self.acd.replications == 0) {
            return Err(config_err("acd", "pool_size and replications must be at least 1"));
        }
        if let Some(sd) = &s.proposal_sd {
            if sd.iter().any(|v| !(*v > 0.0)) {
                return Err(config_err("sampler.proposal_sd", "entries must be positive"));
            }
        }
        Ok(())
    }
}

/// Specification for `simulate_dataset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub respondents: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<usize>,
    pub theta: Vec<f64>,
    pub cycles: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: SimulateConfig = parse_toml(text, path)?;
        if let Some(out) = &cfg.out {
            if out.is_relative() {
                cfg.out = Some(path.parent().unwrap_or(Path::new("")).join(out));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 7

[model]
kind = "potts"
data = "lattice.txt"

[sampler]
kind = "dmh"
grid = [1, 10]

[chain]
iterations = 100
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(BASE, Path::new("/tmp/x/exp.toml")).unwrap();
        assert_eq!(cfg.model.data, PathBuf::from("/tmp/x/lattice.txt"));
        assert_eq!(cfg.burn_in(), 10);
        assert_eq!(cfg.inner(), InnerKind::SwendsenWang);
        assert_eq!(cfg.acd.replications, 30);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap(), Path::new("/")).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = BASE.replace("grid = [1, 10]", "grid = [1, 10]\ncylces = 3");
        match ExperimentConfig::from_toml(&text, Path::new("exp.toml")) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 11);
                assert!(message.contains("cylces"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let text = BASE.replace("grid = [1, 10]", "grid = []");
        let err = ExperimentConfig::from_toml(&text, Path::new("exp.toml")).unwrap_err();
        assert!(err.to_string().contains("sampler.grid"), "{err}");
    }

    #[test]
    fn grid_entries_checked_per_kind() {
        let text = BASE.replace("grid = [1, 10]", "grid = [1, 2.5]");
        let err = ExperimentConfig::from_toml(&text, Path::new("exp.toml")).unwrap_err();
        assert!(err.to_string().contains("sampler.grid[1]"), "{err}");
    }

    #[test]
    fn foreign_field_rejected() {
        let text = BASE.replace("grid = [1, 10]", "grid = [1, 10]\npool_size = 5");
        let err = ExperimentConfig::from_toml(&text, Path::new("exp.toml")).unwrap_err();
        assert!(err.to_string().contains("sampler.pool_size"), "{err}");
    }
}
