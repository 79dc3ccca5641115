use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use modbot_core::sim::SimConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    Tree,
    Lsystem,
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingKind::Tree => "tree",
            EncodingKind::Lsystem => "lsystem",
        })
    }
}

/// Flat TOML file; unknown keys are rejected.
///
/// ```toml
/// encoding = "tree"
/// population_size = 100
/// generations = 50
/// repetitions = 1
/// seed = 0
/// output_dir = "out/tree"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub encoding: EncodingKind,
    #[serde(default = "defaults::population_size")]
    pub population_size: usize,
    #[serde(default = "defaults::generations")]
    pub generations: usize,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::module_cap")]
    pub module_cap: usize,
    /// Probability of at least one body (tree) or grammar (L-system) mutation.
    #[serde(default = "defaults::mutation_rate")]
    pub mutation_rate: f64,
    /// seconds
    #[serde(default = "defaults::sim_duration")]
    pub sim_duration: f64,
    /// seconds
    #[serde(default = "defaults::sim_timestep")]
    pub sim_timestep: f64,
    /// seconds
    #[serde(default = "defaults::sim_sample_period")]
    pub sim_sample_period: f64,
    pub output_dir: PathBuf,
}

mod defaults {
    pub fn population_size() -> usize {
        100
    }
    pub fn generations() -> usize {
        50
    }
    pub fn repetitions() -> usize {
        1
    }
    pub fn module_cap() -> usize {
        modbot_core::morphology::DEFAULT_MODULE_CAP
    }
    pub fn mutation_rate() -> f64 {
        0.59
    }
    pub fn sim_duration() -> f64 {
        30.0
    }
    pub fn sim_timestep() -> f64 {
        0.005
    }
    pub fn sim_sample_period() -> f64 {
        0.1
    }
}

impl ExperimentConfig {
    pub fn new(encoding: EncodingKind, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            encoding,
            population_size: defaults::population_size(),
            generations: defaults::generations(),
            repetitions: defaults::repetitions(),
            seed: 0,
            module_cap: defaults::module_cap(),
            mutation_rate: defaults::mutation_rate(),
            sim_duration: defaults::sim_duration(),
            sim_timestep: defaults::sim_timestep(),
            sim_sample_period: defaults::sim_sample_period(),
            output_dir: output_dir.into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            duration: self.sim_duration,
            timestep: self.sim_timestep,
            sample_period: self.sim_sample_period,
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("population_size", self.population_size),
            ("generations", self.generations),
            ("repetitions", self.repetitions),
            ("module_cap", self.module_cap),
        ] {
            if v < 1 {
                bail!("{name} must be at least 1");
            }
        }
        if self.population_size < 2 {
            bail!("population_size must be at least 2 so that parents can differ");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            bail!("mutation_rate must lie in [0, 1], got {}", self.mutation_rate);
        }
        self.sim().schedule().context("simulation settings")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_unknown_keys() {
        let cfg: ExperimentConfig = toml::from_str("encoding = \"lsystem\"\noutput_dir = \"x\"").unwrap();
        assert_eq!(cfg, ExperimentConfig::new(EncodingKind::Lsystem, "x"));
        cfg.validate().unwrap();
        let err = toml::from_str::<ExperimentConfig>("encoding = \"tree\"\noutput_dir = \"x\"\npopulaton_size = 3");
        assert!(err.unwrap_err().to_string().contains("populaton_size"));
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ExperimentConfig::new(EncodingKind::Tree, "x");
        cfg.mutation_rate = 1.5;
        assert!(cfg.validate().is_err());
        cfg.mutation_rate = 0.5;
        cfg.repetitions = 0;
        assert!(cfg.validate().is_err());
        cfg.repetitions = 1;
        cfg.sim_sample_period = 0.07;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::new(EncodingKind::Tree, "out/a");
        cfg.seed = 9;
        assert_eq!(toml::from_str::<ExperimentConfig>(&cfg.to_toml()).unwrap(), cfg);
    }
}
