//! Run configuration, read from a TOML file with one section per module.

use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub general: General,
    #[serde(default)]
    pub resolvent: ResolventConfig,
    #[serde(default)]
    pub fiber: FiberConfig,
    #[serde(default)]
    pub ke: KeConfig,
    #[serde(default)]
    pub phi: PhiConfig,
    #[serde(default)]
    pub curvature: CurvatureConfig,
    #[serde(default)]
    pub finsler: FinslerConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct General {
    /// Base seed; every randomized suite derives its stream from it.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventConfig {
    pub closed_form_radii: Vec<f64>,
    pub grid_points: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        ResolventConfig { closed_form_radii: vec![0.1, 0.5, 1.0, 2.0, 5.0], grid_points: 50, r_min: 0.05, r_max: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberConfig {
    pub octagon_level: u32,
    pub torus_side: f64,
    pub torus_resolutions: Vec<usize>,
    pub heat_pairs: usize,
}

impl Default for FiberConfig {
    fn default() -> Self {
        FiberConfig { octagon_level: 4, torus_side: 1.0, torus_resolutions: vec![16, 32, 64], heat_pairs: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeConfig {
    pub epsilon: f64,
    pub tolerance: f64,
    pub max_steps: usize,
}

impl Default for KeConfig {
    fn default() -> Self {
        KeConfig { epsilon: 0.05, tolerance: 1e-10, max_steps: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiConfig {
    pub samples: usize,
    pub slack: f64,
    pub bordered_instances: usize,
    pub bordered_dims: Vec<usize>,
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig { samples: 50, slack: 1e-6, bordered_instances: 1000, bordered_dims: vec![1, 2, 3, 5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureConfig {
    pub synthetic_n: usize,
    pub synthetic_nodes: usize,
    pub synthetic_ks: usize,
    pub twists: Vec<u32>,
    pub xi_samples: usize,
    pub combinations: usize,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        CurvatureConfig { synthetic_n: 2, synthetic_nodes: 24, synthetic_ks: 3, twists: vec![1, 2, 5], xi_samples: 100, combinations: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinslerConfig {
    pub spacings: Vec<f64>,
    /// Grid slack is slack_coefficient * h^2.
    pub slack_coefficient: f64,
    pub weight_draws: usize,
}

impl Default for FinslerConfig {
    fn default() -> Self {
        FinslerConfig { spacings: vec![0.04, 0.02], slack_coefficient: 50.0, weight_draws: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub suites: Vec<String>,
    /// Soft (discretization-limited) failures also fail the run.
    pub soft_failures_fatal: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { suites: crate::suites::SUITES.iter().map(|s| s.to_string()).collect(), soft_failures_fatal: true }
    }
}

impl Default for Config {
    fn default() -> Self {
        Config {
            general: General { seed: 20240917 },
            resolvent: Default::default(),
            fiber: Default::default(),
            ke: Default::default(),
            phi: Default::default(),
            curvature: Default::default(),
            finsler: Default::default(),
            verify: Default::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let c: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for s in &self.verify.suites {
            if !crate::suites::SUITES.contains(&s.as_str()) {
                return Err(CliError::Config(format!("unknown suite '{s}'")));
            }
        }
        if self.fiber.torus_resolutions.len() < 2 {
            return Err(CliError::Config("convergence needs at least two torus resolutions".into()));
        }
        if self.finsler.spacings.is_empty() || self.finsler.spacings.iter().any(|h| !(*h > 0.0)) {
            return Err(CliError::Config("finsler spacings must be positive".into()));
        }
        Ok(())
    }

    /// Independent stream for a named suite.
    pub fn seed_for(&self, suite: &str) -> u64 {
        suite.bytes().fold(self.general.seed ^ 0x9e37_79b9_7f4a_7c15, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let c = Config::default();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(Config::from_toml("[ke]\nepsilon = 0.1\n").is_err());
        let c = Config::from_toml("[general]\nseed = 3\n[ke]\nepsilon = 0.1\n").unwrap();
        assert_eq!(c.ke.epsilon, 0.1);
        assert_eq!(c.ke.max_steps, 8);
    }

    #[test]
    fn rejects_unknown_keys_and_suites() {
        assert!(Config::from_toml("[general]\nseed = 1\nsead = 2\n").is_err());
        assert!(Config::from_toml("[general]\nseed = 1\n[verify]\nsuites = [\"nope\"]\n").is_err());
    }
}
