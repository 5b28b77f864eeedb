//! Experiment configuration, read from TOML.

use crate::caims::CaimsParams;
use crate::dime::EpisodeConfig;
use crate::error::{Error, Result};
use crate::heal::HealParams;
use crate::netcore::GeneratorSpec;
use crate::psinet::PsinetParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Dime,
    Caim,
}

/// Where episode networks come from. A generator draws a fresh network per
/// episode when `vary` is set, otherwise one network for all episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkSource {
    File(PathBuf),
    Generator {
        #[serde(flatten)]
        spec: GeneratorSpec,
        #[serde(default = "yes")]
        vary: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlannerSpec {
    Random,
    Degree,
    Greedy {
        #[serde(default = "default_greedy_nsim")]
        nsim: usize,
    },
    Psinet(PsinetParams),
    Heal(HealParams),
    /// Greedy inviting its top-K set once per session (CAIM only).
    GreedySession,
    /// Greedy overprovisioned to 2K, inviting one at a time (CAIM only).
    GreedyPlus,
    Caims(CaimsParams),
}

fn default_greedy_nsim() -> usize {
    200
}

impl PlannerSpec {
    /// Stable identifier used in result rows.
    pub fn id(&self) -> String {
        match self {
            PlannerSpec::Random => "random".into(),
            PlannerSpec::Degree => "degree".into(),
            PlannerSpec::Greedy { .. } => "greedy".into(),
            PlannerSpec::Psinet(p) => format!("psinet-{:?}", p.scheme).to_lowercase(),
            PlannerSpec::Heal(h) => match h.variant {
                crate::heal::HealVariant::Heal => "heal".into(),
                crate::heal::HealVariant::HealT => "heal-t".into(),
            },
            PlannerSpec::GreedySession => "greedy-session".into(),
            PlannerSpec::GreedyPlus => "greedy-plus".into(),
            PlannerSpec::Caims(_) => "caims".into(),
        }
    }

    pub fn supports(&self, problem: Problem) -> bool {
        let caim_only = matches!(self, PlannerSpec::GreedySession | PlannerSpec::GreedyPlus | PlannerSpec::Caims(_));
        caim_only == (problem == Problem::Caim)
    }
}

/// CAIM episode settings plus the availability prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaimSettings {
    pub k: usize,
    pub l: usize,
    pub t: usize,
    pub q_max: usize,
    pub epsilon: f64,
    /// Marginal availability of each node under the prior.
    #[serde(default = "default_availability")]
    pub availability: f64,
    /// Agreement weight of neighbouring availabilities.
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_cap")]
    pub belief_cap: usize,
    /// Communities used to factor the action space.
    #[serde(default = "default_communities")]
    pub communities: usize,
    #[serde(default = "default_spread_steps")]
    pub spread_steps: usize,
}

fn default_spread_steps() -> usize {
    1
}

fn default_availability() -> f64 {
    0.5
}

fn default_theta() -> f64 {
    0.7
}

fn default_cap() -> usize {
    crate::caims::belief::DEFAULT_CAP
}

fn default_communities() -> usize {
    2
}

/// One-sided paired comparison: is `better` at least as good as `baseline`?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub better: String,
    pub baseline: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: Problem,
    pub network: NetworkSource,
    pub planners: Vec<PlannerSpec>,
    pub episodes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dime: Option<EpisodeConfig>,
    #[serde(default)]
    pub caim: Option<CaimSettings>,
    #[serde(default)]
    pub compare: Vec<Comparison>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    /// Worker threads; 0 uses the available parallelism.
    #[serde(default)]
    pub workers: usize,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_resamples() -> usize {
    10_000
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::parse("config", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::parse(e.path().to_string(), e.inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        // Network files are relative to the config file.
        if let NetworkSource::File(f) = &mut cfg.network {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::param("episodes", "must be at least 1"));
        }
        if self.planners.is_empty() {
            return Err(Error::param("planners", "at least one planner is required"));
        }
        for (i, p) in self.planners.iter().enumerate() {
            if !p.supports(self.problem) {
                return Err(Error::param(format!("planners[{i}]"), format!("{} does not solve {:?}", p.id(), self.problem)));
            }
        }
        let ids: Vec<String> = self.planners.iter().map(PlannerSpec::id).collect();
        for c in &self.compare {
            for id in [&c.better, &c.baseline] {
                if !ids.contains(id) {
                    return Err(Error::param("compare", format!("unknown planner `{id}`")));
                }
            }
        }
        match self.problem {
            Problem::Dime if self.dime.is_none() => Err(Error::param("dime", "required for problem = \"dime\"")),
            Problem::Caim if self.caim.is_none() => Err(Error::param("caim", "required for problem = \"caim\"")),
            _ => Ok(()),
        }
    }
}
