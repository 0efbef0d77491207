use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::GrammarConfig;
use crate::exec::{AllowList, FaultSet, Limits};
use crate::mutate::MutConfig;

/// Program producer driving a campaign.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Tce,
    Spe,
    Mutate,
    Grammar,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Tce, Strategy::Spe, Strategy::Mutate, Strategy::Grammar];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Tce => "tce",
            Strategy::Spe => "spe",
            Strategy::Mutate => "mutate",
            Strategy::Grammar => "grammar",
        }
    }

    pub fn needs_corpus(self) -> bool {
        self != Strategy::Grammar
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        Strategy::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| format!("unknown strategy {s}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub strategy: Strategy,
    pub corpus: PathBuf,
    /// Master seed; every iteration derives its own stream from it.
    pub seed: u64,
    pub iterations: Option<u64>,
    pub time_budget_s: Option<u64>,
    pub workers: usize,
    pub faults: FaultSet,
    /// Reduce the smallest member of every cluster.
    pub reduce: bool,
    pub out: Option<PathBuf>,
    pub stdlib: Option<PathBuf>,
    pub mutation: MutConfig,
    pub grammar: GrammarConfig,
    pub limits: Limits,
    pub allowlist: AllowList,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            strategy: Strategy::Tce,
            corpus: PathBuf::from("corpus/seeds"),
            seed: 0,
            iterations: Some(1000),
            time_budget_s: None,
            workers: 1,
            faults: FaultSet::NONE,
            reduce: true,
            out: None,
            stdlib: None,
            mutation: MutConfig::default(),
            grammar: GrammarConfig::default(),
            limits: Limits::default(),
            allowlist: AllowList::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Environment variable overriding the master seed.
pub const SEED_ENV: &str = "TCEFUZZ_RNG_SEED";

impl CampaignConfig {
    pub fn from_toml(src: &str) -> Result<CampaignConfig, ConfigError> {
        let c: CampaignConfig = toml::from_str(src)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<CampaignConfig, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        CampaignConfig::from_toml(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.iterations.is_none() && self.time_budget_s.is_none() {
            return Err(ConfigError::Invalid("set iterations or time_budget_s".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        self.mutation.validate().map_err(ConfigError::Invalid)?;
        if self.grammar.soft_depth > self.grammar.max_depth {
            return Err(ConfigError::Invalid("grammar.soft_depth exceeds grammar.max_depth".into()));
        }
        Ok(())
    }

    /// Applies [`SEED_ENV`] when it is set.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| ConfigError::Invalid(format!("{SEED_ENV}={v} is not a u64")))?;
        }
        Ok(())
    }
}
