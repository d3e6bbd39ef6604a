//! Service configuration, loaded from a TOML document.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    AgentSuite, ChatProvider, MockProvider, MockTables, OpenAiCompatibleProvider, ProviderError,
    RetryPolicy, TemplateError,
};
use crate::domain::{BandThresholds, ContractViolation, ScenarioConfig};
use crate::stress::{DeltaTable, TriggerPolicy};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] ContractViolation),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    /// Directory with `lexicon.tsv` and template files for the mock provider.
    pub mock_dir: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Mock,
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            timeout_ms: 20_000,
            max_attempts: 3,
            backoff_base_ms: 500,
            mock_dir: None,
        }
    }
}

impl ProviderConfig {
    pub fn build(&self) -> Result<Arc<dyn ChatProvider>, ConfigError> {
        Ok(match self.kind {
            ProviderKind::Mock => match &self.mock_dir {
                Some(dir) => Arc::new(MockProvider::new(MockTables::from_dir(dir)?)),
                None => Arc::new(MockProvider::bundled()),
            },
            ProviderKind::Live => Arc::new(OpenAiCompatibleProvider::from_env(
                &self.endpoint,
                self.model.clone(),
                Duration::from_millis(self.timeout_ms),
                RetryPolicy {
                    max_attempts: self.max_attempts,
                    base_delay: Duration::from_millis(self.backoff_base_ms),
                },
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub port: u16,
    pub idle_timeout_secs: u64,
    /// Write-ahead JSONL directory; in-memory only when absent.
    pub data_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            idle_timeout_secs: 30 * 60,
            data_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignmentConfig {
    /// Fixed seed for condition assignment and session ids; entropy when absent.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentsConfig {
    /// Directory with `classifier.txt`, `partner.txt`, `interpreter.txt`, `coach.txt`.
    pub prompt_dir: Option<PathBuf>,
    pub context_window: Option<usize>,
}

impl AgentsConfig {
    pub fn build(&self) -> Result<AgentSuite, ConfigError> {
        let mut suite = match &self.prompt_dir {
            Some(dir) => AgentSuite::from_dir(dir)?,
            None => AgentSuite::bundled(),
        };
        if let Some(w) = self.context_window {
            suite.context_window = w.max(1);
        }
        Ok(suite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub server: ServerConfig,
    pub provider: ProviderConfig,
    pub assignment: AssignmentConfig,
    pub agents: AgentsConfig,
    pub delta_table: DeltaTable,
    pub trigger_policy: TriggerPolicy,
    pub bands: BandThresholds,
    pub scenarios: Vec<ScenarioConfig>,
}

/// Component defaults with no scenarios; see [`ServiceConfig::bundled`] for
/// a ready-to-run configuration.
impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            server: ServerConfig::default(),
            provider: ProviderConfig::default(),
            assignment: AssignmentConfig::default(),
            agents: AgentsConfig::default(),
            delta_table: DeltaTable::default(),
            trigger_policy: TriggerPolicy::default(),
            bands: BandThresholds::default(),
            scenarios: Vec::new(),
        }
    }
}

pub const DEFAULT_SCENARIO_ID: &str = "friday-pizza-night";

impl ServiceConfig {
    pub fn bundled() -> Self {
        Self::parse(include_str!("../assets/config/default.toml")).expect("bundled config is valid")
    }

    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        let cfg: ServiceConfig = toml::from_str(source)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&source)
    }

    pub fn validate(&self) -> Result<(), ContractViolation> {
        self.delta_table.validate()?;
        self.trigger_policy.validate()?;
        self.bands.validate()?;
        if self.scenarios.is_empty() {
            return Err(ContractViolation::new("config defines no scenarios"));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            s.validate()?;
            if self.scenarios[..i].iter().any(|o| o.id == s.id) {
                return Err(ContractViolation::new(format!("duplicate scenario id '{}'", s.id)));
            }
        }
        Ok(())
    }

    pub fn scenario(&self, id: &str) -> Option<&ScenarioConfig> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn idle_timeout(&self) -> Duration {
        Duration::from_secs(self.server.idle_timeout_secs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults() {
        let c = ServiceConfig::bundled();
        let s = c.scenario(DEFAULT_SCENARIO_ID).unwrap();
        assert_eq!((s.initial_stress, s.resolution_stress_max, s.turn_cap), (65, 30, 20));
        assert_eq!(c.delta_table, DeltaTable::default());
        assert_eq!(c.trigger_policy.min_increase, 10);
        assert_eq!(c.server.idle_timeout_secs, 1800);
        assert_eq!(c.provider.kind, ProviderKind::Mock);
    }

    #[test]
    fn rejects_bad_tables() {
        let mut src = include_str!("../assets/config/default.toml").to_string();
        src = src.replace("validation = -10", "validation = 10");
        assert!(matches!(ServiceConfig::parse(&src), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c = ServiceConfig::parse(
            r#"
            [[scenarios]]
            id = "s"
            persona_brief = "p"
            opener_text = "hello"
            initial_stress = 50
            sensory_triggers = []
            turn_cap = 5
            resolution_stress_max = 10
            "#,
        )
        .unwrap();
        assert_eq!(c.server.port, 8080);
        assert_eq!(c.delta_table, DeltaTable::default());
    }
}
