//! TOML configuration file. Every section is optional; command-line flags
//! override whatever the file sets.
//!
//! ```toml
//! seed = 7
//! scope = "local"
//! short_threshold = 50
//!
//! [window]
//! n_max = 5
//! t_max = 30.0
//!
//! [backend]
//! kind = "remote"
//! endpoint = "http://localhost:8000/v1/chat/completions"
//! example_pairs = [
//!   { transcript = "...", summary = "..." },
//!   { transcript = "...", summary = "..." },
//! ]
//!
//! [serve]
//! listen = "127.0.0.1:7070"
//! idle_timeout = 600.0
//!
//! [simulate]
//! avg_lengths = [100, 110, 120]
//!
//! [rates]
//! human_rate = 0.01
//! ```

use std::path::Path;

use anyhow::Context;
use rtsum_core::budget::RateCard;
use rtsum_core::corpus::DEFAULT_SHORT_THRESHOLD;
use rtsum_core::evaluate::ScopeFilter;
use rtsum_core::simulate::SimConfig;
use rtsum_core::summarize::BackendConfig;
use rtsum_core::WindowPolicy;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub listen: Option<String>,
    pub idle_timeout: f64,
    pub summary_timeout: f64,
    pub max_in_flight: usize,
}

impl Default for ServeSection {
    fn default() -> Self {
        let d = crate::serve::ServeConfig::default();
        Self {
            listen: None,
            idle_timeout: d.idle_timeout,
            summary_timeout: d.summary_timeout,
            max_in_flight: d.max_in_flight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub scope: ScopeFilter,
    pub short_threshold: usize,
    pub window: WindowPolicy,
    pub backend: BackendConfig,
    pub serve: ServeSection,
    pub simulate: SimConfig,
    pub rates: RateCard,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            seed: None,
            scope: ScopeFilter::All,
            short_threshold: DEFAULT_SHORT_THRESHOLD,
            window: WindowPolicy::default(),
            backend: BackendConfig::default(),
            serve: ServeSection::default(),
            simulate: SimConfig::default(),
            rates: RateCard::default(),
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }
}
