//! Engine configuration, read from a TOML file.
//!
//! ```toml
//! [rates.imports]
//! forward = 0.30
//! backward = 0.06
//!
//! [rank]
//! damping = 0.85
//! init = "inratio"
//!
//! [query]
//! n = 10
//! c = 3
//! top_k = 10
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{default_document_rates, RateTable};
use crate::hits::SubGraphParams;
use crate::index::TokenizerConfig;
use crate::rank::RankParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuerySettings {
    pub n: usize,
    /// In-link cap per seed.
    pub c: usize,
    pub top_k: usize,
    pub weighted: bool,
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for QuerySettings {
    fn default() -> Self {
        let hits = SubGraphParams::default();
        QuerySettings {
            n: hits.n,
            c: hits.inlink_cap,
            top_k: 10,
            weighted: hits.weighted,
            epsilon: hits.epsilon,
            max_iter: hits.max_iter,
        }
    }
}

impl QuerySettings {
    pub fn subgraph_params(&self) -> SubGraphParams {
        SubGraphParams {
            n: self.n,
            inlink_cap: self.c,
            weighted: self.weighted,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Roles given in the file replace their defaults; the rest keep them.
    #[serde(deserialize_with = "merge_rates")]
    pub rates: RateTable,
    pub rank: RankParams,
    pub tokenizer: TokenizerConfig,
    pub query: QuerySettings,
}

fn merge_rates<'de, D: serde::Deserializer<'de>>(deserializer: D) -> Result<RateTable, D::Error> {
    let mut rates = default_document_rates();
    rates.extend(RateTable::deserialize(deserializer)?);
    Ok(rates)
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            rates: default_document_rates(),
            rank: RankParams::default(),
            tokenizer: TokenizerConfig::default(),
            query: QuerySettings::default(),
        }
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: EngineConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (role, r) in &self.rates {
            for v in [r.forward, r.backward] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConfigError::Invalid(format!("rate {v} for {role} outside [0, 1]")));
                }
            }
        }
        self.rank.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.tokenizer.min_length == 0 {
            return Err(ConfigError::Invalid("tokenizer.min_length must be at least 1".into()));
        }
        if self.query.n == 0 || self.query.top_k == 0 {
            return Err(ConfigError::Invalid(
                "query.n and query.top_k must be at least 1".into(),
            ));
        }
        if self.query.epsilon.is_nan() || self.query.epsilon <= 0.0 || self.query.max_iter == 0 {
            return Err(ConfigError::Invalid(
                "query.epsilon and query.max_iter must be positive".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 over the config's canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let bytes = serde_json::to_vec(&value).expect("values serialize");
        hex::encode(Sha256::digest(bytes))
    }
}
