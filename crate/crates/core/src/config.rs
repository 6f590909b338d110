//! Registry configuration, read from a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ClassId, EntryId, Maturity};

pub const DEFAULT_BASE_URL: &str = "http://localhost:8080";
pub const DEFAULT_DOI_PREFIX: &str = "10.77777";
/// Environment variable naming the configuration file.
pub const CONFIG_ENV: &str = "FLOWHUB_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// An external platform that can launch workflows from this registry's TRS
/// endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LauncherConfig {
    pub name: String,
    /// Expanded with `{trs_id}`, `{version}`, `{trs_base}` and `{entry_id}`.
    pub url_template: String,
    /// Workflow classes the platform can run. Empty means all.
    #[serde(default)]
    pub classes: Vec<ClassId>,
}

impl LauncherConfig {
    pub fn supports(&self, class: &ClassId) -> bool {
        self.classes.is_empty() || self.classes.contains(class)
    }

    /// The launch URL for one version of an entry. `{trs_id}` is inserted
    /// percent-encoded, the other placeholders verbatim.
    pub fn expand(&self, trs_base: &str, entry: EntryId, version: u32) -> String {
        let trs_id = utf8_percent_encode(&trs_tool_id(entry), NON_ALPHANUMERIC).to_string();
        self.url_template
            .replace("{trs_id}", &trs_id)
            .replace("{version}", &version.to_string())
            .replace("{trs_base}", trs_base)
            .replace("{entry_id}", &entry.to_string())
    }
}

/// The TRS tool id of an entry, before URL encoding.
pub fn trs_tool_id(entry: EntryId) -> String {
    format!("#workflow/{entry}")
}

fn default_base_url() -> String {
    DEFAULT_BASE_URL.to_string()
}

fn default_doi_prefix() -> String {
    DEFAULT_DOI_PREFIX.to_string()
}

fn default_max_file_mb() -> u64 {
    16
}

fn default_max_crate_mb() -> u64 {
    512
}

fn default_token_ttl() -> u64 {
    24 * 3600
}

fn default_maturity_levels() -> Vec<String> {
    vec![Maturity::WORK_IN_PROGRESS.into(), Maturity::STABLE.into()]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryConfig {
    #[serde(default = "default_base_url")]
    pub base_url: String,
    #[serde(default = "default_doi_prefix")]
    pub doi_prefix: String,
    /// Files above this size are stored but not parsed.
    #[serde(default = "default_max_file_mb")]
    pub max_file_mb: u64,
    /// Cap on the unpacked size of an uploaded crate.
    #[serde(default = "default_max_crate_mb")]
    pub max_crate_mb: u64,
    /// When set, embargoed entries are left out of search results entirely;
    /// otherwise they are listed as stubs for users who cannot open them.
    #[serde(default)]
    pub embargo_hides_listing: bool,
    #[serde(default = "default_token_ttl")]
    pub token_ttl_secs: u64,
    /// Store directory; `None` keeps everything in memory.
    #[serde(default)]
    pub store_dir: Option<PathBuf>,
    #[serde(default = "default_maturity_levels")]
    pub maturity_levels: Vec<String>,
    #[serde(default)]
    pub launchers: BTreeMap<String, LauncherConfig>,
}

impl Default for RegistryConfig {
    fn default() -> Self {
        RegistryConfig {
            base_url: default_base_url(),
            doi_prefix: default_doi_prefix(),
            max_file_mb: default_max_file_mb(),
            max_crate_mb: default_max_crate_mb(),
            embargo_hides_listing: false,
            token_ttl_secs: default_token_ttl(),
            store_dir: None,
            maturity_levels: default_maturity_levels(),
            launchers: BTreeMap::new(),
        }
    }
}

impl RegistryConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RegistryConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Loads `explicit` if given, else the file named by `FLOWHUB_CONFIG`,
    /// else the defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) => Self::load(Path::new(&p)),
                None => Ok(Self::default()),
            },
        }
    }

    fn check(&self) -> Result<(), ConfigError> {
        let prefix = self.doi_prefix.strip_prefix("10.").unwrap_or("");
        if prefix.is_empty() || !prefix.chars().all(|c| c.is_ascii_digit() || c == '.') {
            return Err(ConfigError::Invalid(format!(
                "doi_prefix `{}` is not of the form 10.<digits>",
                self.doi_prefix
            )));
        }
        if !self.base_url.starts_with("http://") && !self.base_url.starts_with("https://") {
            return Err(ConfigError::Invalid(format!(
                "base_url `{}` is not an http(s) URL",
                self.base_url
            )));
        }
        if self.maturity_levels.is_empty() {
            return Err(ConfigError::Invalid("maturity_levels is empty".into()));
        }
        Ok(())
    }

    pub fn base_url(&self) -> &str {
        self.base_url.trim_end_matches('/')
    }

    pub fn max_file_bytes(&self) -> usize {
        (self.max_file_mb as usize).saturating_mul(1024 * 1024)
    }

    pub fn max_crate_bytes(&self) -> u64 {
        self.max_crate_mb.saturating_mul(1024 * 1024)
    }

    pub fn trs_base(&self) -> String {
        format!("{}/ga4gh/trs/v2", self.base_url())
    }
}
