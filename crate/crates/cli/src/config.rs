use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use arlens_core::tracker::TrackerConfig;
use serde::Deserialize;

pub const DEFAULT_BIND: &str = "127.0.0.1:8640";

/// `arlens serve` configuration file (TOML).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_bundle_dir")]
    pub bundle_dir: PathBuf,
    /// Directory served at `/` (the companion web client), if any.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    /// Role name -> credential level, accepted in `create` messages.
    #[serde(default)]
    pub credentials: BTreeMap<String, u32>,
    #[serde(default)]
    pub tracker: TrackerConfig,
}

fn default_bind() -> String {
    DEFAULT_BIND.to_string()
}

fn default_bundle_dir() -> PathBuf {
    PathBuf::from("bundles")
}

impl ServeConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path`, resolves relative directories against the file's
    /// directory, then applies `ARLENS_BIND` and `ARLENS_BUNDLE_DIR`.
    pub fn load(path: &Path, env: impl Fn(&str) -> Option<String>) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.bundle_dir.is_relative() {
            cfg.bundle_dir = base.join(&cfg.bundle_dir);
        }
        if let Some(dir) = cfg.static_dir.as_mut().filter(|d| d.is_relative()) {
            *dir = base.join(&*dir);
        }
        cfg.apply_env(env);
        Ok(cfg)
    }

    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) {
        if let Some(bind) = env("ARLENS_BIND").filter(|s| !s.is_empty()) {
            self.bind = bind;
        }
        if let Some(dir) = env("ARLENS_BUNDLE_DIR").filter(|s| !s.is_empty()) {
            self.bundle_dir = PathBuf::from(dir);
        }
    }
}
