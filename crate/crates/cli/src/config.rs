use std::path::{Path, PathBuf};

use commgrowth::latticeenum::Caps;
use serde::Deserialize;

use crate::CliError;

pub const CONFIG_ENV: &str = "COMMGROWTH_CONFIG";

/// Settings read from the TOML file named by `COMMGROWTH_CONFIG`.
/// Command-line flags override every field.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cache: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub seed: u64,
    pub caps: Caps,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&src).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.caps;
        if c.max_envelope_index <= 0 || c.max_oracle_group_size == 0 || c.max_frontier == 0 {
            return Err(CliError::Invalid("caps must be positive (timeout_seconds = 0 disables the timeout)".into()));
        }
        Ok(())
    }

    pub fn cache_path(&self) -> PathBuf {
        if let Some(p) = &self.cache {
            return p.clone();
        }
        match std::env::var_os("XDG_CACHE_HOME").or_else(|| std::env::var_os("HOME").map(|h| Path::new(&h).join(".cache").into())) {
            Some(base) => Path::new(&base).join("commgrowth").join("counts.jsonl"),
            None => PathBuf::from(".commgrowth-counts.jsonl"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_config() {
        let cfg: RunConfig = toml::from_str("jobs = 4\n[caps]\nmax_frontier = 10\n").unwrap();
        assert_eq!(cfg.jobs, 4);
        assert_eq!(cfg.caps.max_frontier, 10);
        assert_eq!(cfg.caps.max_oracle_group_size, Caps::default().max_oracle_group_size);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn rejects_zero_caps() {
        let mut cfg = RunConfig::default();
        cfg.caps.max_frontier = 0;
        assert!(cfg.validate().is_err());
    }
}
