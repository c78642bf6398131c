//! Flat `key = value` configuration files.
//!
//! ```text
//! # benchmark defaults
//! seed = 42
//! n = 500
//! solver.max_iters = 80      # every solver
//! dls.damping = 0.05         # one solver, by id
//! near_singular_joint_index = 5
//! ```
//!
//! Command-line flags override file values; per-solver keys override
//! `solver.*` keys.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solvers::{SolverConfig, SolverKind};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", idx + 1)))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", idx + 1)));
            }
            entries.insert(key.to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    /// Defaults for `kind`, then `solver.*`, then `<id>.*` overrides.
    pub fn solver_config(&self, kind: SolverKind) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::for_solver(kind);
        let own = format!("{}.", kind.id());
        for prefix in ["solver.", own.as_str()] {
            for (k, v) in &self.entries {
                if let Some(field) = k.strip_prefix(prefix) {
                    cfg.set(field, v)?;
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let c = ConfigFile::parse(
            "seed = 7\nsolver.max_iters = 20\ndls.max_iters = 30 # wins for dls\n",
        )
        .unwrap();
        assert_eq!(c.get_parsed::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.solver_config(SolverKind::Dls).unwrap().max_iters, 30);
        assert_eq!(c.solver_config(SolverKind::Pinv).unwrap().max_iters, 20);
        assert_eq!(c.solver_config(SolverKind::Pinv).unwrap().step_scale, 0.3);
    }

    #[test]
    fn malformed_lines() {
        assert!(ConfigFile::parse("just words\n").is_err());
        assert!(ConfigFile::parse("= 3\n").is_err());
        let c = ConfigFile::parse("solver.damping = soft\n").unwrap();
        assert!(c.solver_config(SolverKind::Dls).is_err());
    }
}
