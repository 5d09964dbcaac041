use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};

/// Largest factor by which a tolerance may be loosened.
pub const MAX_LOOSENING: f64 = 10.0;

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub subcommand: String,
    pub characters: Vec<String>,
    pub params: BTreeMap<String, f64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn new(subcommand: &str) -> Self {
        Self { subcommand: subcommand.into(), ..Default::default() }
    }

    /// `--threads`, else `LMOMENT_THREADS`, else the rayon default.
    pub fn effective_threads(&self) -> Option<usize> {
        self.threads.filter(|&n| n > 0).or_else(lmoment_core::moments::threads_from_env)
    }

    /// Parses `name=value` overrides.
    pub fn parse_tolerances(items: &[String]) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for item in items {
            let (k, v) = item.split_once('=').ok_or_else(|| anyhow!("expected name=value, got {item:?}"))?;
            let v: f64 = v.trim().parse().map_err(|_| anyhow!("bad tolerance value in {item:?}"))?;
            out.insert(k.trim().to_string(), v);
        }
        Ok(out)
    }

    /// Tolerance for `name`: the override if present, else `default`.
    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Rejects overrides for unknown or fixed checks and any looser than
    /// `MAX_LOOSENING` times the default.
    pub fn validate_tolerances(&self, defaults: &BTreeMap<String, Option<f64>>) -> Result<()> {
        for (name, &v) in &self.tolerances {
            let Some(entry) = defaults.get(name) else {
                bail!("unknown check {name:?}");
            };
            let Some(default) = *entry else {
                bail!("check {name:?} has a fixed threshold");
            };
            if !(v.is_finite() && v > 0.0) {
                bail!("tolerance for {name:?} must be positive, got {v}");
            }
            if v > MAX_LOOSENING * default {
                bail!("tolerance {v:e} for {name:?} exceeds {MAX_LOOSENING}× the default {default:e}");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> BTreeMap<String, Option<f64>> {
        [("a".to_string(), Some(1e-9)), ("trend".to_string(), None)].into_iter().collect()
    }

    #[test]
    fn tolerance_rules() {
        let mut c = RunConfig::new("suite");
        c.tolerances = RunConfig::parse_tolerances(&["a=1e-12".into()]).unwrap();
        assert!(c.validate_tolerances(&defaults()).is_ok());
        assert_eq!(c.tolerance("a", 1e-9), 1e-12);
        c.tolerances.insert("a".into(), 1e-8);
        assert!(c.validate_tolerances(&defaults()).is_ok());
        c.tolerances.insert("a".into(), 2e-8);
        assert!(c.validate_tolerances(&defaults()).is_err());
        c.tolerances = [("trend".to_string(), 0.5)].into_iter().collect();
        assert!(c.validate_tolerances(&defaults()).is_err());
        c.tolerances = [("nope".to_string(), 0.5)].into_iter().collect();
        assert!(c.validate_tolerances(&defaults()).is_err());
        c.tolerances = [("a".to_string(), -1.0)].into_iter().collect();
        assert!(c.validate_tolerances(&defaults()).is_err());
        assert!(RunConfig::parse_tolerances(&["a:1".into()]).is_err());
    }
}
