//! Run configuration: flat `key = value` files with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use cfs_core::em_perturb::{ConvolutionRule, DEFAULT_FD_STEP};
use cfs_core::quadrature::QuadConfig;

/// Configuration problem, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmRule {
    Coarse,
    Fine,
}

impl EmRule {
    pub fn rule(self) -> ConvolutionRule {
        match self {
            EmRule::Coarse => ConvolutionRule::coarse(),
            EmRule::Fine => ConvolutionRule::fine(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mass: f64,
    pub epsilon: f64,
    pub region_lambda: f64,
    pub quad_rel_tol: f64,
    pub quad_max_panels: usize,
    pub truncation_t: f64,
    pub truncation_r: f64,
    pub max_doublings: u32,
    pub seed: u64,
    pub mc_samples: usize,
    pub em_rule: EmRule,
    pub fd_step: f64,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = QuadConfig::default();
        Self {
            mass: 1.0,
            epsilon: 0.1,
            region_lambda: q.region_lambda,
            quad_rel_tol: q.rel_tol,
            quad_max_panels: q.max_panels,
            truncation_t: q.t_max,
            truncation_r: q.r_max,
            max_doublings: q.max_doublings,
            seed: 1,
            mc_samples: 20_000,
            em_rule: EmRule::Coarse,
            fd_step: DEFAULT_FD_STEP,
            output_path: None,
        }
    }
}

pub const KEYS: [&str; 13] = [
    "mass",
    "epsilon",
    "region_lambda",
    "quad_rel_tol",
    "quad_max_panels",
    "truncation_T",
    "truncation_R",
    "max_doublings",
    "seed",
    "mc_samples",
    "em_rule",
    "fd_step",
    "output_path",
];

fn bad_value(key: &str, value: &str, expected: &str) -> ConfigError {
    ConfigError(format!("config key '{key}': cannot parse '{value}' as {expected}"))
}

fn real(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| bad_value(key, value, "a real number"))
}

fn integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| bad_value(key, value, "a non-negative integer"))
}

impl RunConfig {
    /// Set one key. Unknown keys and unparsable values are errors naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key.trim() {
            "mass" => self.mass = real(key, value)?,
            "epsilon" => self.epsilon = real(key, value)?,
            "region_lambda" => self.region_lambda = real(key, value)?,
            "quad_rel_tol" => self.quad_rel_tol = real(key, value)?,
            "quad_max_panels" => self.quad_max_panels = integer(key, value)?,
            "truncation_T" => self.truncation_t = real(key, value)?,
            "truncation_R" => self.truncation_r = real(key, value)?,
            "max_doublings" => self.max_doublings = integer(key, value)?,
            "seed" => self.seed = integer(key, value)?,
            "mc_samples" => self.mc_samples = integer(key, value)?,
            "em_rule" => {
                self.em_rule = match value {
                    "coarse" => EmRule::Coarse,
                    "fine" => EmRule::Fine,
                    _ => return Err(bad_value(key, value, "'coarse' or 'fine'")),
                }
            }
            "fd_step" => self.fd_step = real(key, value)?,
            "output_path" => self.output_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            other => {
                return Err(ConfigError(format!(
                    "unknown config key '{other}' (known keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Apply the lines of a config file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("{origin}:{}: malformed line '{line}', expected key = value", n + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Apply a `key=value` override from the command line.
    pub fn apply_override(&mut self, item: &str) -> Result<(), ConfigError> {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("malformed override '{item}', expected key=value")))?;
        self.set(key, value)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError(format!("config key '{key}': must be positive, got {v}")))
            }
        };
        positive("mass", self.mass)?;
        positive("epsilon", self.epsilon)?;
        positive("quad_rel_tol", self.quad_rel_tol)?;
        positive("truncation_T", self.truncation_t)?;
        positive("truncation_R", self.truncation_r)?;
        positive("fd_step", self.fd_step)?;
        if !(self.region_lambda > 0.8 && self.region_lambda < 1.0) {
            return Err(ConfigError(format!(
                "config key 'region_lambda': must lie in (0.8, 1), got {}",
                self.region_lambda
            )));
        }
        if self.quad_max_panels < 16 {
            return Err(ConfigError("config key 'quad_max_panels': must be at least 16".into()));
        }
        if self.mc_samples < 2 {
            return Err(ConfigError("config key 'mc_samples': must be at least 2".into()));
        }
        Ok(())
    }

    pub fn quad(&self) -> QuadConfig {
        QuadConfig {
            rel_tol: self.quad_rel_tol,
            region_lambda: self.region_lambda,
            t_max: self.truncation_t,
            r_max: self.truncation_r,
            max_panels: self.quad_max_panels,
            max_doublings: self.max_doublings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nmass = 2.0\n\nepsilon=0.05 # inline\ntruncation_T = 80\n", "test").unwrap();
        c.apply_override("seed=42").unwrap();
        assert_eq!((c.mass, c.epsilon, c.truncation_t, c.seed), (2.0, 0.05, 80.0, 42));
        c.validate().unwrap();
    }

    #[test]
    fn errors_name_the_key() {
        let mut c = RunConfig::default();
        let e = c.apply_text("masss = 1\n", "f").unwrap_err();
        assert!(e.0.contains("'masss'"));
        let e = c.set("epsilon", "abc").unwrap_err();
        assert!(e.0.contains("'epsilon'"));
        let e = c.apply_text("no equals sign\n", "f").unwrap_err();
        assert!(e.0.contains("f:1"));
        c.set("quad_rel_tol", "0").unwrap();
        assert!(c.validate().unwrap_err().0.contains("'quad_rel_tol'"));
        let mut c = RunConfig::default();
        c.set("region_lambda", "0.7").unwrap();
        assert!(c.validate().unwrap_err().0.contains("region_lambda"));
    }
}
