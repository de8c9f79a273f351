//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! source.c_b2b = 0.925
//! source.hh_vv_ratio = 1.38
//! source.mu = 0.05
//! det.efficiency = 0.2
//! det.dark_prob = 4e-5
//! tomo.pulses = 1000000
//! run.seed = 1
//! run.noisy = false
//! ```

use std::path::Path;

use pdlq::compensation::Measurement;
use pdlq::instrument::{self, calibrate_source, settings_36, DetectorModel, SourceModel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    Value { line: usize, key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] pdlq::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub c_b2b: f64,
    pub hh_vv_ratio: f64,
    pub mu: f64,
    pub efficiency: f64,
    pub dark_prob: f64,
    pub pulses: u64,
    pub seed: u64,
    pub noisy: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let det = DetectorModel::default();
        Self {
            c_b2b: 0.925,
            hh_vv_ratio: 1.38,
            mu: instrument::DEFAULT_MU,
            efficiency: det.efficiency(),
            dark_prob: det.dark_prob(),
            pulses: instrument::DEFAULT_PULSES,
            seed: 1,
            noisy: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::Value {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            let real = || value.parse::<f64>().map_err(|_| bad());
            match key {
                "source.c_b2b" => cfg.c_b2b = real()?,
                "source.hh_vv_ratio" => cfg.hh_vv_ratio = real()?,
                "source.mu" => cfg.mu = real()?,
                "det.efficiency" => cfg.efficiency = real()?,
                "det.dark_prob" => cfg.dark_prob = real()?,
                "tomo.pulses" => cfg.pulses = value.parse().map_err(|_| bad())?,
                "run.seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                "run.noisy" => cfg.noisy = value.parse().map_err(|_| bad())?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.source()?;
        self.detector()?;
        if self.pulses == 0 {
            return Err(pdlq::Error::Domain("tomo.pulses must be >= 1".into()).into());
        }
        Ok(())
    }

    /// Calibrated source: Werner noise plus source PDL along H.
    pub fn source(&self) -> pdlq::Result<SourceModel> {
        calibrate_source(self.c_b2b, self.hh_vv_ratio)?.with_mu(self.mu)
    }

    pub fn detector(&self) -> pdlq::Result<DetectorModel> {
        DetectorModel::new(self.efficiency, self.dark_prob, 0.0)
    }

    pub fn measurement(&self) -> pdlq::Result<Measurement> {
        Ok(Measurement {
            source: self.source()?,
            detector: self.detector()?,
            pulses: self.pulses,
            settings: settings_36(),
        })
    }
}
