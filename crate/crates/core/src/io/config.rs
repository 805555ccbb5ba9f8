//! Run-config files: `key = value` lines naming generation settings.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::GenerationConfig;

/// Settings read from a run-config file; absent keys stay `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub steps: Option<usize>,
    pub sigma: Option<f64>,
    pub tau: Option<f64>,
    pub r_cut: Option<f64>,
    pub max_density: Option<f64>,
    pub target: Option<Vec<f64>>,
    pub seed: Option<u64>,
    /// Cubic cell edge in Å.
    pub edge: Option<f64>,
}

impl RunConfig {
    /// Overwrites the fields of `cfg` that this file sets.
    pub fn apply(&self, cfg: &mut GenerationConfig) {
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.r_cut {
            cfg.r_cut = v;
        }
        if let Some(v) = self.max_density {
            cfg.max_density = v;
        }
        if let Some(v) = &self.target {
            cfg.target = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}

/// Parses a comma-separated list of reals; the empty string is the empty list.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("`{}` is not a number", t.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite("target vector".into()))
            }
        })
        .collect()
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let mut out = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |m: String| Error::Parse { line, message: m };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let real = || -> Result<f64> {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("`{key}` needs a finite number, found `{value}`")))
        };
        let int = || -> Result<u64> {
            value
                .parse::<u64>()
                .map_err(|_| err(format!("`{key}` needs a non-negative integer, found `{value}`")))
        };
        match key {
            "steps" => out.steps = Some(int()? as usize),
            "sigma" => out.sigma = Some(real()?),
            "tau" => out.tau = Some(real()?),
            "r_cut" => out.r_cut = Some(real()?),
            "max_density" | "rho" => out.max_density = Some(real()?),
            "edge" => out.edge = Some(real()?),
            "seed" => out.seed = Some(int()?),
            "target" => out.target = Some(parse_vector(value).map_err(|e| err(e.to_string()))?),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    Ok(out)
}

pub fn load_run_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    parse_run_config(&fs::read_to_string(path)?)
}
