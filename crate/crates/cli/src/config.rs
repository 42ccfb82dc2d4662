//! Run configuration: command-line flags over a TOML file over defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_DAMPING_TERMS: &str = "qd, qd^2, qd^3, q^2*qd";
pub const DEFAULT_STIFFNESS_TERMS: &str = "q, q^2, q^3, q^4, q^5";

/// Every field optional; unset fields fall back to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub inertia: Option<f64>,
    pub damping_terms: Option<String>,
    pub stiffness_terms: Option<String>,
    pub cutoff_hz: Option<f64>,
    pub trim: Option<f64>,
    pub smooth_window: Option<usize>,
    pub eps_dq: Option<f64>,
    pub min_t_fraction: Option<f64>,
    pub crossings: Option<usize>,
    pub weighting: Option<String>,
    pub lambda: Option<f64>,
    pub normalize: Option<bool>,
    pub max_iters: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        RunConfig {
            input: over.input.or(self.input),
            inertia: over.inertia.or(self.inertia),
            damping_terms: over.damping_terms.or(self.damping_terms),
            stiffness_terms: over.stiffness_terms.or(self.stiffness_terms),
            cutoff_hz: over.cutoff_hz.or(self.cutoff_hz),
            trim: over.trim.or(self.trim),
            smooth_window: over.smooth_window.or(self.smooth_window),
            eps_dq: over.eps_dq.or(self.eps_dq),
            min_t_fraction: over.min_t_fraction.or(self.min_t_fraction),
            crossings: over.crossings.or(self.crossings),
            weighting: over.weighting.or(self.weighting),
            lambda: over.lambda.or(self.lambda),
            normalize: over.normalize.or(self.normalize),
            max_iters: over.max_iters.or(self.max_iters),
            rtol: over.rtol.or(self.rtol),
            atol: over.atol.or(self.atol),
        }
    }

    /// Loads `file` (if any) and applies `flags` on top.
    pub fn resolve(file: Option<&Path>, flags: RunConfig) -> Result<RunConfig, CliError> {
        let base = match file {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(flags))
    }
}
