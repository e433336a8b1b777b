//! Experiment configuration: a flat TOML file with typed keys. Unknown keys
//! are rejected so that typos in experiment definitions fail loudly.
//!
//! ```toml
//! p = 200
//! s = 10
//! signal = "weak"          # weak | strong | custom (needs nonzero_sd)
//! design = "toeplitz"      # independent | toeplitz (needs rho)
//! rho = 0.5
//! noise_sd = 1.0
//! t0 = [100, 200]          # or a single integer
//! T = 2000
//! seeds = [1, 2, 3]
//! algorithms = ["olin", "os_lasso", "offline"]
//! os_lasso_k = [1, 20]
//! ```

use std::path::{Path, PathBuf};

use olin_core::{DesignSpec, OlinConfig, SignalSpec, SolverOptions, WeightScheme};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Weak,
    Strong,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignName {
    Independent,
    Toeplitz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Olin,
    OsLasso,
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// `lambda_t = lambda_scale * sqrt(ln p / t)`.
    #[default]
    Schedule,
    /// `lambda_t = 2 ||grad L_t(beta*; beta_{t-1})||_inf`; simulation only.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum T0Spec {
    One(usize),
    Many(Vec<usize>),
}

/// On-disk layout. Optional keys fall back to the defaults in [`ExperimentConfig`].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    p: usize,
    s: usize,
    signal: SignalKind,
    nonzero_sd: Option<f64>,
    design: DesignName,
    rho: Option<f64>,
    noise_sd: Option<f64>,
    t0: T0Spec,
    #[serde(rename = "T")]
    rounds: u64,
    seeds: Vec<u64>,
    algorithms: Vec<Algorithm>,
    os_lasso_k: Option<Vec<usize>>,
    os_lasso_eta: Option<f64>,
    os_lasso_lambda0_scale: Option<f64>,
    offline_stride: Option<u64>,
    lambda0_scale: Option<f64>,
    lambda_scale: Option<f64>,
    weight_a: Option<f64>,
    initial_tol: Option<f64>,
    initial_max_iter: Option<usize>,
    online_tol: Option<f64>,
    online_max_iter: Option<usize>,
    checkpoint_stride: Option<u64>,
    lambda_mode: Option<LambdaMode>,
    pin_beta_star: Option<bool>,
    slope_t_min: Option<u64>,
    slope_t_max: Option<u64>,
    output: Option<PathBuf>,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p: usize,
    pub signal: SignalSpec,
    pub design: DesignSpec,
    pub noise_sd: f64,
    pub t0: Vec<usize>,
    pub rounds: u64,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub os_lasso_k: Vec<usize>,
    pub os_lasso_eta: f64,
    pub os_lasso_lambda0_scale: f64,
    pub offline_stride: u64,
    pub olin: OlinConfig,
    pub checkpoint_stride: u64,
    pub lambda_mode: LambdaMode,
    pub pin_beta_star: bool,
    pub slope_t_min: u64,
    pub slope_t_max: u64,
    pub output: Option<PathBuf>,
}

/// 10 for `T <= 2000`, else `T / 1000` rounded to the nearest integer.
pub fn default_checkpoint_stride(rounds: u64) -> u64 {
    if rounds <= 2000 {
        10
    } else {
        ((rounds as f64) / 1000.0).round() as u64
    }
}

fn field(name: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        field: name.to_string(),
        message: msg.into(),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(field(name, format!("must be a positive finite number, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        if raw.p < 2 {
            return Err(field("p", "must be >= 2"));
        }
        if raw.s > raw.p {
            return Err(field("s", format!("sparsity {} exceeds p = {}", raw.s, raw.p)));
        }
        let signal = match raw.signal {
            SignalKind::Weak => SignalSpec::weak(raw.s),
            SignalKind::Strong => SignalSpec::strong(raw.s),
            SignalKind::Custom => {
                let sd = raw
                    .nonzero_sd
                    .ok_or_else(|| field("nonzero_sd", "required when signal = \"custom\""))?;
                SignalSpec {
                    s: raw.s,
                    nonzero_sd: positive("nonzero_sd", sd)?,
                }
            }
        };
        if raw.signal != SignalKind::Custom && raw.nonzero_sd.is_some() {
            return Err(field("nonzero_sd", "only valid with signal = \"custom\""));
        }
        let design = match raw.design {
            DesignName::Independent => {
                if raw.rho.is_some() {
                    return Err(field("rho", "only valid with design = \"toeplitz\""));
                }
                DesignSpec::independent(raw.p)
            }
            DesignName::Toeplitz => {
                let rho = raw.rho.ok_or_else(|| field("rho", "required when design = \"toeplitz\""))?;
                DesignSpec::toeplitz(raw.p, rho).map_err(|e| field("rho", e.to_string()))?
            }
        };
        let noise_sd = raw.noise_sd.unwrap_or(1.0);
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(field("noise_sd", "must be finite and >= 0"));
        }
        let t0 = match raw.t0 {
            T0Spec::One(v) => vec![v],
            T0Spec::Many(v) => v,
        };
        if t0.is_empty() {
            return Err(field("t0", "list is empty"));
        }
        if t0.contains(&0) {
            return Err(field("t0", "every initial batch size must be >= 1"));
        }
        if raw.rounds == 0 {
            return Err(field("T", "must be >= 1"));
        }
        if raw.seeds.is_empty() {
            return Err(field("seeds", "list is empty"));
        }
        let mut seen = raw.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != raw.seeds.len() {
            return Err(field("seeds", "contains duplicates"));
        }
        if raw.algorithms.is_empty() {
            return Err(field("algorithms", "list is empty"));
        }
        let os_lasso_k = raw.os_lasso_k.unwrap_or_else(|| vec![1, 20]);
        if os_lasso_k.is_empty() || os_lasso_k.contains(&0) {
            return Err(field("os_lasso_k", "needs at least one entry, all >= 1"));
        }
        let lambda0_scale = positive("lambda0_scale", raw.lambda0_scale.unwrap_or(1.0))?;
        let lambda_scale = positive("lambda_scale", raw.lambda_scale.unwrap_or(1.0))?;
        let scheme = WeightScheme::new(raw.weight_a.unwrap_or(0.0)).map_err(|e| field("weight_a", e.to_string()))?;
        let initial_solver = SolverOptions {
            tol: positive("initial_tol", raw.initial_tol.unwrap_or(SolverOptions::INITIAL.tol))?,
            max_iter: raw.initial_max_iter.unwrap_or(SolverOptions::INITIAL.max_iter),
        };
        let online_solver = SolverOptions {
            tol: positive("online_tol", raw.online_tol.unwrap_or(SolverOptions::ONLINE.tol))?,
            max_iter: raw.online_max_iter.unwrap_or(SolverOptions::ONLINE.max_iter),
        };
        if initial_solver.max_iter == 0 {
            return Err(field("initial_max_iter", "must be >= 1"));
        }
        if online_solver.max_iter == 0 {
            return Err(field("online_max_iter", "must be >= 1"));
        }
        let checkpoint_stride = raw
            .checkpoint_stride
            .unwrap_or_else(|| default_checkpoint_stride(raw.rounds));
        if checkpoint_stride == 0 {
            return Err(field("checkpoint_stride", "must be >= 1"));
        }
        let offline_stride = raw.offline_stride.unwrap_or(checkpoint_stride);
        if offline_stride == 0 {
            return Err(field("offline_stride", "must be >= 1"));
        }
        let slope_t_min = raw.slope_t_min.unwrap_or((raw.rounds / 100).max(1));
        let slope_t_max = raw.slope_t_max.unwrap_or(raw.rounds);
        if slope_t_min > slope_t_max {
            return Err(field("slope_t_min", "exceeds slope_t_max"));
        }
        Ok(Self {
            p: raw.p,
            signal,
            design,
            noise_sd,
            t0,
            rounds: raw.rounds,
            seeds: raw.seeds,
            algorithms: raw.algorithms,
            os_lasso_k,
            os_lasso_eta: positive("os_lasso_eta", raw.os_lasso_eta.unwrap_or(olin_core::baselines::DEFAULT_ETA))?,
            os_lasso_lambda0_scale: positive(
                "os_lasso_lambda0_scale",
                raw.os_lasso_lambda0_scale.unwrap_or(lambda0_scale),
            )?,
            offline_stride,
            olin: OlinConfig {
                lambda0_scale,
                lambda_scale,
                scheme,
                initial_solver,
                online_solver,
            },
            checkpoint_stride,
            lambda_mode: raw.lambda_mode.unwrap_or_default(),
            pin_beta_star: raw.pin_beta_star.unwrap_or(false),
            slope_t_min,
            slope_t_max,
            output: raw.output,
        })
    }
}
