//! Estimation-error metrics, support recovery, restricted-cone membership,
//! a sampled restricted-eigenvalue heuristic and log-log rate fitting.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::datamodel::GroundTruth;
use crate::error::{check_dim, invalid, Result};
use crate::numkit::{DenseVector, SymMatrix};
use crate::simgen::StreamRng;

/// Default magnitude below which a coefficient counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
/// Ratio bounding the off-support mass in the restricted cone.
pub const CONE_RATIO: f64 = 3.0;

/// Metrics recorded at one checkpoint of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub t: u64,
    pub l1_err: f64,
    pub mse: f64,
    pub support_precision: f64,
    pub support_recall: f64,
    pub lambda: f64,
    pub in_cone: bool,
    pub solver_iters: u64,
    pub wall_ms: f64,
}

impl CheckpointRow {
    pub fn measure(t: u64, beta_hat: &DenseVector, truth: &GroundTruth, lambda: f64, solver_iters: u64, wall_ms: f64) -> Result<Self> {
        let (l1_err, mse) = errors(beta_hat, truth)?;
        let (support_precision, support_recall) = support_metrics(beta_hat, truth, DEFAULT_ZERO_TOL)?;
        Ok(Self {
            t,
            l1_err,
            mse,
            support_precision,
            support_recall,
            lambda,
            in_cone: cone_check(beta_hat, truth)?,
            solver_iters,
            wall_ms,
        })
    }
}

/// Which error column a rate fit reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorField {
    L1,
    Mse,
}

impl ErrorField {
    fn of(&self, row: &CheckpointRow) -> f64 {
        match self {
            ErrorField::L1 => row.l1_err,
            ErrorField::Mse => row.mse,
        }
    }
}

/// `(||beta_hat - beta*||_1, ||beta_hat - beta*||_2^2)`.
pub fn errors(beta_hat: &DenseVector, truth: &GroundTruth) -> Result<(f64, f64)> {
    check_dim(truth.dim(), beta_hat.len())?;
    let (mut l1, mut sq) = (0.0, 0.0);
    for (a, b) in beta_hat.iter().zip(truth.beta_star.iter()) {
        let d = a - b;
        l1 += d.abs();
        sq += d * d;
    }
    Ok((l1, sq))
}

fn split_l1(xi: &[f64], support: &BTreeSet<usize>) -> (f64, f64) {
    let (mut on, mut off) = (0.0, 0.0);
    for (i, v) in xi.iter().enumerate() {
        if support.contains(&i) {
            on += v.abs();
        } else {
            off += v.abs();
        }
    }
    (on, off)
}

/// True iff `||xi_{S^c}||_1 <= 3 ||xi_S||_1` for `xi = beta_hat - beta*`.
pub fn cone_check(beta_hat: &DenseVector, truth: &GroundTruth) -> Result<bool> {
    let xi = beta_hat.sub(&truth.beta_star)?;
    let (on, off) = split_l1(xi.as_slice(), &truth.support);
    Ok(off <= CONE_RATIO * on)
}

/// Precision and recall of `{i : |beta_hat_i| > zero_tol}` against the true
/// support. An empty prediction has precision 1; an empty support has
/// recall 1.
pub fn support_metrics(beta_hat: &DenseVector, truth: &GroundTruth, zero_tol: f64) -> Result<(f64, f64)> {
    if zero_tol.is_nan() || zero_tol <= 0.0 {
        return Err(invalid("zero_tol must be positive"));
    }
    check_dim(truth.dim(), beta_hat.len())?;
    let predicted: Vec<usize> = beta_hat
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > zero_tol)
        .map(|(i, _)| i)
        .collect();
    let hits = predicted.iter().filter(|i| truth.support.contains(i)).count() as f64;
    let precision = if predicted.is_empty() { 1.0 } else { hits / predicted.len() as f64 };
    let recall = if truth.support.is_empty() { 1.0 } else { hits / truth.support.len() as f64 };
    Ok((precision, recall))
}

/// OLS slope of `ln(field)` on `ln(t)` over rows with `t_min <= t <= t_max`.
pub fn loglog_slope(rows: &[CheckpointRow], t_min: u64, t_max: u64, field: ErrorField) -> Result<f64> {
    let mut pts = Vec::new();
    for row in rows.iter().filter(|r| (t_min..=t_max).contains(&r.t)) {
        let v = field.of(row);
        if !(v.is_finite() && v > 0.0) || row.t == 0 {
            return Err(invalid(format!("non-positive error value at t = {}", row.t)));
        }
        pts.push(((row.t as f64).ln(), v.ln()));
    }
    if pts.len() < 3 {
        return Err(invalid(format!(
            "need at least 3 checkpoints in [{t_min}, {t_max}], found {}",
            pts.len()
        )));
    }
    Ok(ols_slope(&pts))
}

pub(crate) fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Draws one unit direction in the cone over `support`: a Gaussian vector
/// whose off-support block is shrunk onto the cone boundary when it
/// exceeds `3 ||delta_S||_1`.
pub fn sample_cone_direction(p: usize, support: &BTreeSet<usize>, rng: &mut StreamRng) -> Vec<f64> {
    loop {
        let mut delta: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
        let (on, off) = split_l1(&delta, support);
        if on == 0.0 {
            continue;
        }
        if off > CONE_RATIO * on {
            let shrink = CONE_RATIO * on / off;
            for (i, d) in delta.iter_mut().enumerate() {
                if !support.contains(&i) {
                    *d *= shrink;
                }
            }
        }
        let norm = crate::numkit::dot(&delta, &delta).sqrt();
        if norm > 0.0 {
            delta.iter_mut().for_each(|d| *d /= norm);
            return delta;
        }
    }
}

/// Heuristic restricted-eigenvalue estimate: the minimum of
/// `delta^T gram delta` over `samples` random unit cone directions. This is
/// an upper estimate of the true cone minimum, never a certificate.
pub fn restricted_eigen_estimate(gram: &SymMatrix, support: &BTreeSet<usize>, samples: usize, rng: &mut StreamRng) -> Result<f64> {
    if support.is_empty() {
        return Err(invalid("support must be nonempty"));
    }
    if samples == 0 {
        return Err(invalid("samples must be >= 1"));
    }
    let p = gram.dim();
    if let Some(&i) = support.iter().next_back() {
        if i >= p {
            return Err(invalid(format!("support index {i} out of range for p = {p}")));
        }
    }
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let delta = sample_cone_direction(p, support, rng);
        best = best.min(gram.quad_form(&delta));
    }
    Ok(best.max(0.0))
}
