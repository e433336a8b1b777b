//! Seeded synthetic data: sparse ground truth, Gaussian covariates with
//! identity or Toeplitz (AR(1)) covariance, and linear-model responses.
//!
//! Randomness comes from ChaCha20 (`rand_chacha` 0.9, pinned). A replication
//! seed fans out into independent named substreams via the ChaCha stream id,
//! so the truth, the initial batch and the online stream can be varied
//! independently.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datamodel::{GroundTruth, Observation};
use crate::error::{check_dim, invalid, Result};
use crate::numkit::{dot, DenseVector};

/// Covariate correlation structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DesignKind {
    Independent,
    Toeplitz,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub p: usize,
    pub kind: DesignKind,
    rho: f64,
}

impl DesignSpec {
    pub fn independent(p: usize) -> Self {
        Self {
            p,
            kind: DesignKind::Independent,
            rho: 0.0,
        }
    }

    /// `Sigma_ij = rho^|i - j|`, `0 <= rho < 1`.
    pub fn toeplitz(p: usize, rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(invalid(format!("rho must lie in [0, 1), got {rho}")));
        }
        Ok(Self {
            p,
            kind: DesignKind::Toeplitz,
            rho,
        })
    }

    pub fn rho(&self) -> f64 {
        match self.kind {
            DesignKind::Independent => 0.0,
            DesignKind::Toeplitz => self.rho,
        }
    }

    /// Entry `(i, j)` of the implied covariance.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.rho().powi(i.abs_diff(j) as i32)
    }
}

/// Sparsity and amplitude of the true coefficients; the support is the
/// first `s` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub s: usize,
    pub nonzero_sd: f64,
}

impl SignalSpec {
    /// Nonzero entries drawn from `N(0, 0.25)`.
    pub fn weak(s: usize) -> Self {
        Self { s, nonzero_sd: 0.5 }
    }

    /// Nonzero entries drawn from `N(0, 4)`.
    pub fn strong(s: usize) -> Self {
        Self { s, nonzero_sd: 2.0 }
    }
}

/// Named substreams of a replication seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Truth = 1,
    Batch = 2,
    Stream = 3,
    Diagnostics = 4,
}

/// A ChaCha20 generator positioned on one substream of a seed.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha20Rng,
}

impl StreamRng {
    pub fn new(seed: u64, substream: Substream) -> Self {
        Self::with_stream_id(seed, substream as u64)
    }

    pub fn with_stream_id(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { inner }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn gen_ground_truth(spec: &SignalSpec, p: usize, noise_sd: f64, rng: &mut StreamRng) -> Result<GroundTruth> {
    if spec.s > p {
        return Err(invalid(format!("sparsity {} exceeds dimension {p}", spec.s)));
    }
    if !(spec.nonzero_sd > 0.0 && spec.nonzero_sd.is_finite()) {
        return Err(invalid("nonzero_sd must be positive"));
    }
    let mut beta = vec![0.0; p];
    for b in beta.iter_mut().take(spec.s) {
        // A draw of exactly zero would shrink the support; redraw.
        loop {
            let v = spec.nonzero_sd * rng.standard_normal();
            if v != 0.0 {
                *b = v;
                break;
            }
        }
    }
    GroundTruth::new(DenseVector::from_raw(beta), noise_sd)
}

/// Draws `x ~ N(0, Sigma)`. The Toeplitz case uses the AR(1) recursion
/// `x_1 = z_1`, `x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j`.
pub fn gen_covariate(spec: &DesignSpec, rng: &mut StreamRng) -> DenseVector {
    let mut x = Vec::with_capacity(spec.p);
    match spec.kind {
        DesignKind::Independent => {
            for _ in 0..spec.p {
                x.push(rng.standard_normal());
            }
        }
        DesignKind::Toeplitz => {
            let rho = spec.rho;
            let innov = (1.0 - rho * rho).sqrt();
            let mut prev = 0.0;
            for j in 0..spec.p {
                let z = rng.standard_normal();
                let v = if j == 0 { z } else { rho * prev + innov * z };
                x.push(v);
                prev = v;
            }
        }
    }
    DenseVector::from_raw(x)
}

/// Draws `x`, then `eps ~ N(0, noise_sd^2)`, and returns `(x, x^T beta* + eps)`.
pub fn gen_observation(truth: &GroundTruth, spec: &DesignSpec, rng: &mut StreamRng) -> Result<Observation> {
    check_dim(truth.dim(), spec.p)?;
    let x = gen_covariate(spec, rng);
    let eps = rng.standard_normal();
    let y = dot(x.as_slice(), truth.beta_star.as_slice()) + truth.noise_sd * eps;
    Observation::new(x, y)
}

/// Draws `n` observations in sequence.
pub fn gen_observations(truth: &GroundTruth, spec: &DesignSpec, n: usize, rng: &mut StreamRng) -> Result<Vec<Observation>> {
    (0..n).map(|_| gen_observation(truth, spec, rng)).collect()
}
