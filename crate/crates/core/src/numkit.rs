//! Dense vectors, symmetric matrices and the scalar kernels shared by the
//! solvers: soft-thresholding, symmetric matrix-vector products and a
//! power-iteration bound on the largest eigenvalue.
//!
//! Every loop runs in a fixed index order so results are bit-reproducible.

use std::ops::Index;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

/// Multiplicative slack applied to the power-iteration estimate.
pub const SPECTRAL_SAFETY_FACTOR: f64 = 1.01;
/// Default number of power iterations.
pub const DEFAULT_POWER_ITERS: usize = 100;
/// Smallest step-size denominator the solvers will accept.
pub const MIN_LIPSCHITZ: f64 = 1e-12;

/// A fixed-length vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("vector entry {i} is not finite")));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Wraps entries produced by internal arithmetic on finite inputs.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &DenseVector) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        check_dim(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn scaled(&self, c: f64) -> DenseVector {
        Self(self.0.iter().map(|v| v * c).collect())
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for DenseVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Symmetric `p x p` matrix with full row-major storage.
///
/// Mutation goes through operations that write both `(i, j)` and `(j, i)`
/// with the same value, so the storage is symmetric bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * m.dim + i] = d;
        }
        m
    }

    /// Builds a matrix from rows, rejecting anything that is not exactly
    /// symmetric or contains non-finite values.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dim(dim, row.len())?;
            entries.extend_from_slice(row);
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// `scale * sum_k x_k x_k^T` over the given rows.
    pub fn gram<'a, I>(dim: usize, rows: I, scale: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut m = Self::zeros(dim);
        for row in rows {
            m.rank_one_update(1.0, row)?;
        }
        m.scale_in_place(scale);
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    /// Raw row-major storage; equal matrices have equal slices.
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// `self += weight * x x^T`.
    pub fn rank_one_update(&mut self, weight: f64, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        let p = self.dim;
        for (i, &xi) in x.iter().enumerate() {
            let wxi = weight * xi;
            for (j, &xj) in x.iter().enumerate().skip(i) {
                let v = wxi * xj;
                self.entries[i * p + j] += v;
                if j != i {
                    self.entries[j * p + i] += v;
                }
            }
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.entries.iter_mut().for_each(|v| *v *= c);
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut m = self.clone();
        m.scale_in_place(c);
        m
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut out = vec![0.0; self.dim];
        self.matvec_into(v, &mut out);
        dot(v, &out)
    }

    /// `out = self * v` without bounds bookkeeping; callers check dims.
    #[inline]
    pub(crate) fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.entries.chunks_exact(self.dim.max(1))) {
            *o = dot(row, v);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators keep the order fixed while letting the compiler
    // pipeline the loop.
    let n = a.len().min(b.len());
    let chunks = n / 4;
    let mut acc = [0.0f64; 4];
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in (4 * chunks)..n {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn soft_scalar(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Elementwise `sign(v_i) * max(|v_i| - tau, 0)`, the prox of `tau * ||.||_1`.
pub fn soft_threshold(v: &DenseVector, tau: f64) -> Result<DenseVector> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(invalid(format!("threshold must be finite and >= 0, got {tau}")));
    }
    if !v.is_finite() {
        return Err(invalid("soft_threshold input is not finite"));
    }
    Ok(DenseVector(v.iter().map(|&x| soft_scalar(x, tau)).collect()))
}

pub fn sym_matvec(m: &SymMatrix, v: &DenseVector) -> Result<DenseVector> {
    check_dim(m.dim(), v.len())?;
    let mut out = vec![0.0; m.dim()];
    m.matvec_into(v.as_slice(), &mut out);
    Ok(DenseVector(out))
}

/// Upper bound on `lambda_max(m)` for a PSD matrix: the Rayleigh quotient
/// after `iters` power iterations, times [`SPECTRAL_SAFETY_FACTOR`].
/// The start vector is drawn from `seed`, so the result is deterministic.
/// The returned value is floored at [`MIN_LIPSCHITZ`].
pub fn spectral_upper_bound(m: &SymMatrix, iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(invalid("power iteration needs at least one iteration"));
    }
    let p = m.dim();
    if p == 0 {
        return Ok(MIN_LIPSCHITZ);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n0 = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= n0);
    let mut w = vec![0.0; p];
    for _ in 0..iters {
        m.matvec_into(&v, &mut w);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Ok(MIN_LIPSCHITZ);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    let rayleigh = m.quad_form(&v);
    Ok((SPECTRAL_SAFETY_FACTOR * rayleigh).max(MIN_LIPSCHITZ))
}
