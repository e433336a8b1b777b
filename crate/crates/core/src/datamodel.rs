//! Stream observations, weighting schemes, the constant-memory sufficient
//! statistics of the online phase, and the estimator state they feed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::numkit::{DenseVector, SymMatrix};

/// One `(x, y)` pair from the stream or the initial batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: DenseVector,
    pub y: f64,
}

impl Observation {
    pub fn new(x: DenseVector, y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(invalid("response is not finite"));
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Polynomially decaying weights `w_j = j^(-a)` for `0 <= a < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    a: f64,
}

impl WeightScheme {
    pub fn new(a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(invalid(format!("weight exponent must lie in [0, 1), got {a}")));
        }
        Ok(Self { a })
    }

    pub fn uniform() -> Self {
        Self { a: 0.0 }
    }

    pub fn exponent(&self) -> f64 {
        self.a
    }

    /// Weight of the `j`-th streamed point, `j >= 1`.
    pub fn weight(&self, j: u64) -> f64 {
        if self.a == 0.0 {
            1.0
        } else {
            (j as f64).powf(-self.a)
        }
    }
}

impl Default for WeightScheme {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Running sums `s = sum w_j x_j x_j^T`, `r = sum w_j x_j y_j`,
/// `total_weight = sum w_j` over the `t` absorbed points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub s: SymMatrix,
    pub r: DenseVector,
    pub total_weight: f64,
    pub t: u64,
}

impl SufficientStats {
    pub fn empty(dim: usize) -> Self {
        Self {
            s: SymMatrix::zeros(dim),
            r: DenseVector::zeros(dim),
            total_weight: 0.0,
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// Absorbs one observation in place with weight `(t + 1)^(-a)`.
    pub fn update(&mut self, obs: &Observation, scheme: &WeightScheme) -> Result<()> {
        check_dim(self.dim(), obs.dim())?;
        let w = scheme.weight(self.t + 1);
        self.s.rank_one_update(w, obs.x.as_slice())?;
        let wy = w * obs.y;
        for (ri, xi) in self.r.as_mut_slice().iter_mut().zip(obs.x.iter()) {
            *ri += wy * xi;
        }
        self.total_weight += w;
        self.t += 1;
        Ok(())
    }

    /// `(s * beta - r) / W`, the weighted average streamed gradient at `beta`.
    /// Zero when nothing has been absorbed.
    pub fn averaged_gradient(&self, beta: &DenseVector) -> Result<DenseVector> {
        check_dim(self.dim(), beta.len())?;
        let p = self.dim();
        if self.t == 0 {
            return Ok(DenseVector::zeros(p));
        }
        let mut out = vec![0.0; p];
        self.s.matvec_into(beta.as_slice(), &mut out);
        let inv_w = 1.0 / self.total_weight;
        for (o, r) in out.iter_mut().zip(self.r.iter()) {
            *o = (*o - r) * inv_w;
        }
        Ok(DenseVector::from_raw(out))
    }
}

/// Functional form of [`SufficientStats::update`].
pub fn stats_update(
    stats: &SufficientStats,
    obs: &Observation,
    scheme: &WeightScheme,
) -> Result<SufficientStats> {
    let mut next = stats.clone();
    next.update(obs, scheme)?;
    Ok(next)
}

/// `z_j = sqrt(sum_{k<=j} w_k^2) / sum_{k<=j} w_k`.
pub fn weight_decay_factor(j: u64, scheme: &WeightScheme) -> Result<f64> {
    if j == 0 {
        return Err(invalid("weight decay factor is defined for j >= 1"));
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for k in 1..=j {
        let w = scheme.weight(k);
        sum += w;
        sum_sq += w * w;
    }
    Ok(sum_sq.sqrt() / sum)
}

/// Yields `z_1, z_2, ...` with running sums, O(1) per term.
#[derive(Debug, Clone)]
pub struct WeightDecayFactors {
    scheme: WeightScheme,
    j: u64,
    sum: f64,
    sum_sq: f64,
}

impl WeightDecayFactors {
    pub fn new(scheme: WeightScheme) -> Self {
        Self {
            scheme,
            j: 0,
            sum: 0.0,
            sum_sq: 0.0,
        }
    }
}

impl Iterator for WeightDecayFactors {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        self.j += 1;
        let w = self.scheme.weight(self.j);
        self.sum += w;
        self.sum_sq += w * w;
        Some(self.sum_sq.sqrt() / self.sum)
    }
}

/// Moments of the initial batch: `gram = (1/t0) sum x x^T`,
/// `xty = (1/t0) sum x y`, plus a Lipschitz bound on `gram`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialBatchSummary {
    pub gram: SymMatrix,
    pub xty: DenseVector,
    pub t0: u64,
    pub lipschitz: f64,
}

impl InitialBatchSummary {
    pub fn from_batch(batch: &[Observation], power_iters: usize, seed: u64) -> Result<Self> {
        let first = batch
            .first()
            .ok_or_else(|| invalid("initial batch is empty"))?;
        let p = first.dim();
        for obs in batch {
            check_dim(p, obs.dim())?;
        }
        let inv_n = 1.0 / batch.len() as f64;
        let gram = SymMatrix::gram(p, batch.iter().map(|o| o.x.as_slice()), inv_n)?;
        let mut xty = vec![0.0; p];
        for obs in batch {
            for (acc, xi) in xty.iter_mut().zip(obs.x.iter()) {
                *acc += xi * obs.y;
            }
        }
        xty.iter_mut().for_each(|v| *v *= inv_n);
        let lipschitz = crate::numkit::spectral_upper_bound(&gram, power_iters, seed)?;
        Ok(Self {
            gram,
            xty: DenseVector::from_raw(xty),
            t0: batch.len() as u64,
            lipschitz,
        })
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }
}

/// Everything the online learner carries between rounds. Its size depends
/// on `p` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    pub beta: DenseVector,
    pub stats: SufficientStats,
    pub batch: InitialBatchSummary,
    pub round: u64,
    pub lambda: f64,
    pub scheme: WeightScheme,
    pub solver_iters_last: u64,
    /// False when the last solve hit its iteration cap.
    pub solver_converged_last: bool,
}

impl EstimatorState {
    pub fn dim(&self) -> usize {
        self.beta.len()
    }
}

/// Simulated truth: the sparse coefficient vector, its support and the
/// noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta_star: DenseVector,
    pub support: BTreeSet<usize>,
    pub noise_sd: f64,
}

impl GroundTruth {
    pub fn new(beta_star: DenseVector, noise_sd: f64) -> Result<Self> {
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(invalid(format!("noise sd must be finite and >= 0, got {noise_sd}")));
        }
        let support = beta_star
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            beta_star,
            support,
            noise_sd,
        })
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn dim(&self) -> usize {
        self.beta_star.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn obs(x: &[f64], y: f64) -> Observation {
        Observation::new(DenseVector::new(x.to_vec()).unwrap(), y).unwrap()
    }

    #[test]
    fn stats_update_examples() {
        let a0 = WeightScheme::uniform();
        let s1 = stats_update(&SufficientStats::empty(2), &obs(&[1.0, 2.0], 3.0), &a0).unwrap();
        assert_eq!(s1.s.as_slice(), &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(s1.r.as_slice(), &[3.0, 6.0]);
        assert_eq!((s1.total_weight, s1.t), (1.0, 1));

        let s2 = stats_update(&s1, &obs(&[1.0, 0.0], 0.0), &a0).unwrap();
        assert_eq!(s2.s.as_slice(), &[2.0, 2.0, 2.0, 4.0]);
        assert_eq!(s2.r.as_slice(), &[3.0, 6.0]);
        assert_eq!((s2.total_weight, s2.t), (2.0, 2));
        // input left untouched
        assert_eq!(s1.t, 1);

        let a4 = WeightScheme::new(0.4).unwrap();
        let mut s = SufficientStats::empty(1);
        s.update(&obs(&[1.0], 1.0), &a4).unwrap();
        s.update(&obs(&[1.0], 1.0), &a4).unwrap();
        // 2^(-0.4) = 0.757858283...
        assert_relative_eq!(s.total_weight, 1.757_858_283_255_199, epsilon = 1e-12);
    }

    #[test]
    fn stats_update_rejects_dimension_mismatch() {
        let err = stats_update(
            &SufficientStats::empty(3),
            &obs(&[1.0, 2.0], 0.0),
            &WeightScheme::uniform(),
        );
        assert!(matches!(err, Err(crate::Error::DimensionMismatch { .. })));
    }

    #[test]
    fn weight_scheme_range() {
        assert!(WeightScheme::new(-0.1).is_err());
        assert!(WeightScheme::new(1.0).is_err());
        assert!(WeightScheme::new(0.99).is_ok());
    }

    #[test]
    fn stored_total_weight_matches_recomputation() {
        let scheme = WeightScheme::new(0.3).unwrap();
        let mut s = SufficientStats::empty(1);
        for _ in 0..500 {
            s.update(&obs(&[0.5], 1.0), &scheme).unwrap();
            let exact: f64 = (1..=s.t).map(|j| (j as f64).powf(-0.3)).sum();
            assert_relative_eq!(s.total_weight, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn weight_decay_factor_examples() {
        let a0 = WeightScheme::uniform();
        assert_eq!(weight_decay_factor(1, &a0).unwrap(), 1.0);
        assert_eq!(weight_decay_factor(4, &a0).unwrap(), 0.5);
        let a5 = WeightScheme::new(0.5).unwrap();
        let expected = 1.5f64.sqrt() / (1.0 + 1.0 / 2f64.sqrt());
        assert_relative_eq!(weight_decay_factor(2, &a5).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.7174, epsilon = 1e-4);
        assert!(weight_decay_factor(0, &a0).is_err());
    }

    #[test]
    fn uniform_weight_decay_is_inverse_sqrt() {
        for (j, z) in (1..=10_000u64).zip(WeightDecayFactors::new(WeightScheme::uniform())) {
            assert_relative_eq!(z, 1.0 / (j as f64).sqrt(), max_relative = 1e-14);
        }
    }

    #[test]
    fn running_factors_match_direct_sums() {
        let scheme = WeightScheme::new(0.25).unwrap();
        let running: Vec<f64> = WeightDecayFactors::new(scheme).take(300).collect();
        for j in [1u64, 2, 17, 150, 300] {
            let direct = weight_decay_factor(j, &scheme).unwrap();
            assert_relative_eq!(running[j as usize - 1], direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn fast_regime_keeps_sqrt_j_scaled_factor_bounded() {
        for a in [0.0, 0.25, 0.4] {
            let scheme = WeightScheme::new(a).unwrap();
            let mut max_scaled = 0.0f64;
            for (j, z) in (1..=1_000_000u64).zip(WeightDecayFactors::new(scheme)) {
                max_scaled = max_scaled.max(z * (j as f64).sqrt());
            }
            // (1 - a) / sqrt(1 - 2a) is the limit; the sequence stays below 2.
            assert!(max_scaled < 2.0, "a = {a}: {max_scaled}");
        }
    }

    #[test]
    fn uniform_stats_are_permutation_invariant() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut data: Vec<Observation> = (0..200)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
                obs(&x, StandardNormal.sample(&mut rng))
            })
            .collect();
        let scheme = WeightScheme::uniform();
        let absorb = |d: &[Observation]| {
            let mut s = SufficientStats::empty(4);
            for o in d {
                s.update(o, &scheme).unwrap();
            }
            s
        };
        let a = absorb(&data);
        data.shuffle(&mut rng);
        let b = absorb(&data);
        assert_eq!(a.total_weight, b.total_weight);
        for (x, y) in a.s.as_slice().iter().zip(b.s.as_slice()) {
            assert_relative_eq!(x, y, max_relative = 1e-10, epsilon = 1e-12);
        }
        for (x, y) in a.r.iter().zip(b.r.iter()) {
            assert_relative_eq!(x, y, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn t_dependent_uniform_weights_match_normalized_a0() {
        // w_{t,j} = 1/t gives W_t = 1; a = 0 gives W_t = t. Both must produce
        // the same averaged gradient.
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let p = 5;
        let data: Vec<Observation> = (0..64)
            .map(|_| {
                let x: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
                obs(&x, StandardNormal.sample(&mut rng))
            })
            .collect();
        let mut stats = SufficientStats::empty(p);
        for o in &data {
            stats.update(o, &WeightScheme::uniform()).unwrap();
        }
        let beta = DenseVector::new((0..p).map(|i| 0.1 * i as f64 - 0.2).collect()).unwrap();
        let via_stats = stats.averaged_gradient(&beta).unwrap();

        let t = data.len() as f64;
        let mut via_t_dependent = vec![0.0; p];
        for o in &data {
            let resid = o.x.dot(&beta).unwrap() - o.y;
            for (g, xi) in via_t_dependent.iter_mut().zip(o.x.iter()) {
                *g += (1.0 / t) * xi * resid;
            }
        }
        for (a, b) in via_stats.iter().zip(&via_t_dependent) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn ground_truth_support() {
        let g = GroundTruth::new(DenseVector::new(vec![0.0, 1.5, 0.0, -2.0]).unwrap(), 1.0).unwrap();
        assert_eq!(g.support.iter().copied().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(g.sparsity(), 2);
        assert!(GroundTruth::new(DenseVector::zeros(2), -1.0).is_err());
    }

    #[test]
    fn batch_summary_rejects_empty_and_ragged() {
        assert!(InitialBatchSummary::from_batch(&[], 10, 0).is_err());
        let ragged = [obs(&[1.0, 2.0], 0.0), obs(&[1.0], 0.0)];
        assert!(InitialBatchSummary::from_batch(&ragged, 10, 0).is_err());
    }
}
