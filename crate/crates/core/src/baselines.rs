//! Comparison methods: the two-phase support-projected gradient baseline
//! (`OS_LASSO_K`) and the pooled offline LASSO.

use std::collections::BTreeSet;

use crate::datamodel::{InitialBatchSummary, Observation};
use crate::error::{check_dim, invalid, Result};
use crate::numkit::{dot, DenseVector, SymMatrix, DEFAULT_POWER_ITERS};
use crate::prox::{solve, CompositeProblem, SolveReport, SolverOptions};

/// Coordinates with `|beta_i|` above this count as selected after burn-in.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Default step size of the projected gradient steps.
pub const DEFAULT_ETA: f64 = 0.001;

const POWER_SEED: u64 = 0x0b5;

#[derive(Debug, Clone, PartialEq)]
pub struct OsLassoState {
    pub beta: DenseVector,
    support: BTreeSet<usize>,
    mask: Vec<bool>,
    pub eta: f64,
    pub steps: usize,
    pub lambda0: f64,
}

impl OsLassoState {
    /// Support frozen at burn-in.
    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }
}

/// Burn-in: batch LASSO at `lambda0`, then freeze the selected coordinates.
pub fn os_lasso_burn_in(batch: &[Observation], lambda0: f64, eta: f64, steps: usize) -> Result<OsLassoState> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid(format!("step size must be positive, got {eta}")));
    }
    if steps == 0 {
        return Err(invalid("steps per observation must be >= 1"));
    }
    let summary = InitialBatchSummary::from_batch(batch, DEFAULT_POWER_ITERS, POWER_SEED)?;
    let report = crate::olin::batch_lasso(&summary, lambda0, SolverOptions::INITIAL)?;
    let mask: Vec<bool> = report.beta.iter().map(|b| b.abs() > SUPPORT_THRESHOLD).collect();
    let support = mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect();
    let beta = report
        .beta
        .iter()
        .zip(&mask)
        .map(|(b, m)| if *m { *b } else { 0.0 })
        .collect();
    Ok(OsLassoState {
        beta: DenseVector::from_raw(beta),
        support,
        mask,
        eta,
        steps,
        lambda0,
    })
}

/// `steps` repetitions of `beta <- P_S0(beta - eta * x (x^T beta - y))`.
pub fn os_lasso_step(state: &mut OsLassoState, obs: &Observation) -> Result<()> {
    check_dim(state.dim(), obs.dim())?;
    let x = obs.x.as_slice();
    for _ in 0..state.steps {
        let resid = dot(x, state.beta.as_slice()) - obs.y;
        let scale = state.eta * resid;
        for ((b, xi), keep) in state.beta.as_mut_slice().iter_mut().zip(x).zip(&state.mask) {
            *b = if *keep { *b - scale * xi } else { 0.0 };
        }
    }
    Ok(())
}

/// Pooled sums for the offline LASSO. Retains the raw sample count only;
/// the Gram and cross-moment are accumulated incrementally.
#[derive(Debug, Clone)]
pub struct PooledSample {
    gram: SymMatrix,
    xty: Vec<f64>,
    n: usize,
}

impl PooledSample {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: SymMatrix::zeros(dim),
            xty: vec![0.0; dim],
            n: 0,
        }
    }

    pub fn push(&mut self, obs: &Observation) -> Result<()> {
        check_dim(self.xty.len(), obs.dim())?;
        self.gram.rank_one_update(1.0, obs.x.as_slice())?;
        for (acc, xi) in self.xty.iter_mut().zip(obs.x.iter()) {
            *acc += xi * obs.y;
        }
        self.n += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Minimizes the pooled averaged squared loss plus `lambda ||beta||_1`.
    pub fn solve(&self, lambda: f64, init: &DenseVector, opts: SolverOptions) -> Result<SolveReport> {
        if self.n == 0 {
            return Err(invalid("pooled sample is empty"));
        }
        let inv_n = 1.0 / self.n as f64;
        let quad = self.gram.scaled(inv_n);
        let linear = DenseVector::from_raw(self.xty.iter().map(|v| v * inv_n).collect());
        let lipschitz = crate::numkit::spectral_upper_bound(&quad, DEFAULT_POWER_ITERS, POWER_SEED)?;
        let problem = CompositeProblem::new(&quad, linear, lambda, lipschitz)?;
        solve(&problem, init, opts)
    }
}

/// Offline LASSO on the initial batch pooled with the first `t` streamed
/// points, all weighted equally.
pub fn offline_lasso(initial_batch: &[Observation], stream_prefix: &[Observation], lambda: f64) -> Result<DenseVector> {
    let dim = initial_batch
        .first()
        .or_else(|| stream_prefix.first())
        .ok_or_else(|| invalid("pooled sample is empty"))?
        .dim();
    let mut pooled = PooledSample::new(dim);
    for obs in initial_batch.iter().chain(stream_prefix) {
        pooled.push(obs)?;
    }
    Ok(pooled.solve(lambda, &DenseVector::zeros(dim), SolverOptions::INITIAL)?.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::olin::{fit_initial_with_lambda, OlinConfig};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn obs(x: &[f64], y: f64) -> Observation {
        Observation::new(DenseVector::new(x.to_vec()).unwrap(), y).unwrap()
    }

    fn gaussian_obs(rng: &mut ChaCha8Rng, beta: &[f64], noise: f64) -> Observation {
        let x: Vec<f64> = beta.iter().map(|_| StandardNormal.sample(rng)).collect();
        let eps: f64 = StandardNormal.sample(rng);
        obs(&x, dot(&x, beta) + noise * eps)
    }

    #[test]
    fn burn_in_with_huge_lambda_selects_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch: Vec<Observation> = (0..20).map(|_| gaussian_obs(&mut rng, &[1.0, 0.5, 0.0], 0.2)).collect();
        let summary = InitialBatchSummary::from_batch(&batch, 100, 0).unwrap();
        let mut st = os_lasso_burn_in(&batch, 10.0 * summary.xty.norm_inf(), DEFAULT_ETA, 1).unwrap();
        assert!(st.support().is_empty());
        assert_eq!(st.beta, DenseVector::zeros(3));
        for _ in 0..10 {
            os_lasso_step(&mut st, &gaussian_obs(&mut rng, &[1.0, 0.5, 0.0], 0.2)).unwrap();
            assert_eq!(st.beta, DenseVector::zeros(3));
        }
    }

    #[test]
    fn burn_in_single_observation() {
        let st = os_lasso_burn_in(&[obs(&[1.0, 0.0], 2.0)], 0.5, DEFAULT_ETA, 1).unwrap();
        assert_eq!(st.support().iter().copied().collect::<Vec<_>>(), vec![0]);
        assert!((st.beta[0] - 1.5).abs() < 1e-8);
        assert_eq!(st.beta[1], 0.0);
    }

    #[test]
    fn burn_in_covers_strong_support_on_noiseless_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let mut beta_star = vec![0.0; 10];
        beta_star[..3].copy_from_slice(&[2.0, -1.5, 1.8]);
        let batch: Vec<Observation> = (0..30).map(|_| gaussian_obs(&mut rng, &beta_star, 0.0)).collect();
        // Oracle: exact least squares recovers beta* on a noiseless full-rank
        // batch; thresholding it reproduces the true support.
        let ls_support: BTreeSet<usize> = beta_star
            .iter()
            .enumerate()
            .filter(|(_, b)| b.abs() > 0.05)
            .map(|(i, _)| i)
            .collect();
        let st = os_lasso_burn_in(&batch, 0.05, DEFAULT_ETA, 1).unwrap();
        assert!(st.support().is_superset(&ls_support));
    }

    #[test]
    fn step_hand_example() {
        let mut st = os_lasso_burn_in(&[obs(&[1.0, 0.0], 2.0)], 0.5, 0.5, 1).unwrap();
        st.beta = DenseVector::zeros(2);
        os_lasso_step(&mut st, &obs(&[1.0, 1.0], 1.0)).unwrap();
        assert_eq!(st.beta.as_slice(), &[0.5, 0.0]);
    }

    #[test]
    fn step_at_interpolant_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beta_star = [1.0, -2.0, 0.0, 0.0];
        let batch: Vec<Observation> = (0..40).map(|_| gaussian_obs(&mut rng, &beta_star, 0.0)).collect();
        let mut st = os_lasso_burn_in(&batch, 0.01, 0.01, 20).unwrap();
        let mut exact = vec![0.0; 4];
        for &i in st.support() {
            exact[i] = beta_star[i];
        }
        st.beta = DenseVector::new(exact.clone()).unwrap();
        os_lasso_step(&mut st, &gaussian_obs(&mut rng, &beta_star, 0.0)).unwrap();
        assert_eq!(st.beta.as_slice(), exact.as_slice());
    }

    #[test]
    fn steps_keep_support_and_decrease_point_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let beta_star = [0.6, 0.0, -0.4, 0.0, 0.0, 0.3];
        let batch: Vec<Observation> = (0..15).map(|_| gaussian_obs(&mut rng, &beta_star, 1.0)).collect();
        let mut st = os_lasso_burn_in(&batch, 0.2, 0.01, 20).unwrap();
        let off: Vec<usize> = (0..6).filter(|i| !st.support().contains(i)).collect();
        for _ in 0..200 {
            let o = gaussian_obs(&mut rng, &beta_star, 1.0);
            assert!(st.eta < 1.0 / dot(o.x.as_slice(), o.x.as_slice()));
            let mut prev = 0.5 * (o.y - dot(o.x.as_slice(), st.beta.as_slice())).powi(2);
            let steps = st.steps;
            st.steps = 1;
            for _ in 0..steps {
                os_lasso_step(&mut st, &o).unwrap();
                let h = 0.5 * (o.y - dot(o.x.as_slice(), st.beta.as_slice())).powi(2);
                assert!(h <= prev + 1e-15);
                prev = h;
            }
            st.steps = steps;
            for &i in &off {
                assert_eq!(st.beta[i].to_bits(), 0.0f64.to_bits());
            }
        }
    }

    #[test]
    fn offline_zero_when_lambda_huge() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batch: Vec<Observation> = (0..10).map(|_| gaussian_obs(&mut rng, &[1.0, 1.0], 0.1)).collect();
        let stream: Vec<Observation> = (0..10).map(|_| gaussian_obs(&mut rng, &[1.0, 1.0], 0.1)).collect();
        assert_eq!(offline_lasso(&batch, &stream, 1e6).unwrap(), DenseVector::zeros(2));
        assert!(offline_lasso(&[], &[], 0.1).is_err());
    }

    #[test]
    fn offline_with_empty_prefix_matches_initial_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let beta_star = [0.5, 0.0, -0.3, 0.8];
        let batch: Vec<Observation> = (0..25).map(|_| gaussian_obs(&mut rng, &beta_star, 0.5)).collect();
        let off = offline_lasso(&batch, &[], 0.07).unwrap();
        let state = fit_initial_with_lambda(&batch, 0.07, &OlinConfig::default()).unwrap();
        assert!(off.sub(&state.beta).unwrap().norm_inf() < 1e-8);
    }

    #[test]
    fn offline_matches_grid_in_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let beta_star = [0.7, -0.4];
        let data: Vec<Observation> = (0..30).map(|_| gaussian_obs(&mut rng, &beta_star, 0.3)).collect();
        let (batch, stream) = data.split_at(10);
        let beta = offline_lasso(batch, stream, 0.1).unwrap();
        let n = data.len() as f64;
        let objective = |b: [f64; 2]| {
            let loss: f64 = data.iter().map(|o| 0.5 * (o.y - o.x[0] * b[0] - o.x[1] * b[1]).powi(2)).sum();
            loss / n + 0.1 * (b[0].abs() + b[1].abs())
        };
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        let h = 1e-3;
        for i in -2000..=2000 {
            for j in -2000..=2000 {
                let b = [i as f64 * h, j as f64 * h];
                let f = objective(b);
                if f < best.0 {
                    best = (f, b);
                }
            }
        }
        assert!((beta[0] - best.1[0]).abs() <= 2e-3 && (beta[1] - best.1[1]).abs() <= 2e-3);
    }

    #[test]
    fn offline_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let beta_star = [0.5, 0.0, -0.3, 0.8, 0.0];
        let batch: Vec<Observation> = (0..20).map(|_| gaussian_obs(&mut rng, &beta_star, 0.5)).collect();
        let mut stream: Vec<Observation> = (0..60).map(|_| gaussian_obs(&mut rng, &beta_star, 0.5)).collect();
        let a = offline_lasso(&batch, &stream, 0.05).unwrap();
        stream.shuffle(&mut rng);
        let b = offline_lasso(&batch, &stream, 0.05).unwrap();
        assert!(a.sub(&b).unwrap().norm_inf() < 1e-7);
    }
}
