//! The online linearized LASSO.
//!
//! Stage one solves the batch LASSO on the initial sample. Each streamed
//! point is then folded into the sufficient statistics and the next estimate
//! solves
//!
//! ```text
//! min_beta  l0(beta) - grad l0(root)^T beta + <(s_t root - r_t) / W_t, beta> + lambda_t ||beta||_1
//! ```
//!
//! with `root` the previous estimate. Up to a constant this is the canonical
//! composite problem with curvature `Q = gram_0` and linear term
//! `q = gram_0 root - (s_t root - r_t) / W_t`, so the curvature never changes
//! and its Lipschitz bound is computed once.

use crate::datamodel::{EstimatorState, GroundTruth, InitialBatchSummary, Observation, SufficientStats, WeightScheme};
use crate::error::{check_dim, invalid, Result};
use crate::numkit::{DenseVector, SymMatrix, DEFAULT_POWER_ITERS};
use crate::prox::{kkt_residual, solve, CompositeProblem, SolveReport, SolverOptions};

/// Seed of the power iteration that bounds the batch Gram spectrum.
const POWER_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct OlinConfig {
    /// `c0` in `lambda_0 = c0 * sqrt(ln p / t0)`.
    pub lambda0_scale: f64,
    /// `c` in `lambda_t = c * sqrt(ln p / t)`.
    pub lambda_scale: f64,
    pub scheme: WeightScheme,
    pub initial_solver: SolverOptions,
    pub online_solver: SolverOptions,
}

impl Default for OlinConfig {
    fn default() -> Self {
        Self {
            lambda0_scale: 1.0,
            lambda_scale: 1.0,
            scheme: WeightScheme::uniform(),
            initial_solver: SolverOptions::INITIAL,
            online_solver: SolverOptions::ONLINE,
        }
    }
}

impl OlinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0_scale > 0.0 && self.lambda0_scale.is_finite()) {
            return Err(invalid("lambda0_scale must be positive"));
        }
        if !(self.lambda_scale > 0.0 && self.lambda_scale.is_finite()) {
            return Err(invalid("lambda_scale must be positive"));
        }
        Ok(())
    }
}

/// `scale * sqrt(ln p / t)` with the natural logarithm.
pub fn lambda_schedule(t: u64, p: usize, scale: f64) -> Result<f64> {
    if t == 0 {
        return Err(invalid("lambda schedule is defined for t >= 1"));
    }
    if p < 2 {
        return Err(invalid(format!("lambda schedule needs p >= 2, got {p}")));
    }
    Ok(scale * ((p as f64).ln() / t as f64).sqrt())
}

/// Initial-stage penalty `lambda0_scale * sqrt(ln p / t0)`.
pub fn initial_lambda(t0: usize, p: usize, lambda0_scale: f64) -> Result<f64> {
    lambda_schedule(t0 as u64, p, lambda0_scale)
}

/// Solves the batch LASSO `min l0(beta) + lambda0 ||beta||_1` from zero.
pub fn batch_lasso(summary: &InitialBatchSummary, lambda0: f64, opts: SolverOptions) -> Result<SolveReport> {
    let problem = CompositeProblem::new(&summary.gram, summary.xty.clone(), lambda0, summary.lipschitz)?;
    solve(&problem, &DenseVector::zeros(summary.dim()), opts)
}

/// Stage one with an explicit `lambda0`.
pub fn fit_initial_with_lambda(batch: &[Observation], lambda0: f64, config: &OlinConfig) -> Result<EstimatorState> {
    config.validate()?;
    let summary = InitialBatchSummary::from_batch(batch, DEFAULT_POWER_ITERS, POWER_SEED)?;
    let report = batch_lasso(&summary, lambda0, config.initial_solver)?;
    let p = summary.dim();
    Ok(EstimatorState {
        beta: report.beta,
        stats: SufficientStats::empty(p),
        batch: summary,
        round: 0,
        lambda: lambda0,
        scheme: config.scheme,
        solver_iters_last: report.iterations as u64,
        solver_converged_last: report.converged,
    })
}

/// Stage one with `lambda0` from [`initial_lambda`].
pub fn fit_initial(batch: &[Observation], config: &OlinConfig) -> Result<EstimatorState> {
    let first = batch.first().ok_or_else(|| invalid("initial batch is empty"))?;
    let lambda0 = initial_lambda(batch.len(), first.dim(), config.lambda0_scale)?;
    fit_initial_with_lambda(batch, lambda0, config)
}

/// Linear term of the round subproblem rooted at `state.beta`:
/// `gram_0 root - (s_t root - r_t) / W_t`.
pub fn round_linear_term(state: &EstimatorState) -> Result<DenseVector> {
    let correction = state.stats.averaged_gradient(&state.beta)?;
    let mut q = vec![0.0; state.dim()];
    state.batch.gram.matvec_into(state.beta.as_slice(), &mut q);
    for (qi, ci) in q.iter_mut().zip(correction.iter()) {
        *qi -= ci;
    }
    Ok(DenseVector::from_raw(q))
}

/// The composite problem for the current round, rooted at `state.beta`.
/// Its curvature is `state.batch.gram` itself.
pub fn round_problem(state: &EstimatorState, lambda: f64) -> Result<CompositeProblem<'_>> {
    CompositeProblem::new(&state.batch.gram, round_linear_term(state)?, lambda, state.batch.lipschitz)
}

/// Folds `obs` into the statistics and advances the round counter. The
/// estimate is left at the previous round's value.
pub fn absorb(state: &mut EstimatorState, obs: &Observation) -> Result<()> {
    check_dim(state.dim(), obs.dim())?;
    state.stats.update(obs, &state.scheme)?;
    state.round = state.stats.t;
    Ok(())
}

/// Solves the round subproblem at penalty `lambda` and installs the result.
/// On non-convergence the best iterate is kept unless its KKT residual is
/// worse than that of the warm start.
pub fn solve_round(state: &mut EstimatorState, lambda: f64, opts: SolverOptions) -> Result<SolveReport> {
    let report = {
        let problem = round_problem(state, lambda)?;
        let report = solve(&problem, &state.beta, opts)?;
        if !report.converged && kkt_residual(&problem, &state.beta)? < report.kkt_residual {
            SolveReport {
                beta: state.beta.clone(),
                ..report
            }
        } else {
            report
        }
    };
    state.beta = report.beta.clone();
    state.lambda = lambda;
    state.solver_iters_last = report.iterations as u64;
    state.solver_converged_last = report.converged;
    Ok(report)
}

/// One round with the production schedule `lambda_t = c sqrt(ln p / t)`.
pub fn olin_step(state: &mut EstimatorState, obs: &Observation, config: &OlinConfig) -> Result<SolveReport> {
    absorb(state, obs)?;
    let lambda = lambda_schedule(state.round, state.dim(), config.lambda_scale)?;
    solve_round(state, lambda, config.online_solver)
}

/// One round with `lambda_t = 2 ||grad L_t(beta*; root)||_inf`. Needs the
/// simulated truth, so it is a diagnostic mode only.
pub fn olin_step_oracle(
    state: &mut EstimatorState,
    obs: &Observation,
    truth: &GroundTruth,
    config: &OlinConfig,
) -> Result<SolveReport> {
    absorb(state, obs)?;
    let lambda = 2.0 * oracle_grad_infnorm(state, truth)?;
    solve_round(state, lambda, config.online_solver)
}

/// `grad L_t(beta*; root) = gram_0 (beta* - root) + (s_t root - r_t) / W_t`
/// for the state after [`absorb`] and before [`solve_round`].
pub fn oracle_gradient(state: &EstimatorState, truth: &GroundTruth) -> Result<DenseVector> {
    if state.round == 0 {
        return Err(invalid("oracle gradient needs at least one absorbed observation"));
    }
    check_dim(state.dim(), truth.dim())?;
    let diff = truth.beta_star.sub(&state.beta)?;
    let mut g = vec![0.0; state.dim()];
    state.batch.gram.matvec_into(diff.as_slice(), &mut g);
    let correction = state.stats.averaged_gradient(&state.beta)?;
    for (gi, ci) in g.iter_mut().zip(correction.iter()) {
        *gi += ci;
    }
    Ok(DenseVector::from_raw(g))
}

pub fn oracle_grad_infnorm(state: &EstimatorState, truth: &GroundTruth) -> Result<f64> {
    Ok(oracle_gradient(state, truth)?.norm_inf())
}

/// Owns a state and its configuration; the usual entry point for a stream.
#[derive(Debug, Clone)]
pub struct OlinEstimator {
    config: OlinConfig,
    state: EstimatorState,
}

impl OlinEstimator {
    pub fn fit(batch: &[Observation], config: OlinConfig) -> Result<Self> {
        let state = fit_initial(batch, &config)?;
        Ok(Self { config, state })
    }

    pub fn fit_with_lambda(batch: &[Observation], lambda0: f64, config: OlinConfig) -> Result<Self> {
        let state = fit_initial_with_lambda(batch, lambda0, &config)?;
        Ok(Self { config, state })
    }

    pub fn step(&mut self, obs: &Observation) -> Result<SolveReport> {
        olin_step(&mut self.state, obs, &self.config)
    }

    pub fn step_oracle(&mut self, obs: &Observation, truth: &GroundTruth) -> Result<SolveReport> {
        olin_step_oracle(&mut self.state, obs, truth, &self.config)
    }

    pub fn beta(&self) -> &DenseVector {
        &self.state.beta
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn config(&self) -> &OlinConfig {
        &self.config
    }

    /// Curvature used by every round's subproblem.
    pub fn curvature(&self) -> &SymMatrix {
        &self.state.batch.gram
    }
}
