//! Streaming sparse linear regression with the online linearized LASSO.
//!
//! The initial batch supplies a fixed quadratic; every later observation is
//! folded into weighted running sums and enters each round's l1-penalized
//! problem only through a linear correction. Memory stays `O(p^2)` no
//! matter how long the stream runs.
//!
//! Module map:
//! - [`numkit`]: dense vectors, symmetric matrices, soft-thresholding, power iteration
//! - [`datamodel`]: observations, weights, sufficient statistics, estimator state
//! - [`prox`]: monotone FISTA for `1/2 b'Qb - q'b + lambda |b|_1`
//! - [`olin`]: the two-stage online estimator
//! - [`baselines`]: support-projected gradient baseline and offline LASSO
//! - [`simgen`]: seeded synthetic designs
//! - [`metrics`]: error, support, cone and rate diagnostics

pub mod baselines;
pub mod datamodel;
pub mod error;
pub mod metrics;
pub mod numkit;
pub mod olin;
pub mod prox;
pub mod simgen;

pub use baselines::{offline_lasso, os_lasso_burn_in, os_lasso_step, OsLassoState, PooledSample};
pub use datamodel::{
    stats_update, weight_decay_factor, EstimatorState, GroundTruth, InitialBatchSummary, Observation, SufficientStats,
    WeightScheme,
};
pub use error::{Error, Result};
pub use metrics::{cone_check, errors, loglog_slope, restricted_eigen_estimate, support_metrics, CheckpointRow, ErrorField};
pub use numkit::{soft_threshold, spectral_upper_bound, sym_matvec, DenseVector, SymMatrix};
pub use olin::{fit_initial, lambda_schedule, olin_step, oracle_grad_infnorm, OlinConfig, OlinEstimator};
pub use prox::{kkt_residual, solve, CompositeProblem, SolveReport, SolverOptions};
pub use simgen::{gen_covariate, gen_ground_truth, gen_observation, DesignKind, DesignSpec, SignalSpec, StreamRng, Substream};
