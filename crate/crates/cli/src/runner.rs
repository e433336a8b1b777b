//! Replication fan-out over (seed x algorithm x t0).
//!
//! Every work item regenerates its own data from the replication seed, so
//! items share nothing and run in any order. All algorithms under one seed
//! and `t0` see the same truth, batch and stream. Rows are sorted into
//! canonical order before they leave this module.

use std::collections::BTreeMap;
use std::time::Instant;

use olin_core::baselines::{os_lasso_burn_in, os_lasso_step, PooledSample};
use olin_core::metrics::{loglog_slope, CheckpointRow, ErrorField};
use olin_core::olin::{lambda_schedule, OlinEstimator};
use olin_core::simgen::{gen_ground_truth, gen_observation, gen_observations, StreamRng, Substream};
use olin_core::{DenseVector, GroundTruth, Observation, SolverOptions};
use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig, LambdaMode};
use crate::csv_io::{SlopePoint, SweepRow, TrajectoryRecord};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
    /// When false, `wall_ms` is written as 0 so output is reproducible.
    pub wall_clock: bool,
}

/// One concrete method run in an experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arm {
    Olin,
    OsLasso { steps: usize },
    Offline,
}

impl Arm {
    pub fn label(&self) -> String {
        match self {
            Arm::Olin => "olin".to_string(),
            Arm::OsLasso { steps } => format!("os_lasso_k{steps}"),
            Arm::Offline => "offline".to_string(),
        }
    }
}

pub fn arms(config: &ExperimentConfig) -> Vec<Arm> {
    let mut out = Vec::new();
    for alg in &config.algorithms {
        match alg {
            Algorithm::Olin => out.push(Arm::Olin),
            Algorithm::OsLasso => out.extend(config.os_lasso_k.iter().map(|&steps| Arm::OsLasso { steps })),
            Algorithm::Offline => out.push(Arm::Offline),
        }
    }
    out.dedup();
    out
}

/// Rounds at which a row is recorded: multiples of `stride`, plus `rounds`.
pub fn checkpoints(rounds: u64, stride: u64) -> Vec<u64> {
    let mut ts: Vec<u64> = (1..=rounds / stride).map(|k| k * stride).collect();
    if ts.last() != Some(&rounds) {
        ts.push(rounds);
    }
    ts
}

/// The simulated truth for a replication seed.
pub fn replication_truth(config: &ExperimentConfig, seed: u64) -> Result<GroundTruth> {
    let truth_seed = if config.pin_beta_star { config.seeds[0] } else { seed };
    let mut rng = StreamRng::new(truth_seed, Substream::Truth);
    Ok(gen_ground_truth(&config.signal, config.p, config.noise_sd, &mut rng)?)
}

/// The first `t0` draws of the replication's batch substream.
pub fn replication_batch(config: &ExperimentConfig, truth: &GroundTruth, seed: u64, t0: usize) -> Result<Vec<Observation>> {
    let mut rng = StreamRng::new(seed, Substream::Batch);
    Ok(gen_observations(truth, &config.design, t0, &mut rng)?)
}

struct Clock {
    enabled: bool,
    last: Instant,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            last: Instant::now(),
        }
    }

    fn lap_ms(&mut self) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let now = Instant::now();
        let ms = now.duration_since(self.last).as_secs_f64() * 1e3;
        self.last = now;
        ms
    }
}

/// Runs one (seed, arm, t0) trajectory.
pub fn run_item(config: &ExperimentConfig, seed: u64, arm: &Arm, t0: usize, opts: RunOptions) -> Result<Vec<TrajectoryRecord>> {
    let truth = replication_truth(config, seed)?;
    let batch = replication_batch(config, &truth, seed, t0)?;
    let mut stream_rng = StreamRng::new(seed, Substream::Stream);
    let stride = match arm {
        Arm::Offline => config.offline_stride,
        _ => config.checkpoint_stride,
    };
    let marks = checkpoints(config.rounds, stride);
    let mut next_mark = marks.iter().peekable();
    let mut clock = Clock::new(opts.wall_clock);
    let mut rows = Vec::with_capacity(marks.len());
    let label = arm.label();
    let mut record = |row: CheckpointRow| {
        rows.push(TrajectoryRecord {
            seed,
            algorithm: label.clone(),
            t0,
            row,
        })
    };

    let at = |round: u64| {
        move |source| CliError::Replication {
            seed,
            algorithm: arm.label(),
            t0,
            round,
            source,
        }
    };
    match arm {
        Arm::Olin => {
            let mut est = OlinEstimator::fit(&batch, config.olin.clone()).map_err(at(0))?;
            for t in 1..=config.rounds {
                let obs = gen_observation(&truth, &config.design, &mut stream_rng)?;
                match config.lambda_mode {
                    LambdaMode::Schedule => est.step(&obs),
                    LambdaMode::Oracle => est.step_oracle(&obs, &truth),
                }
                .map_err(at(t))?;
                if next_mark.next_if_eq(&&t).is_some() {
                    let st = est.state();
                    record(CheckpointRow::measure(t, &st.beta, &truth, st.lambda, st.solver_iters_last, clock.lap_ms())?);
                }
            }
        }
        Arm::OsLasso { steps } => {
            let lambda0 = olin_core::olin::initial_lambda(t0, config.p, config.os_lasso_lambda0_scale)?;
            let mut state = os_lasso_burn_in(&batch, lambda0, config.os_lasso_eta, *steps).map_err(at(0))?;
            for t in 1..=config.rounds {
                let obs = gen_observation(&truth, &config.design, &mut stream_rng)?;
                os_lasso_step(&mut state, &obs).map_err(at(t))?;
                if next_mark.next_if_eq(&&t).is_some() {
                    record(CheckpointRow::measure(t, &state.beta, &truth, lambda0, *steps as u64, clock.lap_ms())?);
                }
            }
        }
        Arm::Offline => {
            let mut pooled = PooledSample::new(config.p);
            for obs in &batch {
                pooled.push(obs)?;
            }
            let mut warm = DenseVector::zeros(config.p);
            for t in 1..=config.rounds {
                let obs = gen_observation(&truth, &config.design, &mut stream_rng)?;
                pooled.push(&obs)?;
                if next_mark.next_if_eq(&&t).is_some() {
                    let lambda = lambda_schedule(t, config.p, config.olin.lambda_scale)?;
                    let report = pooled.solve(lambda, &warm, SolverOptions::INITIAL).map_err(at(t))?;
                    warm = report.beta.clone();
                    record(CheckpointRow::measure(t, &report.beta, &truth, lambda, report.iterations as u64, clock.lap_ms())?);
                }
            }
        }
    }
    Ok(rows)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config {
            field: "workers".into(),
            message: e.to_string(),
        })
}

/// All trajectories of the experiment, in canonical order.
pub fn run_trajectory(config: &ExperimentConfig, opts: RunOptions) -> Result<Vec<TrajectoryRecord>> {
    let arms = arms(config);
    let mut items = Vec::new();
    for &seed in &config.seeds {
        for arm in &arms {
            for &t0 in &config.t0 {
                items.push((seed, arm.clone(), t0));
            }
        }
    }
    let results: Vec<Result<Vec<TrajectoryRecord>>> = pool(opts.workers)?.install(|| {
        items
            .par_iter()
            .map(|(seed, arm, t0)| run_item(config, *seed, arm, *t0, opts))
            .collect()
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(records)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and sample sd of the final-round MSE per (t0, algorithm).
pub fn summarize_final_mse(records: &[TrajectoryRecord], rounds: u64) -> Vec<SweepRow> {
    let mut groups: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for rec in records.iter().filter(|r| r.row.t == rounds) {
        groups.entry((rec.t0, rec.algorithm.clone())).or_default().push(rec.row.mse);
    }
    groups
        .into_iter()
        .map(|((t0, algorithm), mses)| {
            let (mean_mse, sd_mse) = mean_sd(&mses);
            SweepRow {
                t0,
                algorithm,
                mean_mse,
                sd_mse,
                n_seeds: mses.len(),
            }
        })
        .collect()
}

pub fn run_t0_sweep(config: &ExperimentConfig, opts: RunOptions) -> Result<Vec<SweepRow>> {
    let records = run_trajectory(config, opts)?;
    Ok(summarize_final_mse(&records, config.rounds))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub algorithm: String,
    pub t0: usize,
    pub t_min: u64,
    pub t_max: u64,
    pub slope: f64,
}

/// Averages the l1 error over seeds per (algorithm, t0, t) and fits the
/// log-log slope over `[t_min, t_max]`.
pub fn slope_from_records(records: &[TrajectoryRecord], t_min: u64, t_max: u64) -> Result<(Vec<SlopeReport>, Vec<SlopePoint>)> {
    let mut groups: BTreeMap<(String, usize), BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for rec in records {
        groups
            .entry((rec.algorithm.clone(), rec.t0))
            .or_default()
            .entry(rec.row.t)
            .or_default()
            .push(rec.row.l1_err);
    }
    let mut reports = Vec::new();
    let mut points = Vec::new();
    for ((algorithm, t0), by_t) in groups {
        let rows: Vec<CheckpointRow> = by_t
            .into_iter()
            .filter(|(t, _)| (t_min..=t_max).contains(t))
            .map(|(t, errs)| CheckpointRow {
                t,
                l1_err: errs.iter().sum::<f64>() / errs.len() as f64,
                mse: 0.0,
                support_precision: 0.0,
                support_recall: 0.0,
                lambda: 0.0,
                in_cone: false,
                solver_iters: 0,
                wall_ms: 0.0,
            })
            .collect();
        let slope = loglog_slope(&rows, t_min, t_max, ErrorField::L1)?;
        points.extend(rows.iter().map(|r| SlopePoint {
            algorithm: algorithm.clone(),
            t0,
            t: r.t,
            ln_t: (r.t as f64).ln(),
            ln_mean_l1_err: r.l1_err.ln(),
        }));
        reports.push(SlopeReport {
            algorithm,
            t0,
            t_min,
            t_max,
            slope,
        });
    }
    Ok((reports, points))
}

pub fn run_slope(config: &ExperimentConfig, opts: RunOptions) -> Result<(Vec<SlopeReport>, Vec<SlopePoint>)> {
    let records = run_trajectory(config, opts)?;
    slope_from_records(&records, config.slope_t_min, config.slope_t_max)
}
