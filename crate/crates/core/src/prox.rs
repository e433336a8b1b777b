//! Accelerated proximal gradient for
//! `min_beta 1/2 beta^T Q beta - q^T beta + lambda ||beta||_1`.
//!
//! The iteration is monotone FISTA: a candidate whose objective exceeds the
//! current iterate is rejected and the momentum sequence restarts, so the
//! objective of the tracked iterate never increases. Termination is decided
//! on the KKT residual of the tracked iterate.

use crate::error::{check_dim, invalid, Result};
use crate::numkit::{dot, soft_scalar, DenseVector, SymMatrix, MIN_LIPSCHITZ};

/// A composite quadratic-plus-l1 problem. `quad` is borrowed so that a
/// caller can reuse one curvature matrix across many solves.
#[derive(Debug, Clone)]
pub struct CompositeProblem<'a> {
    pub quad: &'a SymMatrix,
    pub linear: DenseVector,
    pub lambda: f64,
    pub lipschitz: f64,
}

impl<'a> CompositeProblem<'a> {
    /// Validates inputs; a non-positive Lipschitz bound is floored at
    /// [`MIN_LIPSCHITZ`].
    pub fn new(quad: &'a SymMatrix, linear: DenseVector, lambda: f64, lipschitz: f64) -> Result<Self> {
        check_dim(quad.dim(), linear.len())?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !lipschitz.is_finite() {
            return Err(invalid("lipschitz bound is not finite"));
        }
        if !quad.is_finite() || !linear.is_finite() {
            return Err(invalid("problem data is not finite"));
        }
        Ok(Self {
            quad,
            linear,
            lambda,
            lipschitz: lipschitz.max(MIN_LIPSCHITZ),
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, beta: &DenseVector) -> Result<f64> {
        check_dim(self.dim(), beta.len())?;
        let mut qb = vec![0.0; self.dim()];
        self.quad.matvec_into(beta.as_slice(), &mut qb);
        Ok(self.objective_with(beta.as_slice(), &qb))
    }

    fn objective_with(&self, beta: &[f64], q_beta: &[f64]) -> f64 {
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        0.5 * dot(beta, q_beta) - dot(self.linear.as_slice(), beta) + self.lambda * l1
    }

    fn kkt_with(&self, beta: &[f64], q_beta: &[f64]) -> f64 {
        let lambda = self.lambda;
        beta.iter()
            .zip(q_beta)
            .zip(self.linear.iter())
            .fold(0.0f64, |worst, ((&b, &qb), &q)| {
                let g = qb - q;
                let v = if b > 0.0 {
                    (g + lambda).abs()
                } else if b < 0.0 {
                    (g - lambda).abs()
                } else {
                    (g.abs() - lambda).max(0.0)
                };
                worst.max(v)
            })
    }
}

/// Iteration controls for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverOptions {
    /// Cold start on the initial batch.
    pub const INITIAL: Self = Self {
        tol: 1e-8,
        max_iter: 5000,
    };
    /// Warm-started online rounds.
    pub const ONLINE: Self = Self {
        tol: 1e-7,
        max_iter: 500,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub beta: DenseVector,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub objective: f64,
}

/// Maximal coordinatewise violation of the l1 subgradient conditions at `beta`.
pub fn kkt_residual(problem: &CompositeProblem<'_>, beta: &DenseVector) -> Result<f64> {
    check_dim(problem.dim(), beta.len())?;
    let mut qb = vec![0.0; problem.dim()];
    problem.quad.matvec_into(beta.as_slice(), &mut qb);
    Ok(problem.kkt_with(beta.as_slice(), &qb))
}

/// Runs monotone FISTA from `init`. Hitting `max_iter` is not an error; the
/// report then carries `converged = false` and the best iterate found.
pub fn solve(problem: &CompositeProblem<'_>, init: &DenseVector, opts: SolverOptions) -> Result<SolveReport> {
    check_dim(problem.dim(), init.len())?;
    if !init.is_finite() {
        return Err(invalid("initial point is not finite"));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(invalid(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(invalid("max_iter must be >= 1"));
    }

    let p = problem.dim();
    let step = 1.0 / problem.lipschitz;
    let thresh = problem.lambda * step;
    let q = problem.linear.as_slice();

    let mut x = init.as_slice().to_vec();
    let mut qx = vec![0.0; p];
    problem.quad.matvec_into(&x, &mut qx);
    let mut fx = problem.objective_with(&x, &qx);
    let mut kkt = problem.kkt_with(&x, &qx);

    let mut y = x.clone();
    let mut qy = qx.clone();
    let mut x_prev = x.clone();
    let mut z = vec![0.0; p];
    let mut qz = vec![0.0; p];
    let mut momentum = 1.0f64;
    let mut restarted = true;
    let mut iterations = 0;

    while kkt > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        for i in 0..p {
            z[i] = soft_scalar(y[i] - step * (qy[i] - q[i]), thresh);
        }
        problem.quad.matvec_into(&z, &mut qz);
        let fz = problem.objective_with(&z, &qz);

        // A plain prox-gradient step from the tracked iterate cannot increase
        // the objective for lipschitz >= lambda_max(Q); any increase there
        // is rounding noise near the optimum.
        if fz <= fx || restarted {
            restarted = false;
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            std::mem::swap(&mut x_prev, &mut x);
            std::mem::swap(&mut x, &mut z);
            std::mem::swap(&mut qx, &mut qz);
            // qz now holds Q x_prev
            for i in 0..p {
                y[i] = x[i] + beta * (x[i] - x_prev[i]);
                qy[i] = qx[i] + beta * (qx[i] - qz[i]);
            }
            momentum = next_momentum;
            fx = fz;
            kkt = problem.kkt_with(&x, &qx);
        } else {
            // Reject and restart from the tracked iterate.
            momentum = 1.0;
            restarted = true;
            y.copy_from_slice(&x);
            qy.copy_from_slice(&qx);
            x_prev.copy_from_slice(&x);
        }
    }

    Ok(SolveReport {
        beta: DenseVector::from_raw(x),
        iterations,
        kkt_residual: kkt,
        converged: kkt <= opts.tol,
        objective: fx,
    })
}
