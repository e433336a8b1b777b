use olin_core::baselines::{offline_lasso, os_lasso_burn_in, os_lasso_step, PooledSample};
use olin_core::olin::{initial_lambda, oracle_grad_infnorm};
use olin_core::simgen::gen_observations;
use olin_core::{
    cone_check, gen_ground_truth, DenseVector, DesignSpec, OlinConfig, OlinEstimator, SignalSpec, SolverOptions,
    StreamRng, Substream,
};

fn scenario(p: usize, s: usize, n: usize, seed: u64) -> (olin_core::GroundTruth, Vec<olin_core::Observation>) {
    let design = DesignSpec::toeplitz(p, 0.5).unwrap();
    let truth = gen_ground_truth(&SignalSpec::strong(s), p, 1.0, &mut StreamRng::new(seed, Substream::Truth)).unwrap();
    let data = gen_observations(&truth, &design, n, &mut StreamRng::new(seed, Substream::Batch)).unwrap();
    (truth, data)
}

#[test]
fn oracle_penalty_keeps_the_error_in_the_cone() {
    let (truth, data) = scenario(40, 4, 400, 1);
    let mut est = OlinEstimator::fit(&data[..200], OlinConfig::default()).unwrap();
    for obs in &data[200..] {
        est.step_oracle(obs, &truth).unwrap();
        assert!(cone_check(est.beta(), &truth).unwrap());
        assert!(est.state().lambda > 0.0);
    }
    let mut probe = est.state().clone();
    olin_core::olin::absorb(&mut probe, &data[0]).unwrap();
    assert!(oracle_grad_infnorm(&probe, &truth).unwrap().is_finite());
}

#[test]
fn pooled_sample_agrees_with_the_offline_solve() {
    let (_, data) = scenario(15, 3, 120, 2);
    let lambda = 0.05;
    let direct = offline_lasso(&data[..80], &data[80..], lambda).unwrap();
    let mut pooled = PooledSample::new(15);
    for obs in &data {
        pooled.push(obs).unwrap();
    }
    let rep = pooled.solve(lambda, &DenseVector::zeros(15), SolverOptions::INITIAL).unwrap();
    assert!(rep.converged);
    let gap = direct.sub(&rep.beta).unwrap().norm_inf();
    assert!(gap < 1e-6, "gap {gap}");
}

#[test]
fn os_lasso_stays_on_its_burn_in_support() {
    let (truth, data) = scenario(30, 3, 300, 3);
    let lambda0 = initial_lambda(100, 30, 1.0).unwrap();
    let mut st = os_lasso_burn_in(&data[..100], lambda0, 0.001, 5).unwrap();
    let support = st.support().clone();
    for obs in &data[100..] {
        os_lasso_step(&mut st, obs).unwrap();
    }
    for (i, b) in st.beta.iter().enumerate() {
        if !support.contains(&i) {
            assert_eq!(*b, 0.0);
        }
    }
    assert!(st.beta.sub(&truth.beta_star).unwrap().norm_l2().is_finite());
}
