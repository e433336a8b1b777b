//! Fixtures shared by the benchmarks.

use olin_core::simgen::{gen_ground_truth, gen_observations, DesignSpec, SignalSpec, StreamRng, Substream};
use olin_core::{GroundTruth, Observation, OlinConfig, OlinEstimator};

/// A Toeplitz design with a strong sparse signal, plus `n` observations.
pub struct Fixture {
    pub truth: GroundTruth,
    pub data: Vec<Observation>,
}

impl Fixture {
    pub fn new(p: usize, s: usize, n: usize, seed: u64) -> Self {
        let design = DesignSpec::toeplitz(p, 0.5).expect("valid rho");
        let truth = gen_ground_truth(&SignalSpec::strong(s), p, 1.0, &mut StreamRng::new(seed, Substream::Truth))
            .expect("valid signal");
        let data = gen_observations(&truth, &design, n, &mut StreamRng::new(seed, Substream::Batch)).expect("finite data");
        Self { truth, data }
    }

    /// An estimator fitted on the first `t0` observations.
    pub fn estimator(&self, t0: usize) -> OlinEstimator {
        OlinEstimator::fit(&self.data[..t0], OlinConfig::default()).expect("fit")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_reproducible() {
        let a = Fixture::new(20, 3, 50, 9);
        let b = Fixture::new(20, 3, 50, 9);
        assert_eq!(a.data, b.data);
        assert_eq!(a.estimator(40).beta(), b.estimator(40).beta());
    }
}
