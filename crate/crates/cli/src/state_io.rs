//! Binary snapshots of estimator state.

use olin_core::EstimatorState;

use crate::error::{CliError, Result};

pub fn encode_state(state: &EstimatorState) -> Result<Vec<u8>> {
    bincode::serialize(state).map_err(|e| CliError::Encoding(e.to_string()))
}

pub fn decode_state(bytes: &[u8]) -> Result<EstimatorState> {
    bincode::deserialize(bytes).map_err(|e| CliError::Encoding(e.to_string()))
}
