//! Shared fixtures for the benchmark suite.

use std::collections::BTreeMap;

use entgroups::state::{named_state_defaults, PureState};

/// Builds one of the named example states with its default parameters.
pub fn fixture(name: &str) -> PureState {
    let params: BTreeMap<String, f64> = named_state_defaults(name)
        .expect("fixture name should be known")
        .into_iter()
        .collect();
    entgroups::state::named_state(name, &params).expect("fixture should construct")
}
