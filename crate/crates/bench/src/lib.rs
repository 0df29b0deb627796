//! Shared fixtures for the solver benchmarks.

use nlc_core::state::base_profile;
use nlc_core::{well_prepared_initial_data, CompressibleState, Grid, ModelParams, Preparation};

/// Well-prepared Taylor-Green state on an `m × m` grid.
pub fn prepared_state(m: usize, lambda: f64) -> CompressibleState {
    let g = Grid::uniform(2, m).expect("grid");
    let params = ModelParams {
        lambda,
        ..Default::default()
    };
    let (u0, n0) = base_profile(&g, "taylor_green").expect("profile");
    well_prepared_initial_data(&g, params, Preparation::default(), &u0, &n0).expect("initial data")
}
