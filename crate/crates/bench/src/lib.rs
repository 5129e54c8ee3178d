//! Fixtures shared by the benchmarks.

use adasplit::models::{bz, kpp};
use adasplit::{FieldState, ReactionSolverConfig, Splitter};

/// KPP front with `k = D = 1` on `n` points.
pub fn kpp_fixture(n: usize) -> (Splitter, FieldState) {
    let p = kpp::KppParams {
        n,
        ..Default::default()
    };
    let grid = p.grid().expect("valid grid");
    let sp = Splitter::new(
        kpp::model(&p).expect("valid model"),
        grid.clone(),
        ReactionSolverConfig::default(),
    )
    .expect("valid splitter");
    let u0 = kpp::initial_state(&p, &grid, 0.0).expect("valid state");
    (sp, u0)
}

/// BZ excitation on `n` points.
pub fn bz_fixture(n: usize) -> (Splitter, FieldState) {
    let p = bz::BzParams {
        n,
        ..Default::default()
    };
    let grid = p.grid().expect("valid grid");
    let sp = Splitter::new(
        bz::model(&p).expect("valid model"),
        grid.clone(),
        ReactionSolverConfig::default(),
    )
    .expect("valid splitter");
    let u0 = bz::initial_state(&p, &grid).expect("valid state");
    (sp, u0)
}
