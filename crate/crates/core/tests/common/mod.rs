#![allow(dead_code)]

use std::sync::Arc;

use adasplit::models::{bz, discharge, kpp};
use adasplit::{FieldState, Grid1D, ReactionSolverConfig, Splitter};

pub fn kpp_case(
    k: f64,
    d: f64,
    x_min: f64,
    x_max: f64,
    n: usize,
) -> (Splitter, FieldState, kpp::KppParams) {
    let p = kpp::KppParams {
        k,
        d,
        x_min,
        x_max,
        n,
    };
    let grid = p.grid().unwrap();
    let sp = Splitter::new(
        kpp::model(&p).unwrap(),
        grid.clone(),
        ReactionSolverConfig::default(),
    )
    .unwrap();
    let u0 = kpp::initial_state(&p, &grid, 0.0).unwrap();
    (sp, u0, p)
}

pub fn bz_case(n: usize) -> (Splitter, FieldState) {
    let p = bz::BzParams {
        n,
        ..Default::default()
    };
    let grid = p.grid().unwrap();
    let sp = Splitter::new(
        bz::model(&p).unwrap(),
        grid.clone(),
        ReactionSolverConfig::default(),
    )
    .unwrap();
    let u0 = bz::initial_state(&p, &grid).unwrap();
    (sp, u0)
}

pub fn discharge_case(
    n: usize,
    periods: usize,
) -> (
    Splitter,
    FieldState,
    discharge::DischargeParams,
    Arc<discharge::Discharge>,
) {
    let p = discharge::DischargeParams {
        n,
        ..Default::default()
    };
    let t_end = periods as f64 * p.period;
    let grid: Grid1D = p.grid().unwrap();
    let (model, r) = discharge::model(&p, t_end).unwrap();
    let sp = Splitter::new(model, grid.clone(), ReactionSolverConfig::default()).unwrap();
    let u0 = discharge::initial_state(&p, &grid).unwrap();
    (sp, u0, p, r)
}

/// `count` points spaced evenly in `log` between `lo` and `hi`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
