//! Travelling-front diagnostics.

use super::sweep::linear_fit_slope;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;

/// Position where `values` first crosses `level`, linearly interpolated
/// between grid points.
pub fn level_crossing(values: &[f64], grid: &Grid1D, level: f64) -> Option<f64> {
    for (k, w) in values.windows(2).enumerate() {
        let (a, b) = (w[0] - level, w[1] - level);
        if a == 0.0 {
            return Some(grid.x(k));
        }
        if a * b < 0.0 {
            let s = a / (a - b);
            return Some(grid.x(k) + s * grid.dx());
        }
    }
    if values.last().is_some_and(|v| *v == level) {
        return Some(grid.x(values.len() - 1));
    }
    None
}

/// Speed of the `level` crossing of species `j`, fitted by least squares over
/// the snapshot times. `Ok(None)` if some snapshot never crosses.
pub fn front_speed(
    snapshots: &[FieldState],
    grid: &Grid1D,
    j: usize,
    level: f64,
) -> Result<Option<f64>> {
    if snapshots.len() < 2 {
        return Err(Error::Domain(format!(
            "front speed needs >= 2 snapshots, got {}",
            snapshots.len()
        )));
    }
    let mut ts = Vec::with_capacity(snapshots.len());
    let mut xs = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        if j >= s.species_count() || s.point_count() != grid.len() {
            return Err(Error::Dimension(format!(
                "snapshot has {} species on {} points; asked for species {j} on {} points",
                s.species_count(),
                s.point_count(),
                grid.len()
            )));
        }
        match level_crossing(s.species(j), grid, level) {
            Some(x) => xs.push(x),
            None => return Ok(None),
        }
        ts.push(s.t());
    }
    linear_fit_slope(&ts, &xs)
        .map(Some)
        .ok_or_else(|| Error::Domain("snapshots share a single time".into()))
}

/// Largest one-sided difference quotient of species `j`.
pub fn max_gradient(state: &FieldState, grid: &Grid1D, j: usize) -> f64 {
    state
        .species(j)
        .windows(2)
        .map(|w| ((w[1] - w[0]) / grid.dx()).abs())
        .fold(0.0, f64::max)
}
