//! One-step error sweeps, critical-step detection and order slopes.

use rayon::prelude::*;

use super::reference::{AnchoredReference, ReferenceConfig};
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::norm::rms_diff;
use crate::splitting::{SchemeId, Splitter};

/// Local errors of one step `dt` from a common initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub dt: f64,
    /// `|T - S2|`.
    pub exact_strang: f64,
    /// `|T - S2,eps|`.
    pub exact_shifted: f64,
    /// `|S2 - S2,eps|`.
    pub strang_shifted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    eps: f64,
    rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows must be strictly monotone in `dt`.
    pub fn new(eps: f64, rows: Vec<SweepRow>) -> Result<Self> {
        let inc = rows.windows(2).all(|w| w[0].dt < w[1].dt);
        let dec = rows.windows(2).all(|w| w[0].dt > w[1].dt);
        if !(inc || dec) {
            return Err(Error::Domain(
                "sweep steps must be strictly monotone".into(),
            ));
        }
        Ok(Self { eps, rows })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn rows(&self) -> &[SweepRow] {
        &self.rows
    }

    pub fn exact_strang(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.dt, r.exact_strang)).collect()
    }

    pub fn strang_shifted(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.dt, r.strang_shifted)).collect()
    }

    /// Rows with `lo <= dt <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Vec<SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.dt >= lo && r.dt <= hi)
            .copied()
            .collect()
    }
}

/// For each `dt`, one step of `S2`, `S2,eps` and the reference flow from
/// `u0`. Norms are those of the error estimate: rms over each monitored
/// species relative to its rms in `u0`, maximized over species.
pub fn local_error_sweep(
    sp: &Splitter,
    u0: &FieldState,
    dts: &[f64],
    eps: f64,
    reference: &ReferenceConfig,
) -> Result<SweepResult> {
    if dts.is_empty() || dts.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::Domain(
            "sweep steps must be positive and finite".into(),
        ));
    }
    if !(eps.abs() < 0.5) {
        return Err(Error::Domain(format!(
            "sweep shift must satisfy |eps| < 1/2, got {eps}"
        )));
    }
    let a = sp.anchor(u0)?;
    let n = sp.grid().len();
    let mon = sp.model().monitored().to_vec();
    let scale: Vec<f64> = mon.iter().map(|&j| a.rms[j].max(sp.norm().floor)).collect();
    let dist = |x: &[f64], y: &[f64]| {
        mon.iter()
            .zip(&scale)
            .map(|(&j, s)| rms_diff(&x[j * n..(j + 1) * n], &y[j * n..(j + 1) * n]) / s)
            .fold(0.0, f64::max)
    };

    let mut order: Vec<usize> = (0..dts.len()).collect();
    order.sort_by(|&i, &j| dts[i].total_cmp(&dts[j]));
    let mut exact = vec![Vec::new(); dts.len()];
    let mut r = AnchoredReference::new(sp.model(), sp.grid(), u0, *reference)?;
    for &i in &order {
        r.advance_to(u0.t() + dts[i])?;
        exact[i] = r.increment();
    }

    let strang = SchemeId::strang2();
    let shifted = if eps == 0.0 {
        SchemeId::strang2()
    } else {
        SchemeId::strang2_shifted(eps)?
    };
    let rows = dts
        .par_iter()
        .zip(exact.par_iter())
        .map(|(&dt, t)| {
            let mut s = vec![0.0; a.values.len()];
            sp.scheme_anchored(&strang, &a, &mut s, a.t, dt)?;
            let mut se = vec![0.0; a.values.len()];
            sp.scheme_anchored(&shifted, &a, &mut se, a.t, dt)?;
            Ok(SweepRow {
                dt,
                exact_strang: dist(t, &s),
                exact_shifted: dist(t, &se),
                strang_shifted: dist(&s, &se),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SweepResult::new(eps, rows)
}

/// Step where `|T - S2|` overtakes `|S2 - S2,eps|`, interpolated in log-log
/// coordinates between the bracketing rows. `None` without a crossing.
pub fn measure_dt_star(sweep: &SweepResult) -> Option<f64> {
    let mut rows = sweep.rows.clone();
    rows.sort_by(|a, b| a.dt.total_cmp(&b.dt));
    let gap = |r: &SweepRow| (r.exact_strang / r.strang_shifted).ln();
    for w in rows.windows(2) {
        let (g0, g1) = (gap(&w[0]), gap(&w[1]));
        if !(g0.is_finite() && g1.is_finite()) {
            continue;
        }
        if g0 <= 0.0 && g1 > 0.0 {
            let (l0, l1) = (w[0].dt.ln(), w[1].dt.ln());
            return Some((l0 + (l1 - l0) * g0 / (g0 - g1)).exp());
        }
    }
    None
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn order_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "order slope needs >= 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::Domain(
            "order slope needs positive finite values".into(),
        ));
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    linear_fit_slope(&lx, &ly).ok_or_else(|| Error::Domain("degenerate abscissae".into()))
}

/// Slope of the least-squares line through `(x, y)`; `None` if all `x` agree.
pub(crate) fn linear_fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 1e-300 * n {
        return None;
    }
    Some(sxy / sxx)
}
