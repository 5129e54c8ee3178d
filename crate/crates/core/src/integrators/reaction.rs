//! Pointwise stiff reaction map `Y^tau`.

use rayon::prelude::*;

use super::linalg::{dense_lu, dense_solve};
use super::rosenbrock::{integrate, RosFailure, RosOptions, RosWork, StiffSystem};
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::model::{ModelSpec, Reaction};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct ReactionSolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_substeps: usize,
}

impl Default for ReactionSolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_substeps: 100_000,
        }
    }
}

impl ReactionSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Config(format!(
                "solver tolerances must be > 0 (rtol {}, atol {})",
                self.rtol, self.atol
            )));
        }
        if self.max_substeps == 0 {
            return Err(Error::Config("max_substeps must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn options(&self) -> RosOptions {
        RosOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_substeps,
        }
    }
}

/// Which per-point system a set of rows represents.
#[derive(Debug, Clone, Copy)]
pub(crate) enum PointKind<'a> {
    /// All `m` species.
    Full,
    /// Monitored species only; excluded species read from `filler` (`m x n`).
    Subset { filler: &'a [f64] },
    /// `m` species followed by the monitored species of a second branch.
    Stacked,
}

#[derive(Default)]
struct PointBufs {
    y: Vec<f64>,
    yfull: Vec<f64>,
    rates: Vec<f64>,
    jfull: Vec<f64>,
    jac: Vec<f64>,
    lu: Vec<f64>,
    piv: Vec<usize>,
    lu2: Vec<f64>,
    piv2: Vec<usize>,
}

struct PointSys<'a> {
    reaction: &'a dyn Reaction,
    monitored: &'a [usize],
    stacked: bool,
    subset: bool,
    t: f64,
    x: f64,
    m: usize,
    dim: usize,
    anchor: &'a [f64],
    filler: &'a [f64],
    b: &'a mut PointBufs,
}

impl PointSys<'_> {
    /// Fills `b.yfull` with the state seen by the monitored sub-block.
    fn load_sub(&mut self, delta: &[f64], offset: usize) {
        let l = self.monitored.len();
        if self.subset {
            self.b.yfull.copy_from_slice(self.filler);
        } else {
            for i in 0..self.m {
                self.b.yfull[i] = self.anchor[i] + delta[i];
            }
        }
        for r in 0..l {
            self.b.yfull[self.monitored[r]] = self.anchor[offset + r] + delta[offset + r];
        }
    }
}

impl StiffSystem for PointSys<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn anchor(&self) -> &[f64] {
        self.anchor
    }

    fn rhs(&mut self, delta: &[f64], out: &mut [f64]) {
        let m = self.m;
        if self.subset {
            self.load_sub(delta, 0);
            self.reaction
                .rates(self.t, self.x, &self.b.yfull, &mut self.b.rates);
            for (r, &j) in self.monitored.iter().enumerate() {
                out[r] = self.b.rates[j];
            }
            return;
        }
        for i in 0..m {
            self.b.y[i] = self.anchor[i] + delta[i];
        }
        self.reaction
            .rates(self.t, self.x, &self.b.y[..m], &mut out[..m]);
        if self.stacked {
            self.load_sub(delta, m);
            self.reaction
                .rates(self.t, self.x, &self.b.yfull, &mut self.b.rates);
            for (r, &j) in self.monitored.iter().enumerate() {
                out[m + r] = self.b.rates[j];
            }
        }
    }

    fn jacobian(&mut self, delta: &[f64]) {
        let (m, dim) = (self.m, self.dim);
        self.b.jac.fill(0.0);
        let restrict = |jfull: &[f64], jac: &mut [f64], mon: &[usize], off: usize| {
            for (r, &i) in mon.iter().enumerate() {
                for (c, &j) in mon.iter().enumerate() {
                    jac[(off + r) * dim + off + c] = jfull[i * m + j];
                }
            }
        };
        if self.subset {
            self.load_sub(delta, 0);
            self.reaction
                .jacobian(self.t, self.x, &self.b.yfull, &mut self.b.jfull);
            restrict(&self.b.jfull, &mut self.b.jac, self.monitored, 0);
            return;
        }
        for i in 0..m {
            self.b.y[i] = self.anchor[i] + delta[i];
        }
        self.reaction
            .jacobian(self.t, self.x, &self.b.y[..m], &mut self.b.jfull);
        for i in 0..m {
            self.b.jac[i * dim..i * dim + m].copy_from_slice(&self.b.jfull[i * m..(i + 1) * m]);
        }
        if self.stacked {
            self.load_sub(delta, m);
            self.reaction
                .jacobian(self.t, self.x, &self.b.yfull, &mut self.b.jfull);
            restrict(&self.b.jfull, &mut self.b.jac, self.monitored, m);
        }
    }

    fn factor(&mut self, shift: f64) -> bool {
        let dim = self.dim;
        if self.stacked {
            // The Jacobian is block diagonal; factor the two blocks apart.
            let (m, l) = (self.m, dim - self.m);
            let b = &mut *self.b;
            for (off, k, lu) in [(0, m, &mut b.lu), (m, l, &mut b.lu2)] {
                for r in 0..k {
                    for c in 0..k {
                        lu[r * k + c] = -b.jac[(off + r) * dim + off + c];
                    }
                    lu[r * k + r] += shift;
                }
            }
            return dense_lu(&mut b.lu, m, &mut b.piv) && dense_lu(&mut b.lu2, l, &mut b.piv2);
        }
        for (l, j) in self.b.lu.iter_mut().zip(&self.b.jac) {
            *l = -j;
        }
        for i in 0..dim {
            self.b.lu[i * dim + i] += shift;
        }
        dense_lu(&mut self.b.lu, dim, &mut self.b.piv)
    }

    fn solve(&mut self, rhs: &mut [f64]) {
        if self.stacked {
            let (m, l) = (self.m, self.dim - self.m);
            let (head, tail) = rhs.split_at_mut(m);
            dense_solve(&self.b.lu, m, &self.b.piv, head);
            dense_solve(&self.b.lu2, l, &self.b.piv2, tail);
            return;
        }
        dense_solve(&self.b.lu, self.dim, &self.b.piv, rhs);
    }
}

fn transpose(src: &[f64], rows: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * n];
    for r in 0..rows {
        for p in 0..n {
            out[p * rows + r] = src[r * n + p];
        }
    }
    out
}

/// Advances `anchor + delta` by the reaction over `tau`, pointwise.
///
/// `anchor` and `delta` hold `rows x n` values, species-major, where `rows`
/// follows `kind`. Forcing is evaluated at `t_freeze`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn react_anchored(
    model: &ModelSpec,
    grid: &Grid1D,
    t_freeze: f64,
    anchor: &[f64],
    delta: &mut [f64],
    kind: PointKind<'_>,
    tau: f64,
    cfg: &ReactionSolverConfig,
) -> Result<()> {
    if tau == 0.0 {
        return Ok(());
    }
    let m = model.species();
    let monitored = model.monitored();
    let l = monitored.len();
    let n = grid.len();
    let (dim, stacked, subset) = match kind {
        PointKind::Full => (m, false, false),
        PointKind::Subset { .. } => (l, false, true),
        PointKind::Stacked => (m + l, true, false),
    };
    debug_assert_eq!(anchor.len(), dim * n);
    debug_assert_eq!(delta.len(), dim * n);
    let a_pm = transpose(anchor, dim, n);
    let mut d_pm = transpose(delta, dim, n);
    let f_pm = match kind {
        PointKind::Subset { filler } => transpose(filler, m, n),
        _ => Vec::new(),
    };
    let reaction = model.reaction();
    let opts = cfg.options();

    let results: Vec<std::result::Result<(), RosFailure>> = d_pm
        .par_chunks_mut(dim)
        .enumerate()
        .map_init(
            || {
                let b = PointBufs {
                    y: vec![0.0; m],
                    yfull: vec![0.0; m],
                    rates: vec![0.0; m],
                    jfull: vec![0.0; m * m],
                    jac: vec![0.0; dim * dim],
                    lu: vec![0.0; dim * dim],
                    piv: vec![0; dim],
                    lu2: vec![0.0; l * l],
                    piv2: vec![0; l],
                };
                (b, RosWork::new(dim))
            },
            |(b, work), (p, d)| {
                let mut sys = PointSys {
                    reaction,
                    monitored,
                    stacked,
                    subset,
                    t: t_freeze,
                    x: grid.x(p),
                    m,
                    dim,
                    anchor: &a_pm[p * dim..(p + 1) * dim],
                    filler: if subset {
                        &f_pm[p * m..(p + 1) * m]
                    } else {
                        &[]
                    },
                    b,
                };
                integrate(&mut sys, d, tau, None, opts, work).map(|_| ())
            },
        )
        .collect();

    if let Some((p, e)) = results
        .into_iter()
        .enumerate()
        .find_map(|(p, r)| r.err().map(|e| (p, e)))
    {
        return Err(match e {
            RosFailure::NonFinite => {
                Error::Numeric(format!("non-finite reaction rates at grid point {p}"))
            }
            other => Error::Integration {
                point: p,
                stage: "reaction".into(),
                reason: other.to_string(),
            },
        });
    }
    for r in 0..dim {
        for p in 0..n {
            delta[r * n + p] = d_pm[p * dim + r];
        }
    }
    Ok(())
}

/// Advances every grid point of `state` by `u' = f(t, x, u)` over `tau >= 0`.
pub fn react_step(
    state: &FieldState,
    model: &ModelSpec,
    grid: &Grid1D,
    tau: f64,
    cfg: &ReactionSolverConfig,
) -> Result<FieldState> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!(
            "reaction step must be >= 0, got {tau}"
        )));
    }
    cfg.validate()?;
    let (m, n) = (model.species(), grid.len());
    state.check_shape(m, n)?;
    let mut delta = vec![0.0; m * n];
    react_anchored(
        model,
        grid,
        state.t() + 0.5 * tau,
        state.values(),
        &mut delta,
        PointKind::Full,
        tau,
        cfg,
    )?;
    let values = state
        .values()
        .iter()
        .zip(&delta)
        .map(|(a, d)| a + d)
        .collect();
    Ok(FieldState::from_parts(state.t() + tau, m, n, values))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{LinearReaction, Logistic, ZeroReaction};

    fn spec(r: Arc<dyn Reaction>) -> ModelSpec {
        let m = r.species();
        ModelSpec::new((0..m).map(|j| format!("u{j}")).collect(), vec![1.0; m], r).unwrap()
    }

    fn constant(grid: &Grid1D, m: usize, v: f64) -> FieldState {
        FieldState::from_fn(0.0, m, grid, |_, _| v).unwrap()
    }

    #[test]
    fn zero_reaction_is_identity() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        let s = FieldState::from_fn(0.0, 2, &g, |j, x| x + j as f64).unwrap();
        let out = react_step(
            &s,
            &spec(Arc::new(ZeroReaction(2))),
            &g,
            3.0,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(out.values(), s.values());
        assert_eq!(out.t(), 3.0);
    }

    #[test]
    fn analytic_exponential_and_logistic() {
        let g = Grid1D::new(0.0, 1.0, 5).unwrap();
        let cfg = ReactionSolverConfig::default();
        let out = react_step(
            &constant(&g, 1, 1.0),
            &spec(Arc::new(LinearReaction::scalar(-1.0))),
            &g,
            1.0,
            &cfg,
        )
        .unwrap();
        for v in out.values() {
            assert!((v - 0.367_879_441_171_442_3).abs() < 1e-9);
        }
        let out = react_step(
            &constant(&g, 1, 0.5),
            &spec(Arc::new(Logistic(1.0))),
            &g,
            3f64.ln(),
            &cfg,
        )
        .unwrap();
        for v in out.values() {
            assert!((v - 0.75).abs() < 1e-9);
        }
    }

    #[test]
    fn semigroup_for_autonomous_reaction() {
        let g = Grid1D::new(0.0, 1.0, 21).unwrap();
        let s = FieldState::from_fn(0.0, 1, &g, |_, x| 0.05 + 0.9 * x).unwrap();
        let model = spec(Arc::new(Logistic(3.0)));
        let cfg = ReactionSolverConfig::default();
        let a = react_step(
            &react_step(&s, &model, &g, 0.3, &cfg).unwrap(),
            &model,
            &g,
            0.5,
            &cfg,
        )
        .unwrap();
        let b = react_step(&s, &model, &g, 0.8, &cfg).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn tolerance_proportionality() {
        let g = Grid1D::new(0.0, 1.0, 21).unwrap();
        let s = FieldState::from_fn(0.0, 1, &g, |_, x| 0.05 + 0.9 * x).unwrap();
        let model = spec(Arc::new(Logistic(3.0)));
        let tol = 1e-6;
        let cfg = ReactionSolverConfig {
            rtol: tol,
            atol: tol,
            ..Default::default()
        };
        let half = ReactionSolverConfig {
            rtol: tol / 2.0,
            atol: tol / 2.0,
            ..cfg
        };
        let a = react_step(&s, &model, &g, 2.0, &cfg).unwrap();
        let b = react_step(&s, &model, &g, 2.0, &half).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 10.0 * tol);
        }
    }

    #[test]
    fn blow_up_is_reported_with_point() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        // u' = u^2 blows up at t = 1/u0; only the last point reaches it.
        let r = crate::model::ClosureReaction::new(
            1,
            |_, _, u: &[f64], o: &mut [f64]| o[0] = u[0] * u[0],
            |_, _, u: &[f64], j: &mut [f64]| j[0] = 2.0 * u[0],
        );
        let s = FieldState::from_fn(0.0, 1, &g, |_, x| 0.1 + x).unwrap();
        let cfg = ReactionSolverConfig {
            max_substeps: 2000,
            ..Default::default()
        };
        match react_step(&s, &spec(Arc::new(r)), &g, 1.0, &cfg) {
            Err(Error::Integration { point, .. }) => assert_eq!(point, 3),
            other => panic!("expected integration error, got {other:?}"),
        }
    }

    #[test]
    fn nan_rates_are_numeric_errors() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let r = crate::model::ClosureReaction::new(
            1,
            |_, _, u: &[f64], o: &mut [f64]| o[0] = (u[0] - 0.5).sqrt(),
            |_, _, _: &[f64], j: &mut [f64]| j[0] = 0.0,
        );
        let s = FieldState::from_fn(0.0, 1, &g, |_, x| x).unwrap();
        assert!(matches!(
            react_step(&s, &spec(Arc::new(r)), &g, 0.1, &Default::default()),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn negative_tau_is_rejected() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let s = constant(&g, 1, 1.0);
        assert!(matches!(
            react_step(
                &s,
                &spec(Arc::new(Logistic(1.0))),
                &g,
                -0.1,
                &Default::default()
            ),
            Err(Error::Domain(_))
        ));
    }
}
