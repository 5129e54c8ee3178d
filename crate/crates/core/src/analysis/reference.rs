//! Quasi-exact solutions of the coupled semidiscrete system.
//!
//! Reaction and the three-point Neumann Laplacian (the operator whose exact
//! flow the splitting's diffusion substep computes) are integrated together
//! by RODAS4 with a banded Jacobian. Unknowns are stored point-major so the
//! band has `m` sub- and super-diagonals. Time-dependent forcing is evaluated
//! at the midpoint of each interval between consecutive model events.

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::integrators::linalg::BandMatrix;
use crate::integrators::rosenbrock::{integrate, RosFailure, RosOptions, RosWork, StiffSystem};
use crate::model::{ModelSpec, Reaction};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct ReferenceConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Step budget per inter-event segment.
    pub max_steps: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 2_000_000,
        }
    }
}

impl ReferenceConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.rtol) || !ok(self.atol) || self.max_steps == 0 {
            return Err(Error::Config(format!(
                "reference tolerances must be > 0 and the step budget nonzero, got {self:?}"
            )));
        }
        Ok(())
    }

    fn options(&self) -> RosOptions {
        RosOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
        }
    }
}

struct MolSystem<'a> {
    reaction: &'a dyn Reaction,
    xs: Vec<f64>,
    t: f64,
    m: usize,
    n: usize,
    /// `D_j / dx^2`.
    coef: Vec<f64>,
    anchor: &'a [f64],
    lap_anchor: &'a [f64],
    jac: BandMatrix,
    lu: BandMatrix,
    y: Vec<f64>,
    block: Vec<f64>,
}

impl MolSystem<'_> {
    fn lap_into(&self, v: &[f64], out: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        for j in 0..m {
            let c = self.coef[j];
            let at = |p: usize| v[p * m + j];
            out[j] = 2.0 * (at(1) - at(0)) * c;
            for p in 1..n - 1 {
                out[p * m + j] = (at(p - 1) - 2.0 * at(p) + at(p + 1)) * c;
            }
            out[(n - 1) * m + j] = 2.0 * (at(n - 2) - at(n - 1)) * c;
        }
    }
}

impl StiffSystem for MolSystem<'_> {
    fn dim(&self) -> usize {
        self.m * self.n
    }

    fn anchor(&self) -> &[f64] {
        self.anchor
    }

    fn rhs(&mut self, delta: &[f64], out: &mut [f64]) {
        let m = self.m;
        self.lap_into(delta, out);
        for p in 0..self.n {
            let r = p * m..(p + 1) * m;
            for i in r.clone() {
                self.y[i - p * m] = self.anchor[i] + delta[i];
            }
            self.reaction
                .rates(self.t, self.xs[p], &self.y[..m], &mut self.block[..m]);
            for (i, o) in r.enumerate() {
                out[o] += self.lap_anchor[o] + self.block[i];
            }
        }
    }

    fn jacobian(&mut self, delta: &[f64]) {
        let (m, n) = (self.m, self.n);
        self.jac.clear();
        for p in 0..n {
            let base = p * m;
            for i in 0..m {
                self.y[i] = self.anchor[base + i] + delta[base + i];
            }
            self.reaction
                .jacobian(self.t, self.xs[p], &self.y[..m], &mut self.block);
            for a in 0..m {
                for b in 0..m {
                    self.jac.set(base + a, base + b, self.block[a * m + b]);
                }
            }
            for j in 0..m {
                let c = self.coef[j];
                let i = base + j;
                self.jac.add(i, i, -2.0 * c);
                if p == 0 {
                    self.jac.add(i, i + m, 2.0 * c);
                } else if p == n - 1 {
                    self.jac.add(i, i - m, 2.0 * c);
                } else {
                    self.jac.add(i, i - m, c);
                    self.jac.add(i, i + m, c);
                }
            }
        }
    }

    fn factor(&mut self, shift: f64) -> bool {
        self.lu.assign_shifted(&self.jac, shift);
        self.lu.factor()
    }

    fn solve(&mut self, b: &mut [f64]) {
        self.lu.solve(b);
    }
}

fn to_point_major(v: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for j in 0..m {
        for p in 0..n {
            out[p * m + j] = v[j * n + p];
        }
    }
    out
}

fn to_species_major(v: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for j in 0..m {
        for p in 0..n {
            out[j * n + p] = v[p * m + j];
        }
    }
    out
}

/// Integrator state shared by consecutive calls with one anchor.
pub(crate) struct AnchoredReference<'a> {
    model: &'a ModelSpec,
    grid: &'a Grid1D,
    cfg: ReferenceConfig,
    anchor: Vec<f64>,
    lap_anchor: Vec<f64>,
    /// Point-major increment.
    delta: Vec<f64>,
    t: f64,
    h: Option<f64>,
    work: RosWork,
}

impl<'a> AnchoredReference<'a> {
    pub(crate) fn new(
        model: &'a ModelSpec,
        grid: &'a Grid1D,
        u0: &FieldState,
        cfg: ReferenceConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let (m, n) = (model.species(), grid.len());
        u0.check_shape(m, n)?;
        let anchor = to_point_major(u0.values(), m, n);
        let mut lap_anchor = vec![0.0; m * n];
        let inv = 1.0 / (grid.dx() * grid.dx());
        let sys = MolSystem {
            reaction: model.reaction(),
            xs: Vec::new(),
            t: 0.0,
            m,
            n,
            coef: model.diffusion().iter().map(|d| d * inv).collect(),
            anchor: &anchor,
            lap_anchor: &[],
            jac: BandMatrix::new(0, 0, 0),
            lu: BandMatrix::new(0, 0, 0),
            y: Vec::new(),
            block: Vec::new(),
        };
        sys.lap_into(&anchor, &mut lap_anchor);
        Ok(Self {
            model,
            grid,
            cfg,
            anchor,
            lap_anchor,
            delta: vec![0.0; m * n],
            t: u0.t(),
            h: None,
            work: RosWork::new(m * n),
        })
    }

    /// Advances to `t_end`, splitting the interval at model events.
    pub(crate) fn advance_to(&mut self, t_end: f64) -> Result<()> {
        if !(t_end >= self.t) || !t_end.is_finite() {
            return Err(Error::Domain(format!(
                "reference target {t_end} precedes current time {}",
                self.t
            )));
        }
        let mut cuts: Vec<f64> = self
            .model
            .events()
            .iter()
            .map(|e| e.time)
            .filter(|&s| s > self.t && s < t_end)
            .collect();
        cuts.push(t_end);
        for b in cuts {
            self.segment(b)?;
        }
        Ok(())
    }

    fn segment(&mut self, t1: f64) -> Result<()> {
        let (m, n) = (self.model.species(), self.grid.len());
        let t0 = self.t;
        if t1 == t0 {
            return Ok(());
        }
        let inv = 1.0 / (self.grid.dx() * self.grid.dx());
        let mut sys = MolSystem {
            reaction: self.model.reaction(),
            xs: self.grid.points(),
            t: 0.5 * (t0 + t1),
            m,
            n,
            coef: self.model.diffusion().iter().map(|d| d * inv).collect(),
            anchor: &self.anchor,
            lap_anchor: &self.lap_anchor,
            jac: BandMatrix::new(m * n, m, m),
            lu: BandMatrix::new(m * n, m, m),
            y: vec![0.0; m],
            block: vec![0.0; m * m],
        };
        match integrate(
            &mut sys,
            &mut self.delta,
            t1 - t0,
            self.h,
            self.cfg.options(),
            &mut self.work,
        ) {
            Ok((h, _)) => {
                self.h = Some(h);
                self.t = t1;
                Ok(())
            }
            Err(RosFailure::NonFinite) => Err(Error::Numeric(format!(
                "non-finite right-hand side in reference solve at t = {t0}"
            ))),
            Err(e) => Err(Error::Integration {
                point: 0,
                stage: "reference".into(),
                reason: e.to_string(),
            }),
        }
    }

    /// Species-major increment relative to the initial state.
    pub(crate) fn increment(&self) -> Vec<f64> {
        to_species_major(&self.delta, self.model.species(), self.grid.len())
    }

    pub(crate) fn state(&self) -> FieldState {
        let (m, n) = (self.model.species(), self.grid.len());
        let v: Vec<f64> = self
            .anchor
            .iter()
            .zip(&self.delta)
            .map(|(a, d)| a + d)
            .collect();
        FieldState::from_parts(self.t, m, n, to_species_major(&v, m, n))
    }
}

/// Integrates the coupled system from `u0` to `t_end`.
pub fn reference_solve(
    model: &ModelSpec,
    grid: &Grid1D,
    u0: &FieldState,
    t_end: f64,
    cfg: &ReferenceConfig,
) -> Result<FieldState> {
    let mut r = AnchoredReference::new(model, grid, u0, *cfg)?;
    r.advance_to(t_end)?;
    Ok(r.state())
}

/// Like [`reference_solve`] but returns the state at every time in `times`
/// (non-decreasing, not before `u0.t()`).
pub fn reference_solve_at(
    model: &ModelSpec,
    grid: &Grid1D,
    u0: &FieldState,
    times: &[f64],
    cfg: &ReferenceConfig,
) -> Result<Vec<FieldState>> {
    let mut r = AnchoredReference::new(model, grid, u0, *cfg)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        r.advance_to(t)?;
        out.push(r.state());
    }
    Ok(out)
}
