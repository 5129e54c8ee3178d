//! Splitting compositions and the fused main/shifted Strang step.
//!
//! Compositions read right to left: `X^t Y^t u` applies the reaction `Y`
//! first. Every map here works on increments relative to an [`Anchor`]
//! (the state at the start of the step) so that differences between
//! branches sharing an anchor are free of cancellation error.

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::integrators::reaction::{react_anchored, PointKind};
use crate::integrators::{DiffusionOperator, ReactionSolverConfig};
use crate::model::ModelSpec;
use crate::norm::{rms, rms_diff, NormSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Lie1,
    Lie2,
    Strang1,
    Strang2,
    Strang1Shifted,
    Strang2Shifted,
}

/// One sub-flow of a composition, as a fraction of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Substep {
    React(f64),
    Diffuse(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeId {
    kind: SchemeKind,
    shift: Option<f64>,
}

impl SchemeId {
    pub fn new(kind: SchemeKind, shift: Option<f64>) -> Result<Self> {
        let shifted = matches!(
            kind,
            SchemeKind::Strang1Shifted | SchemeKind::Strang2Shifted
        );
        match (shifted, shift) {
            (false, None) => Ok(Self { kind, shift }),
            (false, Some(_)) => Err(Error::Config(format!("{kind:?} takes no shift"))),
            (true, None) => Err(Error::Config(format!("{kind:?} needs a shift"))),
            (true, Some(e)) => {
                if e == 0.0 || !(e.abs() < 0.5) {
                    return Err(Error::Config(format!(
                        "shift must lie in (-1/2, 0) or (0, 1/2), got {e}"
                    )));
                }
                Ok(Self { kind, shift })
            }
        }
    }

    pub fn lie1() -> Self {
        Self {
            kind: SchemeKind::Lie1,
            shift: None,
        }
    }

    pub fn lie2() -> Self {
        Self {
            kind: SchemeKind::Lie2,
            shift: None,
        }
    }

    pub fn strang1() -> Self {
        Self {
            kind: SchemeKind::Strang1,
            shift: None,
        }
    }

    pub fn strang2() -> Self {
        Self {
            kind: SchemeKind::Strang2,
            shift: None,
        }
    }

    pub fn strang1_shifted(eps: f64) -> Result<Self> {
        Self::new(SchemeKind::Strang1Shifted, Some(eps))
    }

    pub fn strang2_shifted(eps: f64) -> Result<Self> {
        Self::new(SchemeKind::Strang2Shifted, Some(eps))
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn shift(&self) -> Option<f64> {
        self.shift
    }

    /// Sub-flows in the order they act.
    pub fn substeps(&self) -> Vec<Substep> {
        use Substep::{Diffuse as X, React as Y};
        let e = self.shift.unwrap_or(0.0);
        match self.kind {
            SchemeKind::Lie1 => vec![Y(1.0), X(1.0)],
            SchemeKind::Lie2 => vec![X(1.0), Y(1.0)],
            SchemeKind::Strang1 => vec![X(0.5), Y(1.0), X(0.5)],
            SchemeKind::Strang2 => vec![Y(0.5), X(1.0), Y(0.5)],
            SchemeKind::Strang1Shifted => vec![X(0.5 + e), Y(1.0), X(0.5 - e)],
            SchemeKind::Strang2Shifted => vec![Y(0.5 + e), X(1.0), Y(0.5 - e)],
        }
    }
}

/// Main (`S2`) and shifted (`S2,eps`, monitored species only) results of one
/// fused step, with the normalized difference between them.
#[derive(Debug, Clone)]
pub struct PairStepResult {
    pub main: FieldState,
    pub shifted: FieldState,
    pub err: f64,
}

/// The state at the start of a step plus cached data for anchored maps.
#[derive(Debug, Clone)]
pub(crate) struct Anchor {
    pub t: f64,
    /// All species, `m x n`.
    pub values: Vec<f64>,
    lap_hat: Vec<Vec<f64>>,
    /// Monitored species, `l x n`.
    pub mon_values: Vec<f64>,
    mon_lap_hat: Vec<Vec<f64>>,
    /// Main rows followed by monitored rows.
    stacked: Vec<f64>,
    /// `rms` of every species row.
    pub rms: Vec<f64>,
}

/// Splitting maps for one model on one grid.
#[derive(Debug, Clone)]
pub struct Splitter {
    model: ModelSpec,
    grid: Grid1D,
    diffusion: DiffusionOperator,
    reaction: ReactionSolverConfig,
    norm: NormSpec,
    mon_species: Vec<usize>,
    all_species: Vec<usize>,
}

impl Splitter {
    pub fn new(model: ModelSpec, grid: Grid1D, reaction: ReactionSolverConfig) -> Result<Self> {
        reaction.validate()?;
        let diffusion = DiffusionOperator::new(&grid, model.diffusion())?;
        let all_species: Vec<usize> = (0..model.species()).collect();
        let mon_species = model.monitored().to_vec();
        Ok(Self {
            model,
            grid,
            diffusion,
            reaction,
            norm: NormSpec::default(),
            mon_species,
            all_species,
        })
    }

    pub fn with_norm(mut self, norm: NormSpec) -> Self {
        self.norm = norm;
        self
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn diffusion(&self) -> &DiffusionOperator {
        &self.diffusion
    }

    pub fn reaction_config(&self) -> &ReactionSolverConfig {
        &self.reaction
    }

    pub fn norm(&self) -> NormSpec {
        self.norm
    }

    fn all_monitored(&self) -> bool {
        self.mon_species.len() == self.model.species()
    }

    pub(crate) fn anchor(&self, state: &FieldState) -> Result<Anchor> {
        let (m, n) = (self.model.species(), self.grid.len());
        state.check_shape(m, n)?;
        let values = state.values().to_vec();
        let mut mon_values = Vec::with_capacity(self.mon_species.len() * n);
        for &j in &self.mon_species {
            mon_values.extend_from_slice(state.species(j));
        }
        let lap_hat = self.diffusion.anchor_spectra(&values, &self.all_species);
        let mon_lap_hat = self
            .mon_species
            .iter()
            .map(|&j| lap_hat[j].clone())
            .collect();
        let stacked = values.iter().chain(&mon_values).copied().collect();
        let rms = (0..m).map(|j| rms(state.species(j))).collect();
        Ok(Anchor {
            t: state.t(),
            values,
            lap_hat,
            mon_values,
            mon_lap_hat,
            stacked,
            rms,
        })
    }

    fn react_full(
        &self,
        a: &Anchor,
        delta: &mut [f64],
        tau: f64,
        t_mid: f64,
        stage: &str,
    ) -> Result<()> {
        react_anchored(
            &self.model,
            &self.grid,
            t_mid,
            &a.values,
            delta,
            PointKind::Full,
            tau,
            &self.reaction,
        )
        .map_err(|e| e.in_stage(stage))
    }

    fn react_mon(
        &self,
        a: &Anchor,
        delta: &mut [f64],
        tau: f64,
        t_mid: f64,
        stage: &str,
    ) -> Result<()> {
        let kind = if self.all_monitored() {
            PointKind::Full
        } else {
            PointKind::Subset { filler: &a.values }
        };
        react_anchored(
            &self.model,
            &self.grid,
            t_mid,
            &a.mon_values,
            delta,
            kind,
            tau,
            &self.reaction,
        )
        .map_err(|e| e.in_stage(stage))
    }

    fn react_stacked(
        &self,
        a: &Anchor,
        delta: &mut [f64],
        tau: f64,
        t_mid: f64,
        stage: &str,
    ) -> Result<()> {
        react_anchored(
            &self.model,
            &self.grid,
            t_mid,
            &a.stacked,
            delta,
            PointKind::Stacked,
            tau,
            &self.reaction,
        )
        .map_err(|e| e.in_stage(stage))
    }

    fn diffuse_full(&self, a: &Anchor, delta: &mut [f64], tau: f64) {
        self.diffusion
            .apply_anchored(delta, &self.all_species, &a.lap_hat, tau);
    }

    fn diffuse_mon(&self, a: &Anchor, delta: &mut [f64], tau: f64) {
        self.diffusion
            .apply_anchored(delta, &self.mon_species, &a.mon_lap_hat, tau);
    }

    /// Applies `scheme` over `[t0, t0 + dt]` to all species, in increments.
    pub(crate) fn scheme_anchored(
        &self,
        scheme: &SchemeId,
        a: &Anchor,
        delta: &mut [f64],
        t0: f64,
        dt: f64,
    ) -> Result<()> {
        let t_mid = t0 + 0.5 * dt;
        for (i, s) in scheme.substeps().into_iter().enumerate() {
            match s {
                Substep::React(f) => {
                    self.react_full(a, delta, f * dt, t_mid, &format!("substep {i}: Y^({f}*dt)"))?
                }
                Substep::Diffuse(f) => self.diffuse_full(a, delta, f * dt),
            }
        }
        Ok(())
    }

    /// `S2` restricted to the monitored species, in increments.
    pub(crate) fn strang2_monitored(
        &self,
        a: &Anchor,
        delta: &mut [f64],
        t0: f64,
        dt: f64,
    ) -> Result<()> {
        let t_mid = t0 + 0.5 * dt;
        self.react_mon(a, delta, 0.5 * dt, t_mid, "probe Y^(dt/2)")?;
        self.diffuse_mon(a, delta, dt);
        self.react_mon(a, delta, 0.5 * dt, t_mid, "probe Y^(dt/2)")
    }

    /// Applies one step of `scheme` to `state`.
    pub fn apply_scheme(
        &self,
        scheme: &SchemeId,
        state: &FieldState,
        dt: f64,
    ) -> Result<FieldState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("step must be > 0, got {dt}")));
        }
        let a = self.anchor(state)?;
        let mut delta = vec![0.0; a.values.len()];
        self.scheme_anchored(scheme, &a, &mut delta, a.t, dt)?;
        Ok(self.materialize(&a, &delta, a.t + dt))
    }

    pub(crate) fn materialize(&self, a: &Anchor, delta: &[f64], t: f64) -> FieldState {
        let v = a.values.iter().zip(delta).map(|(x, d)| x + d).collect();
        FieldState::from_parts(t, self.model.species(), self.grid.len(), v)
    }

    pub(crate) fn materialize_mon(&self, a: &Anchor, delta: &[f64], t: f64) -> FieldState {
        let v = a.mon_values.iter().zip(delta).map(|(x, d)| x + d).collect();
        FieldState::from_parts(t, self.mon_species.len(), self.grid.len(), v)
    }

    /// Normalized difference between a full-state increment and a monitored
    /// increment, maximized over monitored species.
    pub(crate) fn err_full_vs_mon(&self, a: &Anchor, full: &[f64], mon: &[f64]) -> f64 {
        let n = self.grid.len();
        let mut err: f64 = 0.0;
        for (r, &j) in self.mon_species.iter().enumerate() {
            let d = rms_diff(&full[j * n..(j + 1) * n], &mon[r * n..(r + 1) * n]);
            err = err.max(d / a.rms[j].max(self.norm.floor));
        }
        err
    }

    /// Same as [`Self::err_full_vs_mon`] for two monitored increments.
    pub(crate) fn err_mon_vs_mon(&self, a: &Anchor, x: &[f64], y: &[f64]) -> f64 {
        let n = self.grid.len();
        let mut err: f64 = 0.0;
        for (r, &j) in self.mon_species.iter().enumerate() {
            let d = rms_diff(&x[r * n..(r + 1) * n], &y[r * n..(r + 1) * n]);
            err = err.max(d / a.rms[j].max(self.norm.floor));
        }
        err
    }

    /// Shared-substep schedule producing `S2` and `S2,eps` together.
    /// Returns the main increment (`m` rows), the shifted increment
    /// (monitored rows) and their normalized difference.
    pub(crate) fn fused_anchored(
        &self,
        a: &Anchor,
        dt: f64,
        eps: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let n = self.grid.len();
        let m = self.model.species();
        let t_mid = a.t + 0.5 * dt;
        let mut main = vec![0.0; m * n];
        self.react_full(a, &mut main, 0.5 * dt, t_mid, "Y^(dt/2)")?;
        let mut shifted = Vec::with_capacity(self.mon_species.len() * n);
        for &j in &self.mon_species {
            shifted.extend_from_slice(&main[j * n..(j + 1) * n]);
        }
        self.react_mon(a, &mut shifted, eps * dt, t_mid, "Y^(eps*dt)")?;
        self.diffuse_full(a, &mut main, dt);
        self.diffuse_mon(a, &mut shifted, dt);
        let back = 0.5 - eps;
        if back > 0.0 {
            let mut both = main;
            both.extend_from_slice(&shifted);
            self.react_stacked(a, &mut both, back * dt, t_mid, "Y^((1/2-eps)*dt)")?;
            shifted = both.split_off(m * n);
            main = both;
            self.react_full(a, &mut main, eps * dt, t_mid, "Y^(eps*dt)")?;
        } else {
            // eps >= 1/2: the shifted branch needs a backward reaction substep.
            self.react_mon(a, &mut shifted, back * dt, t_mid, "Y^((1/2-eps)*dt)")?;
            self.react_full(a, &mut main, 0.5 * dt, t_mid, "Y^(dt/2)")?;
        }
        let err = self.err_full_vs_mon(a, &main, &shifted);
        if !err.is_finite() {
            return Err(Error::Numeric(format!("error estimate is {err}")));
        }
        Ok((main, shifted, err))
    }

    /// One fused step: `S2` on all species and `S2,eps` on the monitored ones.
    pub fn fused_pair_step(&self, state: &FieldState, dt: f64, eps: f64) -> Result<PairStepResult> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("step must be > 0, got {dt}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!(
                "shift must lie in (0, 1), got {eps}"
            )));
        }
        let a = self.anchor(state)?;
        let (main, shifted, err) = self.fused_anchored(&a, dt, eps)?;
        Ok(PairStepResult {
            main: self.materialize(&a, &main, a.t + dt),
            shifted: self.materialize_mon(&a, &shifted, a.t + dt),
            err,
        })
    }
}
