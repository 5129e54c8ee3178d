//! TOML run configuration.

use std::path::Path;

use adasplit::analysis::ReferenceConfig;
use adasplit::models::bz::{self, BzParams};
use adasplit::models::discharge::{self, DischargeParams};
use adasplit::models::kpp::{self, KppParams};
use adasplit::{
    ControllerConfig, FieldState, Grid1D, ProbePolicy, ProbeSet, ReactionSolverConfig, Splitter,
};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Kpp,
    Bz,
    Discharge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub name: ModelName,
    /// Final time; the model's own default when absent.
    pub t_end: Option<f64>,
    pub kpp: KppParams,
    pub bz: BzParams,
    pub discharge: DischargeParams,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            name: ModelName::Kpp,
            t_end: None,
            kpp: KppParams::default(),
            bz: BzParams::default(),
            discharge: DischargeParams::default(),
        }
    }
}

/// Overrides of the selected model's grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    Every,
    At,
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub eta: f64,
    pub dt0: f64,
    pub eps0: f64,
    pub eps_max: f64,
    pub zeta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
    pub c_reject: f64,
    pub upsilon: f64,
    /// `(a, b, c)` of the two probe re-splittings.
    pub probe_big: [f64; 3],
    pub probe_small: [f64; 3],
    pub probes: ProbeMode,
    /// Probe period `N` for `probes = "every"`.
    pub probe_every: usize,
    /// Accepted-step counts for `probes = "at"`.
    pub probe_at: Vec<usize>,
    pub max_rejections: usize,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::new(1e-4, 1e-6);
        let set = |s: ProbeSet| [s.a, s.b, s.c];
        Self {
            eta: c.eta,
            dt0: c.dt0,
            eps0: c.eps0,
            eps_max: c.eps_max,
            zeta: c.zeta,
            beta: c.beta,
            gamma: c.gamma,
            theta: c.theta,
            c_reject: c.c_reject,
            upsilon: c.upsilon,
            probe_big: set(c.probe_big),
            probe_small: set(c.probe_small),
            probes: ProbeMode::Every,
            probe_every: 10,
            probe_at: vec![0, 10],
            max_rejections: c.max_rejections,
        }
    }
}

impl ControllerSection {
    pub fn to_config(&self) -> ControllerConfig {
        let mut c = ControllerConfig::new(self.eta, self.dt0);
        let set = |v: [f64; 3]| ProbeSet::new(v[0], v[1], v[2]);
        c.eps0 = self.eps0;
        c.eps_max = self.eps_max;
        c.zeta = self.zeta;
        c.beta = self.beta;
        c.gamma = self.gamma;
        c.theta = self.theta;
        c.c_reject = self.c_reject;
        c.upsilon = self.upsilon;
        c.probe_big = set(self.probe_big);
        c.probe_small = set(self.probe_small);
        c.probe_policy = match self.probes {
            ProbeMode::Every => ProbePolicy::EveryN(self.probe_every),
            ProbeMode::At => ProbePolicy::AtSteps(self.probe_at.clone()),
            ProbeMode::Never => ProbePolicy::Never,
        };
        c.max_rejections = self.max_rejections;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSection {
    /// Compare `run` results with a reference solution.
    pub enabled: bool,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        let r = ReferenceConfig::default();
        Self {
            enabled: true,
            rtol: r.rtol,
            atol: r.atol,
            max_steps: r.max_steps,
        }
    }
}

impl ReferenceSection {
    pub fn to_config(&self) -> ReferenceConfig {
        ReferenceConfig {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Snapshot times for `run` and `reference`.
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    /// Reaction rates swept by the KPP studies.
    pub k: Vec<f64>,
    /// When set, each KPP case uses `D = kd / k`.
    pub kd: Option<f64>,
    pub eps: Vec<f64>,
    /// Explicit step list for `study-order`; log-spaced from the range below when empty.
    pub dts: Vec<f64>,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_count: usize,
    /// `study-dtstar` sweeps `[lo, hi]` times the predicted critical step.
    pub dtstar_span: [f64; 2],
    pub dtstar_points: usize,
    /// Reference tolerance used by the sweeps.
    pub reference_tol: f64,
    /// Step at which `theory` evaluates the leading-error profiles.
    pub theory_t: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            k: vec![1.0, 10.0, 100.0],
            kd: Some(1.0),
            eps: vec![0.05, 0.005, 0.0005],
            dts: Vec::new(),
            dt_min: 1e-4,
            dt_max: 1e-2,
            dt_count: 9,
            dtstar_span: [0.05, 60.0],
            dtstar_points: 25,
            reference_tol: 1e-13,
            theory_t: 1e-3,
        }
    }
}

impl StudySection {
    pub fn step_list(&self) -> Vec<f64> {
        if self.dts.is_empty() {
            log_space(self.dt_min, self.dt_max, self.dt_count)
        } else {
            self.dts.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub controller: ControllerSection,
    pub reaction: ReactionSolverConfig,
    pub reference: ReferenceSection,
    pub output: OutputSection,
    pub study: StudySection,
}

/// A fully assembled problem.
pub struct Problem {
    pub splitter: Splitter,
    pub u0: FieldState,
    pub t_end: f64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn defaults_toml() -> String {
        toml::to_string(&RunConfig::default()).expect("default config serializes")
    }

    /// Checks every section before any computation; returns warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = self.controller.to_config().validate()?;
        self.reaction.validate()?;
        self.reference.to_config().validate()?;
        match self.model.name {
            ModelName::Kpp => self.kpp()?.validate()?,
            ModelName::Bz => self.bz()?.validate()?,
            ModelName::Discharge => self.discharge()?.validate()?,
        }
        self.grid()?;
        let t_end = self.t_end();
        if !(t_end >= 0.0 && t_end.is_finite()) {
            bail!("t_end must be finite and >= 0, got {t_end}");
        }
        if self.output.snapshots.windows(2).any(|w| !(w[1] > w[0])) {
            bail!("output.snapshots must increase strictly");
        }
        if let Some(&s) = self
            .output
            .snapshots
            .iter()
            .find(|&&s| !(0.0..=t_end).contains(&s))
        {
            bail!("snapshot time {s} lies outside [0, {t_end}]");
        }
        let s = &self.study;
        if s.k.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            bail!("study.k entries must be > 0");
        }
        if s.kd.is_some_and(|kd| !(kd > 0.0 && kd.is_finite())) {
            bail!("study.kd must be > 0");
        }
        if s.eps.iter().any(|e| !(e.abs() < 0.5)) {
            bail!("study.eps entries must satisfy |eps| < 1/2");
        }
        if s.dts.is_empty() && !(s.dt_min > 0.0 && s.dt_min < s.dt_max && s.dt_count >= 2) {
            bail!("study needs 0 < dt_min < dt_max and dt_count >= 2");
        }
        if !(s.dtstar_span[0] > 0.0 && s.dtstar_span[0] < s.dtstar_span[1] && s.dtstar_points >= 2)
        {
            bail!("study.dtstar_span needs 0 < lo < hi and dtstar_points >= 2");
        }
        if !(s.reference_tol > 0.0 && s.theory_t > 0.0) {
            bail!("study.reference_tol and study.theory_t must be > 0");
        }
        if self.controller.eps0 >= 0.5 {
            warnings.push(format!("eps0 = {} >= 1/2", self.controller.eps0));
        }
        Ok(warnings)
    }

    pub fn t_end(&self) -> f64 {
        self.model.t_end.unwrap_or(match self.model.name {
            ModelName::Kpp => 1.0,
            ModelName::Bz => 2.0,
            ModelName::Discharge => 3.0 * self.model.discharge.period,
        })
    }

    pub fn kpp(&self) -> Result<KppParams> {
        let mut p = self.model.kpp.clone();
        let g = &self.grid;
        p.n = g.n.unwrap_or(p.n);
        p.x_min = g.x_min.unwrap_or(p.x_min);
        p.x_max = g.x_max.unwrap_or(p.x_max);
        Ok(p)
    }

    pub fn bz(&self) -> Result<BzParams> {
        let mut p = self.model.bz.clone();
        let g = &self.grid;
        p.n = g.n.unwrap_or(p.n);
        p.x_min = g.x_min.unwrap_or(p.x_min);
        p.x_max = g.x_max.unwrap_or(p.x_max);
        Ok(p)
    }

    pub fn discharge(&self) -> Result<DischargeParams> {
        let mut p = self.model.discharge.clone();
        if self.grid.x_min.is_some_and(|x| x != 0.0) {
            bail!(
                "the discharge gap starts at x = 0; set grid.x_max or model.discharge.gap instead"
            );
        }
        p.n = self.grid.n.unwrap_or(p.n);
        p.gap = self.grid.x_max.unwrap_or(p.gap);
        Ok(p)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Ok(match self.model.name {
            ModelName::Kpp => self.kpp()?.grid()?,
            ModelName::Bz => self.bz()?.grid()?,
            ModelName::Discharge => self.discharge()?.grid()?,
        })
    }

    /// The configured KPP problem with its rate replaced by `k`.
    pub fn kpp_problem(&self, k: f64) -> Result<(Problem, KppParams)> {
        let mut p = self.kpp()?;
        p.k = k;
        if let Some(kd) = self.study.kd {
            p.d = kd / k;
        }
        let grid = p.grid()?;
        let splitter = Splitter::new(kpp::model(&p)?, grid.clone(), self.reaction)?;
        let u0 = kpp::initial_state(&p, &grid, 0.0)?;
        Ok((
            Problem {
                splitter,
                u0,
                t_end: self.t_end(),
            },
            p,
        ))
    }

    pub fn problem(&self) -> Result<Problem> {
        let t_end = self.t_end();
        let (model, u0, grid) = match self.model.name {
            ModelName::Kpp => {
                let p = self.kpp()?;
                let grid = p.grid()?;
                (kpp::model(&p)?, kpp::initial_state(&p, &grid, 0.0)?, grid)
            }
            ModelName::Bz => {
                let p = self.bz()?;
                let grid = p.grid()?;
                (bz::model(&p)?, bz::initial_state(&p, &grid)?, grid)
            }
            ModelName::Discharge => {
                let p = self.discharge()?;
                let grid = p.grid()?;
                (
                    discharge::model(&p, t_end)?.0,
                    discharge::initial_state(&p, &grid)?,
                    grid,
                )
            }
        };
        Ok(Problem {
            splitter: Splitter::new(model, grid, self.reaction)?,
            u0,
            t_end,
        })
    }
}

/// `count` points evenly spaced in `log` over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
