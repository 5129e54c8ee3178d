//! Model interface: reaction terms, diffusion coefficients, the monitored
//! species set and the event schedule.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Pointwise reaction term `u' = f(t, x, u)` for `m` species.
///
/// Jacobians are written row-major: `jac[i*m + j] = d f_i / d u_j`.
pub trait Reaction: Send + Sync {
    fn species(&self) -> usize;

    fn rates(&self, t: f64, x: f64, u: &[f64], out: &mut [f64]);

    fn jacobian(&self, t: f64, x: f64, u: &[f64], jac: &mut [f64]);

    /// Whether `f_i` may depend on `u_j`. The default is a dense pattern.
    fn depends_on(&self, i: usize, j: usize) -> bool {
        let _ = (i, j);
        true
    }
}

/// Scalar autonomous reaction with derivatives up to order four.
pub trait ScalarReaction: Send + Sync {
    /// Returns `[f, f', f'', f''', f'''']` at `u`.
    fn derivatives(&self, u: f64) -> [f64; 5];
}

/// Time at which the adaptive loop must stop, optionally restarting with a
/// prescribed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub reset_dt: Option<f64>,
}

#[derive(Clone)]
pub struct ModelSpec {
    names: Vec<String>,
    diffusion: Vec<f64>,
    reaction: Arc<dyn Reaction>,
    monitored: Vec<usize>,
    events: Vec<Event>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("names", &self.names)
            .field("diffusion", &self.diffusion)
            .field("monitored", &self.monitored)
            .field("events", &self.events.len())
            .finish()
    }
}

impl ModelSpec {
    /// All species are monitored and there are no events.
    pub fn new(
        names: Vec<String>,
        diffusion: Vec<f64>,
        reaction: Arc<dyn Reaction>,
    ) -> Result<Self> {
        let m = reaction.species();
        if m == 0 {
            return Err(Error::Config("model has no species".into()));
        }
        if names.len() != m || diffusion.len() != m {
            return Err(Error::Dimension(format!(
                "reaction has {m} species but {} names and {} diffusion coefficients",
                names.len(),
                diffusion.len()
            )));
        }
        if let Some(d) = diffusion.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::Config(format!(
                "diffusion coefficient {d} is not >= 0"
            )));
        }
        Ok(Self {
            names,
            diffusion,
            reaction,
            monitored: (0..m).collect(),
            events: Vec::new(),
        })
    }

    /// Restricts error estimation to `monitored` (0-based, sorted on return).
    ///
    /// The reaction rates of monitored species must not depend on excluded ones.
    pub fn with_monitored(mut self, mut monitored: Vec<usize>) -> Result<Self> {
        let m = self.species();
        monitored.sort_unstable();
        monitored.dedup();
        if monitored.is_empty() {
            return Err(Error::Config("monitored species set is empty".into()));
        }
        if let Some(&j) = monitored.iter().find(|&&j| j >= m) {
            return Err(Error::Config(format!(
                "monitored species {j} out of range 0..{m}"
            )));
        }
        for &i in &monitored {
            for j in (0..m).filter(|j| !monitored.contains(j)) {
                if self.reaction.depends_on(i, j) {
                    return Err(Error::Config(format!(
                        "monitored species {} depends on excluded species {}",
                        self.names[i], self.names[j]
                    )));
                }
            }
        }
        self.monitored = monitored;
        Ok(self)
    }

    pub fn with_events(mut self, events: Vec<Event>) -> Result<Self> {
        for w in events.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::Config(format!(
                    "event times must increase strictly ({} then {})",
                    w[0].time, w[1].time
                )));
            }
        }
        for e in &events {
            if !e.time.is_finite() {
                return Err(Error::Config(format!("event time {}", e.time)));
            }
            if let Some(dt) = e.reset_dt {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::Config(format!("event reset step {dt} is not > 0")));
                }
            }
        }
        self.events = events;
        Ok(self)
    }

    pub fn species(&self) -> usize {
        self.diffusion.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn reaction(&self) -> &dyn Reaction {
        self.reaction.as_ref()
    }

    pub fn monitored(&self) -> &[usize] {
        &self.monitored
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// First event strictly after `t`.
    pub fn next_event_after(&self, t: f64) -> Option<&Event> {
        let k = self.events.partition_point(|e| e.time <= t);
        self.events.get(k)
    }
}

/// Reaction built from two closures; handy for quick experiments and tests.
pub struct ClosureReaction<F, J> {
    m: usize,
    f: F,
    jac: J,
}

impl<F, J> ClosureReaction<F, J>
where
    F: Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync,
    J: Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(m: usize, f: F, jac: J) -> Self {
        Self { m, f, jac }
    }
}

impl<F, J> Reaction for ClosureReaction<F, J>
where
    F: Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync,
    J: Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn species(&self) -> usize {
        self.m
    }

    fn rates(&self, t: f64, x: f64, u: &[f64], out: &mut [f64]) {
        (self.f)(t, x, u, out)
    }

    fn jacobian(&self, t: f64, x: f64, u: &[f64], jac: &mut [f64]) {
        (self.jac)(t, x, u, jac)
    }
}

/// Linear reaction `u' = K u` with a constant row-major matrix `K`.
#[derive(Debug, Clone)]
pub struct LinearReaction {
    m: usize,
    k: Vec<f64>,
}

impl LinearReaction {
    pub fn new(m: usize, k: Vec<f64>) -> Result<Self> {
        if m == 0 || k.len() != m * m {
            return Err(Error::Dimension(format!(
                "linear reaction needs an {m}x{m} matrix, got {} entries",
                k.len()
            )));
        }
        Ok(Self { m, k })
    }

    pub fn scalar(lambda: f64) -> Self {
        Self {
            m: 1,
            k: vec![lambda],
        }
    }

    pub fn matrix(&self) -> &[f64] {
        &self.k
    }
}

impl Reaction for LinearReaction {
    fn species(&self) -> usize {
        self.m
    }

    fn rates(&self, _t: f64, _x: f64, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..self.m).map(|j| self.k[i * self.m + j] * u[j]).sum();
        }
    }

    fn jacobian(&self, _t: f64, _x: f64, _u: &[f64], jac: &mut [f64]) {
        jac.copy_from_slice(&self.k);
    }

    fn depends_on(&self, i: usize, j: usize) -> bool {
        self.k[i * self.m + j] != 0.0
    }
}

impl ScalarReaction for LinearReaction {
    fn derivatives(&self, u: f64) -> [f64; 5] {
        let l = self.k[0];
        [l * u, l, 0.0, 0.0, 0.0]
    }
}

/// `f = 0` for `m` species.
#[derive(Debug, Clone, Copy)]
pub struct ZeroReaction(pub usize);

impl Reaction for ZeroReaction {
    fn species(&self) -> usize {
        self.0
    }

    fn rates(&self, _t: f64, _x: f64, _u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn jacobian(&self, _t: f64, _x: f64, _u: &[f64], jac: &mut [f64]) {
        jac.fill(0.0);
    }

    fn depends_on(&self, _i: usize, _j: usize) -> bool {
        false
    }
}

impl ScalarReaction for ZeroReaction {
    fn derivatives(&self, _u: f64) -> [f64; 5] {
        [0.0; 5]
    }
}

/// Logistic growth `u' = r u (1 - u)`.
#[derive(Debug, Clone, Copy)]
pub struct Logistic(pub f64);

impl Reaction for Logistic {
    fn species(&self) -> usize {
        1
    }

    fn rates(&self, _t: f64, _x: f64, u: &[f64], out: &mut [f64]) {
        out[0] = self.0 * u[0] * (1.0 - u[0]);
    }

    fn jacobian(&self, _t: f64, _x: f64, u: &[f64], jac: &mut [f64]) {
        jac[0] = self.0 * (1.0 - 2.0 * u[0]);
    }
}

impl ScalarReaction for Logistic {
    fn derivatives(&self, u: f64) -> [f64; 5] {
        let r = self.0;
        [r * u * (1.0 - u), r * (1.0 - 2.0 * u), -2.0 * r, 0.0, 0.0]
    }
}
