//! Three-variable Belousov-Zhabotinsky model (Oregonator form).
//!
//! Species: `a` (bromide), `b` (bromous acid), `c` (oxidized catalyst).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::model::{ModelSpec, Reaction};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct BzParams {
    pub epsilon: f64,
    pub mu: f64,
    pub f: f64,
    pub q: f64,
    pub d: [f64; 3],
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    /// The initial excitation occupies `x < front_x`.
    pub front_x: f64,
    /// Width of the tanh profile of the excitation.
    pub front_width: f64,
}

impl Default for BzParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            mu: 1e-5,
            f: 3.0,
            q: 2e-4,
            d: [1.0, 1.0, 0.6],
            x_min: 0.0,
            x_max: 80.0,
            n: 4001,
            front_x: 4.0,
            front_width: 0.5,
        }
    }
}

impl BzParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.mu > 0.0 && self.q > 0.0 && self.f > 0.0) {
            return Err(Error::Config("BZ needs epsilon, mu, f, q > 0".into()));
        }
        if self.mu >= self.epsilon {
            log::warn!("BZ parameters with mu >= epsilon lose the usual time-scale separation");
        }
        if !(self.front_width > 0.0) {
            return Err(Error::Config("BZ front width must be > 0".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, self.n)
    }

    /// Homogeneous rest state `(a*, b*, c*)`.
    pub fn steady_state(&self) -> [f64; 3] {
        let (f, q) = (self.f, self.q);
        let s = f + q - 1.0;
        let b = 0.5 * (-s + (s * s + 4.0 * q * (f + 1.0)).sqrt());
        [f * b / (q + b), b, b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bz {
    pub epsilon: f64,
    pub mu: f64,
    pub f: f64,
    pub q: f64,
}

impl Bz {
    pub fn new(p: &BzParams) -> Self {
        Self {
            epsilon: p.epsilon,
            mu: p.mu,
            f: p.f,
            q: p.q,
        }
    }
}

/// Rates `((-qa - ab + fc)/mu, (qa - ab + b(1-b))/epsilon, b - c)`.
pub fn bz_rhs(a: f64, b: f64, c: f64, p: &Bz) -> [f64; 3] {
    [
        (-p.q * a - a * b + p.f * c) / p.mu,
        (p.q * a - a * b + b * (1.0 - b)) / p.epsilon,
        b - c,
    ]
}

impl Reaction for Bz {
    fn species(&self) -> usize {
        3
    }

    fn rates(&self, _t: f64, _x: f64, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&bz_rhs(u[0], u[1], u[2], self));
    }

    fn jacobian(&self, _t: f64, _x: f64, u: &[f64], jac: &mut [f64]) {
        let (a, b) = (u[0], u[1]);
        let (mu, e) = (self.mu, self.epsilon);
        jac.copy_from_slice(&[
            (-self.q - b) / mu,
            -a / mu,
            self.f / mu,
            (self.q - b) / e,
            (-a + 1.0 - 2.0 * b) / e,
            0.0,
            0.0,
            1.0,
            -1.0,
        ]);
    }

    fn depends_on(&self, i: usize, j: usize) -> bool {
        !(i == 1 && j == 2 || i == 2 && j == 0)
    }
}

pub fn model(p: &BzParams) -> Result<ModelSpec> {
    p.validate()?;
    ModelSpec::new(
        vec!["a".into(), "b".into(), "c".into()],
        p.d.to_vec(),
        Arc::new(Bz::new(p)),
    )
}

/// Rest state with `b` raised to 1 and `a` depleted on the left.
pub fn initial_state(p: &BzParams, grid: &Grid1D) -> Result<FieldState> {
    let [a0, b0, c0] = p.steady_state();
    FieldState::from_fn(0.0, 3, grid, |j, x| {
        let s = 0.5 * (1.0 - ((x - p.front_x) / p.front_width).tanh());
        match j {
            0 => a0 * (1.0 - s),
            1 => b0 + (1.0 - b0) * s,
            _ => c0,
        }
    })
}
