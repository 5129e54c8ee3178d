//! `u_t = D u_xx + k u^2 (1 - u)` with its exact travelling front.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::model::{ModelSpec, Reaction, ScalarReaction};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct KppParams {
    pub k: f64,
    pub d: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Default for KppParams {
    fn default() -> Self {
        Self {
            k: 1.0,
            d: 1.0,
            x_min: -70.0,
            x_max: 70.0,
            n: 5001,
        }
    }
}

impl KppParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.d > 0.0 && self.k.is_finite() && self.d.is_finite()) {
            return Err(Error::Config(format!(
                "KPP needs k, D > 0, got k = {}, D = {}",
                self.k, self.d
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, self.n)
    }

    /// Front speed `sqrt(k D / 2)`.
    pub fn front_speed(&self) -> f64 {
        (self.k * self.d).sqrt() / std::f64::consts::SQRT_2
    }

    /// Largest slope of the front, `sqrt(k / D) / sqrt(32)`.
    pub fn max_gradient(&self) -> f64 {
        (self.k / self.d).sqrt() / 32f64.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kpp {
    pub k: f64,
}

/// `[f, f', f'', f''', f'''']` of `k u^2 (1 - u)`.
pub fn kpp_rhs(u: f64, k: f64) -> [f64; 5] {
    [
        k * u * u * (1.0 - u),
        k * (2.0 * u - 3.0 * u * u),
        k * (2.0 - 6.0 * u),
        -6.0 * k,
        0.0,
    ]
}

impl Reaction for Kpp {
    fn species(&self) -> usize {
        1
    }

    fn rates(&self, _t: f64, _x: f64, u: &[f64], out: &mut [f64]) {
        out[0] = self.k * u[0] * u[0] * (1.0 - u[0]);
    }

    fn jacobian(&self, _t: f64, _x: f64, u: &[f64], jac: &mut [f64]) {
        jac[0] = self.k * (2.0 * u[0] - 3.0 * u[0] * u[0]);
    }
}

impl ScalarReaction for Kpp {
    fn derivatives(&self, u: f64) -> [f64; 5] {
        kpp_rhs(u, self.k)
    }
}

/// Exact front `1 / (1 + exp((sqrt(k/D) x - k t / sqrt 2) / sqrt 2))`,
/// equal to 1/2 at `x = 0` when `t = 0`.
pub fn kpp_exact_front(x: f64, t: f64, p: &KppParams) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    let r = (p.k / p.d).sqrt() * x;
    let tau = p.k * t;
    1.0 / (1.0 + ((r - tau / s2) / s2).exp())
}

pub fn model(p: &KppParams) -> Result<ModelSpec> {
    p.validate()?;
    ModelSpec::new(vec!["u".into()], vec![p.d], Arc::new(Kpp { k: p.k }))
}

/// Exact front sampled at `t`.
pub fn initial_state(p: &KppParams, grid: &Grid1D, t: f64) -> Result<FieldState> {
    FieldState::from_fn(t, 1, grid, |_, x| kpp_exact_front(x, t, p))
}
