//! Simplified pulsed discharge: electrons, positive and negative ions
//! driven by an imposed field over a seed region.
//!
//! Time is in seconds, lengths in centimetres, densities in cm^-3 and the
//! field in kV/cm.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::model::{Event, ModelSpec, Reaction};

/// Sign of the electron-ion recombination term in the electron equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum RecombinationSign {
    /// `+ beta_ep n_e n_p`, as the model is usually printed.
    AsPrinted,
    /// `- beta_ep n_e n_p`.
    Physical,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct DischargeParams {
    pub gap: f64,
    pub seed: (f64, f64),
    pub e_pulse: f64,
    pub pulse: f64,
    pub period: f64,
    pub d: f64,
    pub n: usize,
    /// `nu_ion = k_ion exp(-e_ion / E)`.
    pub k_ion: f64,
    pub e_ion: f64,
    /// `nu_att = nu_att_pulse * E / e_pulse`.
    pub nu_att_pulse: f64,
    pub beta_ep: f64,
    pub beta_np: f64,
    pub recombination_sign: RecombinationSign,
    pub seed_density: f64,
    /// Uniform quasi-neutral background (`n_e = n_n = bg`, `n_p = 2 bg`).
    pub background: f64,
}

impl Default for DischargeParams {
    fn default() -> Self {
        Self {
            gap: 0.5,
            seed: (0.0, 0.01),
            e_pulse: 40.0,
            pulse: 10e-9,
            period: 1e-6,
            d: 50.0,
            n: 1001,
            k_ion: 1.1e8 * 5f64.exp(),
            e_ion: 200.0,
            nu_att_pulse: 1e7,
            beta_ep: 2e-7,
            beta_np: 2e-7,
            recombination_sign: RecombinationSign::Physical,
            seed_density: 1e10,
            background: 1e6,
        }
    }
}

impl DischargeParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.gap) && pos(self.pulse) && pos(self.period) && pos(self.d)) {
            return Err(Error::Config(
                "discharge gap, pulse, period and D must be > 0".into(),
            ));
        }
        if self.pulse >= self.period {
            return Err(Error::Config(format!(
                "pulse duration {} must be shorter than the period {}",
                self.pulse, self.period
            )));
        }
        let nonneg = [
            self.e_pulse,
            self.k_ion,
            self.e_ion,
            self.nu_att_pulse,
            self.beta_ep,
            self.beta_np,
        ];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config(
                "discharge field and rate coefficients must be >= 0".into(),
            ));
        }
        if !(self.seed.0 < self.seed.1) {
            return Err(Error::Config("seed region must be non-empty".into()));
        }
        if !(self.seed_density >= 0.0 && self.background >= 0.0) {
            return Err(Error::Config("initial densities must be >= 0".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(0.0, self.gap, self.n)
    }

    pub fn nu_ion(&self, e: f64) -> f64 {
        if e > 0.0 {
            self.k_ion * (-self.e_ion / e).exp()
        } else {
            0.0
        }
    }

    pub fn nu_att(&self, e: f64) -> f64 {
        self.nu_att_pulse * e / self.e_pulse
    }

    /// Pulse starts (restarting at the pulse length) and pulse ends, up to `t_end`.
    pub fn events(&self, t_end: f64) -> Vec<Event> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let start = k as f64 * self.period;
            if start > t_end {
                break;
            }
            if k > 0 {
                out.push(Event {
                    time: start,
                    reset_dt: Some(self.pulse),
                });
            }
            let end = start + self.pulse;
            if end <= t_end {
                out.push(Event {
                    time: end,
                    reset_dt: None,
                });
            }
            k += 1;
        }
        out
    }
}

/// Imposed field: `E_pulse` inside the seed region during each pulse.
pub fn field_profile(x: f64, t: f64, p: &DischargeParams) -> f64 {
    let phase = t.rem_euclid(p.period);
    if phase < p.pulse && x >= p.seed.0 && x <= p.seed.1 {
        p.e_pulse
    } else {
        0.0
    }
}

#[derive(Debug)]
pub struct Discharge {
    p: DischargeParams,
    clamped: AtomicUsize,
}

impl Discharge {
    pub fn new(p: &DischargeParams) -> Self {
        Self {
            p: p.clone(),
            clamped: AtomicUsize::new(0),
        }
    }

    /// Number of rate evaluations that met a negative density.
    pub fn clamped_count(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }

    fn clamp(&self, u: &[f64]) -> [f64; 3] {
        if u.iter().any(|v| *v < 0.0) {
            self.clamped.fetch_add(1, Ordering::Relaxed);
        }
        [u[0].max(0.0), u[1].max(0.0), u[2].max(0.0)]
    }

    fn sign(&self) -> f64 {
        match self.p.recombination_sign {
            RecombinationSign::AsPrinted => 1.0,
            RecombinationSign::Physical => -1.0,
        }
    }
}

/// Rates of `(n_e, n_p, n_n)` in field `e`; negative inputs are treated as zero.
pub fn discharge_rhs(ne: f64, np: f64, nn: f64, e: f64, p: &DischargeParams) -> [f64; 3] {
    let (ne, np, nn) = (ne.max(0.0), np.max(0.0), nn.max(0.0));
    let s = match p.recombination_sign {
        RecombinationSign::AsPrinted => 1.0,
        RecombinationSign::Physical => -1.0,
    };
    let (ion, att) = (p.nu_ion(e), p.nu_att(e));
    [
        (ion - att) * ne + s * p.beta_ep * ne * np,
        ion * ne - p.beta_ep * ne * np + p.beta_np * nn * np,
        att * ne - p.beta_np * nn * np,
    ]
}

impl Reaction for Discharge {
    fn species(&self) -> usize {
        3
    }

    fn rates(&self, t: f64, x: f64, u: &[f64], out: &mut [f64]) {
        let [ne, np, nn] = self.clamp(u);
        out.copy_from_slice(&discharge_rhs(
            ne,
            np,
            nn,
            field_profile(x, t, &self.p),
            &self.p,
        ));
    }

    fn jacobian(&self, t: f64, x: f64, u: &[f64], jac: &mut [f64]) {
        let [ne, np, nn] = [u[0].max(0.0), u[1].max(0.0), u[2].max(0.0)];
        let p = &self.p;
        let e = field_profile(x, t, p);
        let (ion, att, s) = (p.nu_ion(e), p.nu_att(e), self.sign());
        let (bep, bnp) = (p.beta_ep, p.beta_np);
        jac.copy_from_slice(&[
            ion - att + s * bep * np,
            s * bep * ne,
            0.0,
            ion - bep * np,
            -bep * ne + bnp * nn,
            bnp * np,
            att,
            -bnp * nn,
            -bnp * np,
        ]);
    }
}

pub fn model(p: &DischargeParams, t_end: f64) -> Result<(ModelSpec, Arc<Discharge>)> {
    p.validate()?;
    let r = Arc::new(Discharge::new(p));
    let spec = ModelSpec::new(
        vec!["n_e".into(), "n_p".into(), "n_n".into()],
        vec![p.d; 3],
        r.clone(),
    )?
    .with_events(p.events(t_end))?;
    Ok((spec, r))
}

/// Quasi-neutral background plus a Gaussian electron/ion seed at the
/// left end, with `1/e` half-width equal to half the seed region.
pub fn initial_state(p: &DischargeParams, grid: &Grid1D) -> Result<FieldState> {
    let w = 0.5 * (p.seed.1 - p.seed.0);
    FieldState::from_fn(0.0, 3, grid, |j, x| {
        let g = p.seed_density * (-((x - p.seed.0) / w).powi(2)).exp();
        match j {
            0 => p.background + g,
            1 => 2.0 * p.background + g,
            _ => p.background,
        }
    })
}
