//! Exact exponential of the 3-point Neumann Laplacian.
//!
//! The mirror-closed stencil is diagonalized by a type-I cosine transform,
//! computed here as a complex FFT of the even extension of length `2(n-1)`.
//! Two real rows are packed into one complex transform.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;

#[derive(Clone)]
pub struct DiffusionOperator {
    grid: Grid1D,
    coefficients: Vec<f64>,
    lambda: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DiffusionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionOperator")
            .field("grid", &self.grid)
            .field("coefficients", &self.coefficients)
            .finish()
    }
}

/// `expm1(z) / z`, continuous at 0.
fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

impl DiffusionOperator {
    pub fn new(grid: &Grid1D, coefficients: &[f64]) -> Result<Self> {
        if coefficients.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Config(format!(
                "diffusion coefficients must be >= 0: {coefficients:?}"
            )));
        }
        let n = grid.len();
        let big = 2 * (n - 1);
        let dx2 = grid.dx() * grid.dx();
        let lambda = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2 * (n - 1)) as f64).sin();
                // 2(1 - cos a) = 4 sin^2(a/2) avoids cancellation for small k
                -4.0 * s * s / dx2
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid: grid.clone(),
            coefficients: coefficients.to_vec(),
            lambda,
            fwd: planner.plan_fft_forward(big),
            inv: planner.plan_fft_inverse(big),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Eigenvalues `-(2/dx^2)(1 - cos(pi k/(n-1)))` of the Neumann Laplacian.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    /// 3-point Laplacian with mirror closure `u[-1] = u[1]`, `u[n] = u[n-2]`.
    pub fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        let inv = 1.0 / (self.grid.dx() * self.grid.dx());
        out[0] = 2.0 * (u[1] - u[0]) * inv;
        for k in 1..n - 1 {
            out[k] = (u[k - 1] - 2.0 * u[k] + u[k + 1]) * inv;
        }
        out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv;
    }

    /// Applies `op(row, spectrum)` to the cosine spectrum of each listed row of
    /// `data` (rows of length `n`). Rows are transformed in pairs.
    fn filter_rows(&self, data: &mut [f64], rows: &[usize], mut op: impl FnMut(usize, &mut [f64])) {
        let n = self.grid.len();
        let big = 2 * (n - 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); big];
        let mut scratch = vec![
            Complex64::new(0.0, 0.0);
            self.fwd
                .get_inplace_scratch_len()
                .max(self.inv.get_inplace_scratch_len())
        ];
        let mut sa = vec![0.0; n];
        let mut sb = vec![0.0; n];
        for pair in rows.chunks(2) {
            let ra = pair[0];
            let rb = pair.get(1).copied();
            {
                let a = &data[ra * n..(ra + 1) * n];
                for k in 0..n {
                    buf[k] = Complex64::new(a[k], 0.0);
                }
                if let Some(rb) = rb {
                    let b = &data[rb * n..(rb + 1) * n];
                    for k in 0..n {
                        buf[k].im = b[k];
                    }
                }
                for k in 1..n - 1 {
                    buf[big - k] = buf[k];
                }
            }
            self.fwd.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..n {
                sa[k] = buf[k].re;
                sb[k] = buf[k].im;
            }
            op(ra, &mut sa);
            if let Some(rb) = rb {
                op(rb, &mut sb);
            }
            for k in 0..n {
                buf[k] = Complex64::new(sa[k], if rb.is_some() { sb[k] } else { 0.0 });
            }
            for k in 1..n - 1 {
                buf[big - k] = buf[k];
            }
            self.inv.process_with_scratch(&mut buf, &mut scratch);
            let scale = 1.0 / big as f64;
            for k in 0..n {
                data[ra * n + k] = buf[k].re * scale;
            }
            if let Some(rb) = rb {
                for k in 0..n {
                    data[rb * n + k] = buf[k].im * scale;
                }
            }
        }
    }

    /// Cosine spectrum of one row (unnormalized forward transform).
    pub(crate) fn spectrum(&self, row: &[f64]) -> Vec<f64> {
        let mut tmp = row.to_vec();
        let mut out = Vec::new();
        self.filter_rows(&mut tmp, &[0], |_, s| out = s.to_vec());
        out
    }

    /// `u <- exp(tau D_j L) u` for every species row `j` of `values`.
    pub(crate) fn apply_in_place(&self, values: &mut [f64], tau: f64) {
        let rows: Vec<usize> = (0..self.coefficients.len())
            .filter(|&j| self.coefficients[j] > 0.0)
            .collect();
        if tau == 0.0 || rows.is_empty() {
            return;
        }
        self.filter_rows(values, &rows, |j, s| {
            let d = self.coefficients[j];
            for (sk, lk) in s.iter_mut().zip(&self.lambda) {
                *sk *= (tau * d * lk).exp();
            }
        });
    }

    /// Anchored update for rows `delta` (one per entry of `species`), where the
    /// state is `anchor + delta` and `lap_hat[r]` is the spectrum of `L anchor`:
    ///
    /// `delta <- exp(tau D L) delta + tau D phi1(tau D L) L anchor`.
    pub(crate) fn apply_anchored(
        &self,
        delta: &mut [f64],
        species: &[usize],
        lap_hat: &[Vec<f64>],
        tau: f64,
    ) {
        let rows: Vec<usize> = (0..species.len())
            .filter(|&r| self.coefficients[species[r]] > 0.0)
            .collect();
        if tau == 0.0 || rows.is_empty() {
            return;
        }
        self.filter_rows(delta, &rows, |r, s| {
            let d = self.coefficients[species[r]];
            let b = &lap_hat[r];
            for k in 0..s.len() {
                let z = tau * d * self.lambda[k];
                s[k] = z.exp() * s[k] + tau * d * phi1(z) * b[k];
            }
        });
    }

    /// Spectra of `L a_j` for each row of `anchor`; empty for rows with `D = 0`.
    pub(crate) fn anchor_spectra(&self, anchor: &[f64], species: &[usize]) -> Vec<Vec<f64>> {
        let n = self.grid.len();
        let mut lap = vec![0.0; n];
        species
            .iter()
            .enumerate()
            .map(|(r, &j)| {
                if self.coefficients[j] > 0.0 {
                    self.laplacian(&anchor[r * n..(r + 1) * n], &mut lap);
                    self.spectrum(&lap)
                } else {
                    Vec::new()
                }
            })
            .collect()
    }
}

/// Exact diffusion over `tau >= 0`; the time coordinate advances by `tau`.
pub fn diffuse_step(state: &FieldState, op: &DiffusionOperator, tau: f64) -> Result<FieldState> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!(
            "diffusion step must be >= 0, got {tau}"
        )));
    }
    state.check_shape(op.coefficients.len(), op.grid.len())?;
    let mut values = state.values().to_vec();
    op.apply_in_place(&mut values, tau);
    Ok(FieldState::from_parts(
        state.t() + tau,
        state.species_count(),
        state.point_count(),
        values,
    ))
}

/// Mean with trapezoidal weights; exactly conserved by Neumann diffusion.
pub fn trapezoid_mean(u: &[f64]) -> f64 {
    let n = u.len();
    let inner: f64 = u[1..n - 1].iter().sum();
    (inner + 0.5 * (u[0] + u[n - 1])) / (n - 1) as f64
}
