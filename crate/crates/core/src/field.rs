use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// `m` species sampled on `n` grid points at time `t`.
///
/// Values are stored species-major: species `j` occupies `values[j*n..(j+1)*n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    t: f64,
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl FieldState {
    pub fn new(t: f64, m: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Dimension(format!(
                "empty field ({m} species x {n} points)"
            )));
        }
        if values.len() != m * n {
            return Err(Error::Dimension(format!(
                "expected {} values for {m} species x {n} points, got {}",
                m * n,
                values.len()
            )));
        }
        if !t.is_finite() {
            return Err(Error::Numeric(format!("field time {t}")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "species {} point {} is {}",
                pos / n,
                pos % n,
                values[pos]
            )));
        }
        Ok(Self { t, m, n, values })
    }

    /// Samples `profile(species, x)` on every grid point.
    pub fn from_fn(
        t: f64,
        m: usize,
        grid: &Grid1D,
        profile: impl Fn(usize, f64) -> f64,
    ) -> Result<Self> {
        let n = grid.len();
        let mut values = Vec::with_capacity(m * n);
        for j in 0..m {
            values.extend((0..n).map(|k| profile(j, grid.x(k))));
        }
        Self::new(t, m, n, values)
    }

    /// Unchecked constructor for values produced by the integrators.
    pub(crate) fn from_parts(t: f64, m: usize, n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), m * n);
        Self { t, m, n, values }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn species_count(&self) -> usize {
        self.m
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn species(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// New state holding only the listed species rows, in the given order.
    pub fn select(&self, species: &[usize]) -> FieldState {
        let mut values = Vec::with_capacity(species.len() * self.n);
        for &j in species {
            values.extend_from_slice(self.species(j));
        }
        FieldState::from_parts(self.t, species.len(), self.n, values)
    }

    pub(crate) fn check_shape(&self, m: usize, n: usize) -> Result<()> {
        if self.m != m || self.n != n {
            return Err(Error::Dimension(format!(
                "state is {}x{}, expected {m}x{n}",
                self.m, self.n
            )));
        }
        Ok(())
    }
}
