//! Normalized L² norms.
//!
//! All reductions sum sequentially in index order, so results do not depend
//! on how callers parallelize.

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::model::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub floor: f64,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self { floor: 1e-30 }
    }
}

impl NormSpec {
    pub fn new(floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::Config(format!(
                "norm floor must be > 0, got {floor}"
            )));
        }
        Ok(Self { floor })
    }
}

/// `sqrt(sum(v_i^2) / n)`.
pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().fold(0.0, |s, x| s + x * x) / v.len() as f64).sqrt()
}

pub(crate) fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    let s = a.iter().zip(b).fold(0.0, |s, (x, y)| {
        let d = x - y;
        s + d * d
    });
    (s / a.len() as f64).sqrt()
}

/// `rms(a - b) / max(rms(reference), floor)`.
pub fn normalized_l2_diff(a: &[f64], b: &[f64], reference: &[f64], norm: NormSpec) -> Result<f64> {
    if a.len() != b.len() || a.len() != reference.len() {
        return Err(Error::Dimension(format!(
            "vector lengths differ: {}, {}, {}",
            a.len(),
            b.len(),
            reference.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Dimension("empty vectors".into()));
    }
    if a.iter().chain(b).chain(reference).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entry in norm input".into()));
    }
    Ok(rms_diff(a, b) / rms(reference).max(norm.floor))
}

/// Largest normalized difference over the monitored species of `spec`.
pub fn monitored_err(
    a: &FieldState,
    b: &FieldState,
    reference: &FieldState,
    spec: &ModelSpec,
    norm: NormSpec,
) -> Result<f64> {
    if spec.monitored().is_empty() {
        return Err(Error::Config("monitored species set is empty".into()));
    }
    let (m, n) = (spec.species(), a.point_count());
    a.check_shape(m, n)?;
    b.check_shape(m, n)?;
    reference.check_shape(m, n)?;
    let mut err: f64 = 0.0;
    for &j in spec.monitored() {
        err = err.max(normalized_l2_diff(
            a.species(j),
            b.species(j),
            reference.species(j),
            norm,
        )?);
    }
    Ok(err)
}
