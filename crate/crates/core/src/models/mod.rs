//! The three test models: KPP fronts, the three-variable
//! Belousov-Zhabotinsky system and a pulsed gas discharge.

pub mod bz;
pub mod discharge;
pub mod kpp;

/// Central finite-difference Jacobian, row-major.
#[cfg(test)]
pub(crate) fn fd_jacobian(r: &dyn crate::model::Reaction, t: f64, x: f64, u: &[f64]) -> Vec<f64> {
    let m = u.len();
    let mut jac = vec![0.0; m * m];
    let (mut fp, mut fm) = (vec![0.0; m], vec![0.0; m]);
    for j in 0..m {
        let h = 1e-6 * u[j].abs().max(1e-3);
        let mut up = u.to_vec();
        let mut um = u.to_vec();
        up[j] += h;
        um[j] -= h;
        r.rates(t, x, &up, &mut fp);
        r.rates(t, x, &um, &mut fm);
        for i in 0..m {
            jac[i * m + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Max over entries of `|a - b| / max(|b|, scale)`.
#[cfg(test)]
pub(crate) fn rel_dev(a: &[f64], b: &[f64], scale: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(scale))
        .fold(0.0, f64::max)
}
