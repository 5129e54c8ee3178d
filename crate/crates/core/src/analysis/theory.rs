//! Leading splitting-error terms and the matrix-exponential oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::ScalarReaction;

/// `e^{tM}` by scaling and squaring with a Padé core.
pub fn expm_dense(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "expm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() > 64 {
        return Err(Error::Dimension(format!(
            "expm supports dimension <= 64, got {}",
            m.nrows()
        )));
    }
    if !t.is_finite() || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite expm input".into()));
    }
    let e = (m * t).exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "expm overflow (|tM|_1 = {:e})",
            (m * t).abs().column_sum().max()
        )));
    }
    Ok(e)
}

/// `[x, y] = xy - yx`.
pub fn commutator(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y - y * x
}

/// Linear test problem `u' = (A + B) u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSplitProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    u0: DVector<f64>,
}

impl LinearSplitProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, u0: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.shape() != (n, n) || u0.len() != n {
            return Err(Error::Dimension(format!(
                "A is {:?}, B is {:?}, u0 has {} entries",
                a.shape(),
                b.shape(),
                u0.len()
            )));
        }
        if n > 16 {
            return Err(Error::Dimension(format!(
                "dimension must be <= 16, got {n}"
            )));
        }
        if a.iter()
            .chain(b.iter())
            .chain(u0.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Numeric("non-finite entry in A, B or u0".into()));
        }
        Ok(Self { a, b, u0 })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn u0(&self) -> &DVector<f64> {
        &self.u0
    }

    /// `e^{(1/2-eps)tA} e^{tB} e^{(1/2+eps)tA} u0`.
    pub fn shifted_strang(&self, t: f64, eps: f64) -> Result<DVector<f64>> {
        let first = expm_dense(&self.a, (0.5 + eps) * t)?;
        let mid = expm_dense(&self.b, t)?;
        let last = expm_dense(&self.a, (0.5 - eps) * t)?;
        Ok(last * (mid * (first * &self.u0)))
    }

    pub fn exact(&self, t: f64) -> Result<DVector<f64>> {
        Ok(expm_dense(&(&self.a + &self.b), t)? * &self.u0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorTerms {
    /// Exact minus shifted Strang.
    pub lhs: DVector<f64>,
    /// `eps t^2 [A,B] u0 + t^3/24 ([A,[A,B]] + 2[B,[A,B]]) u0`, where the
    /// `(1/2 + eps)` flow of `A` acts first.
    pub leading: DVector<f64>,
    pub residual: f64,
}

pub fn commutator_residual(p: &LinearSplitProblem, t: f64, eps: f64) -> Result<CommutatorTerms> {
    let lhs = p.exact(t)? - p.shifted_strang(t, eps)?;
    let ab = commutator(&p.a, &p.b);
    let third = commutator(&p.a, &ab) + commutator(&p.b, &ab) * 2.0;
    let leading = (&ab * &p.u0) * (eps * t * t) + (third * &p.u0) * (t * t * t / 24.0);
    let residual = (&lhs - &leading).norm();
    Ok(CommutatorTerms {
        lhs,
        leading,
        residual,
    })
}

/// First and second derivatives by fourth-order differences, one-sided near
/// the ends.
pub fn derivatives4(u: &[f64], dx: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = u.len();
    if n < 6 {
        return Err(Error::Dimension(format!(
            "fourth-order stencils need >= 6 points, got {n}"
        )));
    }
    let (c1, c2) = (1.0 / (12.0 * dx), 1.0 / (12.0 * dx * dx));
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 2..n - 2 {
        d1[i] = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) * c1;
        d2[i] = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) * c2;
    }
    let edge = |v: &dyn Fn(usize) -> f64| {
        let p0 = (-25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4)) * c1;
        let p1 = (-3.0 * v(0) - 10.0 * v(1) + 18.0 * v(2) - 6.0 * v(3) + v(4)) * c1;
        let q0 = (45.0 * v(0) - 154.0 * v(1) + 214.0 * v(2) - 156.0 * v(3) + 61.0 * v(4)
            - 10.0 * v(5))
            * c2;
        let q1 = (10.0 * v(0) - 15.0 * v(1) - 4.0 * v(2) + 14.0 * v(3) - 6.0 * v(4) + v(5)) * c2;
        (p0, p1, q0, q1)
    };
    let (p0, p1, q0, q1) = edge(&|k| u[k]);
    d1[0] = p0;
    d1[1] = p1;
    d2[0] = q0;
    d2[1] = q1;
    let (p0, p1, q0, q1) = edge(&|k| u[n - 1 - k]);
    d1[n - 1] = -p0;
    d1[n - 2] = -p1;
    d2[n - 1] = q0;
    d2[n - 2] = q1;
    Ok((d1, d2))
}

/// Pointwise leading error of `S2,eps` against the exact flow for
/// `u_t = D u_xx + k f(u)`, with `f` the unscaled reaction:
///
/// `-eps k D t^2 f'' u'^2 + k^2 D t^3/24 (f'f'' + f f''') u'^2
///  - k D^2 t^3/12 f'''' u'^4 - k D^2 t^3/3 f''' u'^2 u'' - k D^2 t^3/6 f'' u''^2`.
pub fn leading_error_strang(
    u0: &[f64],
    dx: f64,
    f: &dyn ScalarReaction,
    k: f64,
    d: f64,
    eps: f64,
    t: f64,
) -> Result<Vec<f64>> {
    let (d1, d2) = derivatives4(u0, dx)?;
    let (t2, t3) = (t * t, t * t * t);
    Ok(u0
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(&u, (&g, &h))| {
            let [f0, f1, f2, f3, f4] = f.derivatives(u);
            let g2 = g * g;
            -eps * k * d * t2 * f2 * g2 + k * k * d * t3 / 24.0 * (f1 * f2 + f0 * f3) * g2
                - k * d * d * t3 / 12.0 * f4 * g2 * g2
                - k * d * d * t3 / 3.0 * f3 * g2 * h
                - k * d * d * t3 / 6.0 * f2 * h * h
        })
        .collect())
}

/// `sqrt(sum(v^2) dx)`.
pub fn l2_norm(v: &[f64], dx: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt()
}

/// The constants `(M1, M2)` of the `eps t^2` and `t^3` leading terms for
/// `k = D = 1`.
pub fn compute_m1_m2(u0: &[f64], dx: f64, f: &dyn ScalarReaction) -> Result<(f64, f64)> {
    let (d1, d2) = derivatives4(u0, dx)?;
    let mut g1 = Vec::with_capacity(u0.len());
    let mut g2 = Vec::with_capacity(u0.len());
    for (&u, (&g, &h)) in u0.iter().zip(d1.iter().zip(&d2)) {
        let [f0, f1, f2, f3, f4] = f.derivatives(u);
        let gg = g * g;
        g1.push(f2 * gg);
        g2.push(
            (f1 * f2 + f0 * f3) / 24.0 * gg
                - f4 / 12.0 * gg * gg
                - f3 / 3.0 * gg * h
                - f2 / 6.0 * h * h,
        );
    }
    Ok((l2_norm(&g1, dx), l2_norm(&g2, dx)))
}

/// Predicted critical step `eps M1 / (k M2)`; infinite when `M2 = 0`.
pub fn dt_star_theory(m1: f64, m2: f64, eps: f64, k: f64) -> f64 {
    if m2 == 0.0 {
        f64::INFINITY
    } else {
        eps * m1 / (k * m2)
    }
}
