//! LU factorizations used by the Rosenbrock solver: a small dense one for
//! pointwise reaction systems and a banded one for the coupled reference system.

/// In-place LU with partial pivoting of a row-major `n x n` matrix.
/// Returns `false` if a pivot is exactly zero or not finite.
pub(crate) fn dense_lu(a: &mut [f64], n: usize, piv: &mut [usize]) -> bool {
    match n {
        1 => lu_impl::<1>(a, piv),
        2 => lu_impl::<2>(a, piv),
        3 => lu_impl::<3>(a, piv),
        4 => lu_impl::<4>(a, piv),
        5 => lu_impl::<5>(a, piv),
        6 => lu_impl::<6>(a, piv),
        _ => lu_any(a, n, piv),
    }
}

/// Solves with the factors from [`dense_lu`], overwriting `b`.
pub(crate) fn dense_solve(lu: &[f64], n: usize, piv: &[usize], b: &mut [f64]) {
    match n {
        1 => solve_impl::<1>(lu, piv, b),
        2 => solve_impl::<2>(lu, piv, b),
        3 => solve_impl::<3>(lu, piv, b),
        4 => solve_impl::<4>(lu, piv, b),
        5 => solve_impl::<5>(lu, piv, b),
        6 => solve_impl::<6>(lu, piv, b),
        _ => solve_any(lu, n, piv, b),
    }
}

// Small fixed sizes get fully unrolled loops.
#[inline(always)]
fn lu_impl<const N: usize>(a: &mut [f64], piv: &mut [usize]) -> bool {
    lu_any(&mut a[..N * N], N, &mut piv[..N])
}

#[inline(always)]
fn solve_impl<const N: usize>(lu: &[f64], piv: &[usize], b: &mut [f64]) {
    solve_any(&lu[..N * N], N, &piv[..N], &mut b[..N])
}

#[inline(always)]
fn lu_any(a: &mut [f64], n: usize, piv: &mut [usize]) -> bool {
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > 0.0 && best.is_finite()) {
            return false;
        }
        piv[k] = p;
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
        }
        let inv = 1.0 / a[k * n + k];
        for i in k + 1..n {
            let l = a[i * n + k] * inv;
            a[i * n + k] = l;
            if l != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= l * a[k * n + j];
                }
            }
        }
    }
    true
}

#[inline(always)]
fn solve_any(lu: &[f64], n: usize, piv: &[usize], b: &mut [f64]) {
    for k in 0..n {
        b.swap(k, piv[k]);
    }
    for i in 1..n {
        let mut s = b[i];
        for j in 0..i {
            s -= lu[i * n + j] * b[j];
        }
        b[i] = s;
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= lu[k * n + j] * b[j];
        }
        b[k] = s / lu[k * n + k];
    }
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, stored row-wise
/// with room for the `kl` extra super-diagonals created by pivoting.
///
/// Entry `(i, j)` lives at `i * w + (j + kl - i)` with `w = 2 kl + ku + 1`.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandMatrix {
    pub(crate) fn new(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            w,
            data: vec![0.0; n * w],
            piv: vec![0; n],
        }
    }

    pub(crate) fn clear(&mut self) {
        self.data.fill(0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.w + (j + self.kl - i)
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// Sets `self = shift * I - other` (same shape).
    pub(crate) fn assign_shifted(&mut self, other: &BandMatrix, shift: f64) {
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d = -s;
        }
        for i in 0..self.n {
            self.add(i, i, shift);
        }
    }

    /// Factorizes in place. Returns `false` on a zero or non-finite pivot.
    pub(crate) fn factor(&mut self) -> bool {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0 && best.is_finite()) {
                return false;
            }
            self.piv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let inv = 1.0 / self.get(k, k);
            for i in k + 1..=last {
                let l = self.get(i, k) * inv;
                self.set(i, k, l);
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let u = self.get(k, j);
                        self.add(i, j, -l * u);
                    }
                }
            }
        }
        true
    }

    pub(crate) fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.get(i, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.get(k, j) * b[j];
            }
            b[k] = s / self.get(k, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn matvec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    }

    #[test]
    fn dense_solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..7 {
            let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut b = matvec(&a, n, &x);
            let mut lu = a.clone();
            let mut piv = vec![0; n];
            assert!(dense_lu(&mut lu, n, &mut piv));
            dense_solve(&lu, n, &piv, &mut b);
            for i in 0..n {
                assert!((b[i] - x[i]).abs() < 1e-10, "n={n} {} {}", b[i], x[i]);
            }
        }
    }

    #[test]
    fn dense_detects_singular() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut piv = vec![0; 2];
        assert!(!dense_lu(&mut a, 2, &mut piv));
    }

    #[test]
    fn banded_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (n, kl, ku) = (40, 3, 2);
        let mut dense = vec![0.0; n * n];
        let mut band = BandMatrix::new(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal so that pivoting actually happens
                let v = rng.random_range(-1.0..1.0) + if i == j { 0.1 } else { 0.0 };
                dense[i * n + j] = v;
                band.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut b = matvec(&dense, n, &x);
        assert!(band.factor());
        band.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-9, "i={i}: {} vs {}", b[i], x[i]);
        }
    }
}
