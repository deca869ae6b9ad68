//! Sparse storage, direct solves and the small amount of spectral machinery
//! needed by the oracle and the eigenvalue checks.

mod csr;
mod lu;

pub use csr::{CsrMatrix, TripletBuilder};
pub use lu::{reverse_cuthill_mckee, LuFactor, PIVOT_TOLERANCE};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Extreme eigenvalue magnitudes of a square matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub rho_min: f64,
    pub rho_max: f64,
    pub iterations: usize,
}

/// Estimate `min |lambda|` and `max |lambda|` by power iteration on `A` and
/// on `A^{-1}` (through an LU factorization).
///
/// Intended for symmetric matrices, where the Rayleigh quotient converges
/// at twice the rate of the iterate itself.
pub fn spectral_bounds(a: &CsrMatrix, tol: f64, max_iters: usize) -> Result<SpectralBounds> {
    let lu = LuFactor::new(a)?;
    let (rho_max, it_a) = power_iteration(|x| Ok(a.mul_vec(x)), a.rows(), tol, max_iters)?;
    let (inv_max, it_b) = power_iteration(|x| lu.solve(x), a.rows(), tol, max_iters)?;
    Ok(SpectralBounds {
        rho_min: 1.0 / inv_max,
        rho_max,
        iterations: it_a.max(it_b),
    })
}

/// Dominant eigenvalue magnitude of the operator `apply`.
pub fn power_iteration(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>>,
    n: usize,
    tol: f64,
    max_iters: usize,
) -> Result<(f64, usize)> {
    if n == 0 {
        return Err(Error::invalid("power iteration on an empty operator"));
    }
    // deterministic start vector with components in every direction
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662).sin()).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut estimate = 0.0;
    for it in 1..=max_iters {
        let y = apply(&x)?;
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok((0.0, it));
        }
        // |A x| with |x| = 1 approaches rho from below for symmetric A
        let next = ny;
        x = y.into_iter().map(|v| v / ny).collect();
        if (next - estimate).abs() <= tol * next {
            return Ok((next, it));
        }
        estimate = next;
    }
    Ok((estimate, max_iters))
}

/// Dense Cholesky factorization test: true when every pivot is positive.
pub fn cholesky_succeeds(a: &CsrMatrix) -> bool {
    let n = a.rows();
    let mut l = a.to_dense();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_spectrum() {
        let a = CsrMatrix::from_dense(3, 3, &[2.0, 0.0, 0.0, 0.0, -5.0, 0.0, 0.0, 0.0, 0.5]);
        let s = spectral_bounds(&a, 1e-14, 10_000).unwrap();
        assert!((s.rho_max - 5.0).abs() < 1e-10);
        assert!((s.rho_min - 0.5).abs() < 1e-10);
    }

    #[test]
    fn cholesky_distinguishes_definiteness() {
        assert!(cholesky_succeeds(&CsrMatrix::from_dense(2, 2, &[2.0, -1.0, -1.0, 2.0])));
        assert!(!cholesky_succeeds(&CsrMatrix::from_dense(2, 2, &[1.0, 2.0, 2.0, 1.0])));
    }
}
