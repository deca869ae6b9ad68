//! Banded LU factorization with partial pivoting.
//!
//! The matrix is first reordered with reverse Cuthill-McKee so that FEM
//! systems (tridiagonal-like in 1D, narrow-banded in 2D) factor in
//! `O(n * bw^2)` rather than `O(n^3)`. Pivoting is row-wise within the band,
//! which widens the upper band by at most the lower bandwidth.

use std::collections::VecDeque;

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Pivots smaller than this times `||A||_inf` are treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<f64>,
    pivots: Vec<usize>,
    /// `perm[new] = old`
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::invalid(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for (r, c, _) in a.iter() {
            let (i, j) = (inv[r], inv[c]);
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for (r, c, v) in a.iter() {
            let (i, j) = (inv[r], inv[c]);
            band[i * width + j + kl - i] = v;
        }
        let mut lu = LuFactor {
            n,
            kl,
            ku,
            width,
            band,
            pivots: vec![0; n],
            perm,
        };
        lu.factor(PIVOT_TOLERANCE * a.norm_inf())?;
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth after reordering.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    fn factor(&mut self, tol: f64) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.band[self.at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.band[self.at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tol) {
                return Err(Error::SingularMatrix {
                    row: self.perm[k],
                    pivot: best,
                });
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.at(k, j), self.at(p, j));
                    self.band.swap(a, b);
                }
            }
            let pivot = self.band[self.at(k, k)];
            for i in k + 1..=last_row {
                let ik = self.at(i, k);
                let l = self.band[ik] / pivot;
                self.band[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let kj = self.band[self.at(k, j)];
                        let ij = self.at(i, j);
                        self.band[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.n, b.len())?;
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                x[i] -= self.band[self.at(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.band[self.at(k, j)] * x[j];
            }
            x[k] = s / self.band[self.at(k, k)];
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        Ok(out)
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, c, _) in a.iter() {
        if r != c {
            adj[r].push(c);
            adj[c].push(r);
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        let start = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut start = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(start, adj);
        let far = *levels.iter().flatten().max().unwrap_or(&0);
        if far <= ecc && ecc > 0 {
            break;
        }
        ecc = far;
        let cand = (0..adj.len())
            .filter(|&i| levels[i] == Some(far))
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        if cand == start {
            break;
        }
        start = cand;
    }
    start
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[start] = Some(0);
    let mut q = VecDeque::from([start]);
    while let Some(v) = q.pop_front() {
        let l = level[v].unwrap();
        for &u in &adj[v] {
            if level[u].is_none() {
                level[u] = Some(l + 1);
                q.push_back(u);
            }
        }
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;
    use proptest::prelude::*;

    fn dense_matvec(n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
    }

    #[test]
    fn needs_pivoting() {
        let a = CsrMatrix::from_dense(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let lu = LuFactor::new(&a).unwrap();
        assert_eq!(lu.solve(&[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_detected() {
        let a = CsrMatrix::from_dense(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(LuFactor::new(&a), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn tridiagonal_has_unit_bandwidth_after_scrambling() {
        let n = 50;
        // tridiagonal in a scrambled numbering
        let p: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.add(p[i], p[i], 2.0);
            if i + 1 < n {
                b.add(p[i], p[i + 1], -1.0);
                b.add(p[i + 1], p[i], -1.0);
            }
        }
        let a = b.build();
        let lu = LuFactor::new(&a).unwrap();
        assert_eq!(lu.bandwidths(), (1, 1));
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let y = lu.solve(&a.mul_vec(&x)).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn random_dense_systems_solve(seed in 0u64..1000, n in 1usize..12) {
            // diagonally shifted pseudo-random matrix, mixed signs
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5 };
            let mut a: Vec<f64> = (0..n * n).map(|_| next()).collect();
            for i in 0..n { a[i * n + i] += if i % 2 == 0 { 3.0 } else { -3.0 }; }
            let x: Vec<f64> = (0..n).map(|_| next()).collect();
            let b = dense_matvec(n, &a, &x);
            let lu = LuFactor::new(&CsrMatrix::from_dense(n, n, &a)).unwrap();
            let y = lu.solve(&b).unwrap();
            for (u, v) in x.iter().zip(&y) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
