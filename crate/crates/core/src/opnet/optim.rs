//! Adam and a limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

use crate::error::Result;
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerConfig {
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        /// Learning rate at the last epoch, as a fraction of `lr`
        /// (exponential decay in between; 1 keeps it constant).
        final_lr_fraction: f64,
    },
    Lbfgs {
        lr: f64,
        history: usize,
        max_inner: usize,
        tolerance: f64,
    },
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            final_lr_fraction: 1.0,
        }
    }

    /// History 10, 10 inner iterations, tolerance 1e-15.
    pub fn lbfgs() -> Self {
        OptimizerConfig::Lbfgs {
            lr: 1.0,
            history: 10,
            max_inner: 10,
            tolerance: 1e-15,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Adam { .. } => "adam",
            OptimizerConfig::Lbfgs { .. } => "lbfgs",
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::adam(1e-3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, beta1: f64, beta2: f64, eps: f64) {
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lbfgs {
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
}

/// Outcome of one outer L-BFGS step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsStep {
    pub loss: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

impl Lbfgs {
    pub fn new() -> Self {
        Lbfgs::default()
    }

    /// Two-loop recursion: `-H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let k = self.s.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&self.y[i], &self.s[i]);
            alpha[i] = rho * dot(&self.s[i], &q);
            q.iter_mut().zip(&self.y[i]).for_each(|(q, y)| *q -= alpha[i] * y);
        }
        if let (Some(s), Some(y)) = (self.s.back(), self.y.back()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..k {
            let rho = 1.0 / dot(&self.y[i], &self.s[i]);
            let beta = rho * dot(&self.y[i], &q);
            q.iter_mut().zip(&self.s[i]).for_each(|(q, s)| *q += (alpha[i] - beta) * s);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }

    /// Up to `max_inner` quasi-Newton iterations on `f`, which returns the
    /// loss and gradient at a parameter vector.
    pub fn step(
        &mut self,
        params: &mut [f64],
        f: &mut dyn FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
        lr: f64,
        history: usize,
        max_inner: usize,
        tolerance: f64,
    ) -> Result<LbfgsStep> {
        let (mut loss, mut g) = f(params)?;
        let mut evaluations = 1;
        for it in 0..max_inner {
            if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= tolerance {
                return Ok(LbfgsStep { loss, evaluations, converged: true });
            }
            let mut d = self.direction(&g);
            let mut slope = dot(&g, &d);
            if !(slope < 0.0) {
                // stale curvature; restart from steepest descent
                self.s.clear();
                self.y.clear();
                d = g.iter().map(|v| -v).collect();
                slope = -dot(&g, &g);
            }
            let mut t = if it == 0 && self.s.is_empty() {
                lr * (1.0f64).min(1.0 / g.iter().map(|v| v.abs()).sum::<f64>())
            } else {
                lr
            };
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = params.iter().zip(&d).map(|(p, d)| p + t * d).collect();
                let (l, gn) = f(&trial)?;
                evaluations += 1;
                if l.is_finite() && l <= loss + ARMIJO_C * t * slope {
                    accepted = Some((trial, l, gn));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, l, gn)) = accepted else {
                return Ok(LbfgsStep { loss, evaluations, converged: true });
            };
            let s: Vec<f64> = trial.iter().zip(params.iter()).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            if dot(&s, &y) > 1e-10 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                if self.s.len() == history {
                    self.s.pop_front();
                    self.y.pop_front();
                }
                self.s.push_back(s);
                self.y.push_back(y);
            }
            params.copy_from_slice(&trial);
            let change = (loss - l).abs();
            loss = l;
            g = gn;
            if change <= tolerance {
                return Ok(LbfgsStep { loss, evaluations, converged: true });
            }
        }
        Ok(LbfgsStep { loss, evaluations, converged: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        // diag(1, 10, 100), minimum at (1, -2, 3)
        let c = [1.0, -2.0, 3.0];
        let d = [1.0, 10.0, 100.0];
        let l = (0..3).map(|i| 0.5 * d[i] * (x[i] - c[i]).powi(2)).sum();
        Ok((l, (0..3).map(|i| d[i] * (x[i] - c[i])).collect()))
    }

    #[test]
    fn adam_reduces_quadratic() {
        let mut x = vec![0.0; 3];
        let mut opt = Adam::new(3);
        for _ in 0..5000 {
            let (_, g) = quadratic(&x).unwrap();
            opt.step(&mut x, &g, 1e-2, 0.9, 0.999, 1e-8);
        }
        assert!(quadratic(&x).unwrap().0 < 1e-6);
    }

    #[test]
    fn lbfgs_solves_quadratic() {
        let mut x = vec![0.0; 3];
        let mut opt = Lbfgs::new();
        let mut f = |p: &[f64]| quadratic(p);
        for _ in 0..5 {
            opt.step(&mut x, &mut f, 1.0, 10, 10, 1e-15).unwrap();
        }
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] + 2.0).abs() < 1e-8 && (x[2] - 3.0).abs() < 1e-8);
    }
}
