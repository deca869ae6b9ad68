//! Quadrature on the reference interval `[0, 1]` and the reference triangle
//! `{(x, y) : x, y >= 0, x + y <= 1}`.

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Highest polynomial degree integrated exactly, per dimension.
pub const MAX_DEGREE_1D: usize = 9;
pub const MAX_DEGREE_TRIANGLE: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// The cheapest tabulated rule that integrates every monomial of total degree
/// `<= degree` exactly.
pub fn quadrature_rule(dim: usize, degree: usize) -> Result<QuadratureRule> {
    match dim {
        1 if degree <= MAX_DEGREE_1D => Ok(gauss_legendre(degree / 2 + 1)),
        2 if degree <= MAX_DEGREE_TRIANGLE => Ok(triangle_rule(degree)),
        1 | 2 => Err(Error::invalid(format!(
            "no {dim}D quadrature rule of degree {degree} (max {})",
            if dim == 1 { MAX_DEGREE_1D } else { MAX_DEGREE_TRIANGLE }
        ))),
        _ => Err(Error::invalid(format!("quadrature in dimension {dim} not supported"))),
    }
}

/// `n`-point Gauss-Legendre rule mapped to `[0, 1]`, `1 <= n <= 5`.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    // nodes and weights on [-1, 1], positive half only
    let (x, w): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => (vec![1.0 / 3f64.sqrt()], vec![1.0]),
        3 => (vec![0.0, (3.0f64 / 5.0).sqrt()], vec![8.0 / 9.0, 5.0 / 9.0]),
        4 => {
            let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let s = 30f64.sqrt();
            (vec![a, b], vec![(18.0 + s) / 36.0, (18.0 - s) / 36.0])
        }
        5 => {
            let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let s = 70f64.sqrt();
            (
                vec![0.0, a, b],
                vec![128.0 / 225.0, (322.0 + 13.0 * s) / 900.0, (322.0 - 13.0 * s) / 900.0],
            )
        }
        _ => panic!("Gauss-Legendre rule with {n} points is not tabulated"),
    };
    let mut pts = Vec::with_capacity(n);
    let mut wts = Vec::with_capacity(n);
    for (xi, wi) in x.iter().zip(&w) {
        if *xi == 0.0 {
            pts.push([0.5, 0.0]);
            wts.push(0.5 * wi);
        } else {
            pts.push([0.5 * (1.0 - xi), 0.0]);
            wts.push(0.5 * wi);
            pts.push([0.5 * (1.0 + xi), 0.0]);
            wts.push(0.5 * wi);
        }
    }
    QuadratureRule {
        points: pts,
        weights: wts,
        degree: 2 * n - 1,
    }
}

fn triangle_rule(degree: usize) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    // weights below are normalized to sum 1, scaled by the area 1/2 at the end
    let mut orbit3 = |a: f64, w: f64| {
        let b = 1.0 - 2.0 * a;
        points.extend_from_slice(&[[a, a], [b, a], [a, b]]);
        weights.extend_from_slice(&[w, w, w]);
    };
    let exact = match degree {
        0 | 1 => {
            orbit3(1.0 / 3.0, 1.0 / 3.0);
            points.truncate(1);
            weights.truncate(1);
            weights[0] = 1.0;
            1
        }
        2 => {
            // edge midpoints
            orbit3(0.5, 1.0 / 3.0);
            2
        }
        3 | 4 => {
            orbit3(0.445948490915965, 0.223381589678011);
            orbit3(0.091576213509771, 0.109951743655322);
            4
        }
        _ => {
            let s = 15f64.sqrt();
            orbit3((6.0 - s) / 21.0, (155.0 - s) / 1200.0);
            orbit3((6.0 + s) / 21.0, (155.0 + s) / 1200.0);
            points.push([1.0 / 3.0, 1.0 / 3.0]);
            weights.push(9.0 / 40.0);
            5
        }
    };
    QuadratureRule {
        points,
        weights: weights.into_iter().map(|w| 0.5 * w).collect(),
        degree: exact,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn three_point_gauss_quartic() {
        let q = quadrature_rule(1, 5).unwrap();
        assert_eq!(q.len(), 3);
        let v: f64 = q.iter().map(|(p, w)| w * p[0].powi(4)).sum();
        assert!((v - 0.2).abs() < 1e-14);
    }

    #[test]
    fn midpoint_rule_xy() {
        let q = quadrature_rule(2, 2).unwrap();
        assert_eq!(q.len(), 3);
        let v: f64 = q.iter().map(|(p, w)| w * p[0] * p[1]).sum();
        assert!((v - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for d in 0..=MAX_DEGREE_1D {
            let s: f64 = quadrature_rule(1, d).unwrap().weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        for d in 0..=MAX_DEGREE_TRIANGLE {
            let s: f64 = quadrature_rule(2, d).unwrap().weights.iter().sum();
            assert!((s - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn interval_monomials_exact() {
        for d in 0..=MAX_DEGREE_1D {
            let q = quadrature_rule(1, d).unwrap();
            for k in 0..=d as i32 {
                let v: f64 = q.iter().map(|(p, w)| w * p[0].powi(k)).sum();
                let exact = 1.0 / (k + 1) as f64;
                assert!((v - exact).abs() <= 1e-13 * exact, "deg {d} monomial {k}");
            }
        }
    }

    #[test]
    fn triangle_monomials_exact() {
        // int x^a y^b over the unit triangle = a! b! / (a + b + 2)!
        for d in 0..=MAX_DEGREE_TRIANGLE {
            let q = quadrature_rule(2, d).unwrap();
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let v: f64 = q
                        .iter()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!((v - exact).abs() <= 1e-13 * exact, "deg {d}: x^{a} y^{b}");
                }
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert!(matches!(quadrature_rule(1, 10), Err(Error::InvalidArgument(_))));
        assert!(matches!(quadrature_rule(2, 6), Err(Error::InvalidArgument(_))));
        assert!(matches!(quadrature_rule(3, 1), Err(Error::InvalidArgument(_))));
    }
}
