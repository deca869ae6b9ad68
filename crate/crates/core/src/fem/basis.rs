//! Lagrange shape functions on the reference simplex.
//!
//! Local numbering: vertices first, then (P2) the edge midpoints in the
//! order `(0,1), (1,2), (2,0)`. In 1D the reference nodes are `0, 1, 1/2`.

use crate::error::{Error, Result};
use crate::mesh::{ElementOrder, Point};

const INSIDE_SLACK: f64 = 1e-12;

/// Values and reference-coordinate gradients of all local shape functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

/// Evaluate the shape functions at `local` (checked to lie in the simplex).
pub fn reference_basis(order: ElementOrder, dim: usize, local: Point) -> Result<ShapeValues> {
    let inside = match dim {
        1 => local[0] >= -INSIDE_SLACK && local[0] <= 1.0 + INSIDE_SLACK,
        2 => {
            local[0] >= -INSIDE_SLACK
                && local[1] >= -INSIDE_SLACK
                && local[0] + local[1] <= 1.0 + INSIDE_SLACK
        }
        _ => return Err(Error::invalid(format!("no reference simplex in dimension {dim}"))),
    };
    if !inside {
        return Err(Error::invalid(format!("point {local:?} outside the reference simplex")));
    }
    Ok(shape(order, dim, local))
}

/// Unchecked evaluation for quadrature loops.
pub(crate) fn shape(order: ElementOrder, dim: usize, p: Point) -> ShapeValues {
    match (order, dim) {
        (ElementOrder::P1, 1) => {
            let t = p[0];
            ShapeValues {
                values: vec![1.0 - t, t],
                gradients: vec![[-1.0, 0.0], [1.0, 0.0]],
            }
        }
        (ElementOrder::P2, 1) => {
            let t = p[0];
            ShapeValues {
                values: vec![(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)],
                gradients: vec![[4.0 * t - 3.0, 0.0], [4.0 * t - 1.0, 0.0], [4.0 - 8.0 * t, 0.0]],
            }
        }
        (ElementOrder::P1, _) => ShapeValues {
            values: vec![1.0 - p[0] - p[1], p[0], p[1]],
            gradients: vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
        },
        (ElementOrder::P2, _) => {
            let l = [1.0 - p[0] - p[1], p[0], p[1]];
            let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
            let mut values = Vec::with_capacity(6);
            let mut gradients = Vec::with_capacity(6);
            for i in 0..3 {
                values.push(l[i] * (2.0 * l[i] - 1.0));
                let c = 4.0 * l[i] - 1.0;
                gradients.push([c * dl[i][0], c * dl[i][1]]);
            }
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                values.push(4.0 * l[a] * l[b]);
                gradients.push([
                    4.0 * (dl[a][0] * l[b] + l[a] * dl[b][0]),
                    4.0 * (dl[a][1] * l[b] + l[a] * dl[b][1]),
                ]);
            }
            ShapeValues { values, gradients }
        }
    }
}

/// Reference coordinates of the local nodes.
pub fn reference_nodes(order: ElementOrder, dim: usize) -> Vec<Point> {
    match (order, dim) {
        (ElementOrder::P1, 1) => vec![[0.0, 0.0], [1.0, 0.0]],
        (ElementOrder::P2, 1) => vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]],
        (ElementOrder::P1, _) => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        (ElementOrder::P2, _) => vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.5, 0.0],
            [0.5, 0.5],
            [0.0, 0.5],
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ORDERS: [ElementOrder; 2] = [ElementOrder::P1, ElementOrder::P2];

    #[test]
    fn p1_interval_midpoint() {
        let s = reference_basis(ElementOrder::P1, 1, [0.5, 0.0]).unwrap();
        assert_eq!(s.values, vec![0.5, 0.5]);
    }

    #[test]
    fn p2_interval_left_node() {
        let s = reference_basis(ElementOrder::P2, 1, [0.0, 0.0]).unwrap();
        assert_eq!(s.values, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn nodal_property() {
        for order in ORDERS {
            for dim in [1, 2] {
                let nodes = reference_nodes(order, dim);
                for (i, &p) in nodes.iter().enumerate() {
                    let s = reference_basis(order, dim, p).unwrap();
                    for (j, v) in s.values.iter().enumerate() {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((v - expect).abs() < 1e-15, "{order} {dim}D phi_{j}(x_{i})");
                    }
                }
            }
        }
    }

    #[test]
    fn p2_triangle_barycenter_reproduces_quadratics() {
        let c = [1.0 / 3.0, 1.0 / 3.0];
        let s = reference_basis(ElementOrder::P2, 2, c).unwrap();
        // symbolic values: vertices -1/9, midpoints 4/9
        for v in &s.values[..3] {
            assert!((v + 1.0 / 9.0).abs() < 1e-15);
        }
        for v in &s.values[3..] {
            assert!((v - 4.0 / 9.0).abs() < 1e-15);
        }
        let nodes = reference_nodes(ElementOrder::P2, 2);
        let monomials: [fn(Point) -> f64; 6] = [
            |_| 1.0,
            |p| p[0],
            |p| p[1],
            |p| p[0] * p[0],
            |p| p[0] * p[1],
            |p| p[1] * p[1],
        ];
        for m in monomials {
            let interp: f64 = s.values.iter().zip(&nodes).map(|(v, &n)| v * m(n)).sum();
            assert!((interp - m(c)).abs() < 1e-15);
        }
    }

    #[test]
    fn outside_point_rejected() {
        assert!(reference_basis(ElementOrder::P1, 1, [1.5, 0.0]).is_err());
        assert!(reference_basis(ElementOrder::P2, 2, [0.7, 0.7]).is_err());
        assert!(reference_basis(ElementOrder::P2, 2, [-0.1, 0.2]).is_err());
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let tri = if x + y <= 1.0 { [x, y] } else { [1.0 - x, 1.0 - y] };
            for order in ORDERS {
                for (dim, p) in [(1, [x, 0.0]), (2, tri)] {
                    let s = reference_basis(order, dim, p).unwrap();
                    let sum: f64 = s.values.iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-13);
                    let gx: f64 = s.gradients.iter().map(|g| g[0]).sum();
                    let gy: f64 = s.gradients.iter().map(|g| g[1]).sum();
                    prop_assert!(gx.abs() < 1e-12 && gy.abs() < 1e-12);
                }
            }
        }

        #[test]
        fn gradients_match_finite_differences(x in 0.05f64..0.45, y in 0.05f64..0.45) {
            let h = 1e-6;
            for order in ORDERS {
                let s = shape(order, 2, [x, y]);
                let sx = shape(order, 2, [x + h, y]);
                let sx2 = shape(order, 2, [x - h, y]);
                let sy = shape(order, 2, [x, y + h]);
                let sy2 = shape(order, 2, [x, y - h]);
                for i in 0..s.values.len() {
                    let fx = (sx.values[i] - sx2.values[i]) / (2.0 * h);
                    let fy = (sy.values[i] - sy2.values[i]) / (2.0 * h);
                    prop_assert!((fx - s.gradients[i][0]).abs() < 1e-8);
                    prop_assert!((fy - s.gradients[i][1]).abs() < 1e-8);
                }
            }
        }
    }
}
