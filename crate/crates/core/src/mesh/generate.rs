use std::f64::consts::PI;

use super::{signed_area, Mesh, Point};
use crate::error::{Error, Result};

/// Uniform partition of `[a, b]` into `k` elements.
pub fn generate_interval_mesh(a: f64, b: f64, k: usize) -> Result<Mesh> {
    if k == 0 {
        return Err(Error::invalid("interval mesh needs at least one element"));
    }
    if !(a < b) {
        return Err(Error::invalid(format!("interval endpoints must satisfy a < b, got [{a}, {b}]")));
    }
    let h = (b - a) / k as f64;
    let mut nodes: Vec<Point> = (0..=k).map(|i| [a + h * i as f64, 0.0]).collect();
    nodes[k][0] = b;
    let cells = (0..k).flat_map(|i| [i, i + 1]).collect();
    Mesh::new(1, nodes, cells, vec![0, k], vec![])
}

/// Which end of an interval carries the boundary layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSide {
    Left,
    Right,
}

/// Piecewise-uniform Shishkin mesh on `[a, b]` with `n` (even) elements.
///
/// Half of the elements fill the layer region of width
/// `tau = min((b - a) / 2, sigma * eps * ln n)` next to `side`.
pub fn generate_shishkin_mesh(
    a: f64,
    b: f64,
    n: usize,
    eps: f64,
    sigma: f64,
    side: LayerSide,
) -> Result<Mesh> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid("Shishkin mesh needs an even element count >= 2"));
    }
    if !(a < b) || !(eps > 0.0) || !(sigma > 0.0) {
        return Err(Error::invalid("Shishkin mesh needs a < b, eps > 0, sigma > 0"));
    }
    let len = b - a;
    let tau = (0.5 * len).min(sigma * eps * (n as f64).ln());
    let half = n / 2;
    let fine = tau / half as f64;
    let coarse = (len - tau) / half as f64;
    let mut xs = Vec::with_capacity(n + 1);
    match side {
        LayerSide::Left => {
            xs.extend((0..=half).map(|i| a + fine * i as f64));
            xs.extend((1..=half).map(|i| a + tau + coarse * i as f64));
        }
        LayerSide::Right => {
            xs.extend((0..=half).map(|i| a + coarse * i as f64));
            xs.extend((1..=half).map(|i| b - tau + fine * i as f64));
        }
    }
    xs[n] = b;
    let nodes = xs.into_iter().map(|x| [x, 0.0]).collect();
    let cells = (0..n).flat_map(|i| [i, i + 1]).collect();
    Mesh::new(1, nodes, cells, vec![0, n], vec![])
}

/// Structured mesh of `[-1, 1]^2`: `n x n` cells, each cut into two triangles.
pub fn generate_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("square mesh needs at least one subdivision"));
    }
    let h = 2.0 / n as f64;
    let coord = |i: usize| if i == n { 1.0 } else { -1.0 + h * i as f64 };
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([coord(i), coord(j)]);
        }
    }
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (p00, p10, p01, p11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            cells.extend_from_slice(&[p00, p10, p11, p00, p11, p01]);
        }
    }
    let mut edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        edges.push([id(i, 0), id(i + 1, 0)]);
        edges.push([id(n, i), id(n, i + 1)]);
        edges.push([id(n - i, n), id(n - i - 1, n)]);
        edges.push([id(0, n - i), id(0, n - i - 1)]);
    }
    Mesh::new(2, nodes, cells, vec![], edges)
}

/// Structured disk triangulation: ring `r` carries `6 r` equally spaced
/// nodes, giving `6 rings^2` triangles. The outermost ring lies on the circle.
pub fn generate_disk_mesh(radius: f64, rings: usize) -> Result<Mesh> {
    if rings == 0 {
        return Err(Error::invalid("disk mesh needs at least one ring"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
    }
    let mut nodes: Vec<Point> = vec![[0.0, 0.0]];
    // first node index of each ring; ring 0 is the centre
    let mut start = vec![0usize];
    for r in 1..=rings {
        start.push(nodes.len());
        let count = 6 * r;
        let rho = if r == rings { radius } else { radius * r as f64 / rings as f64 };
        for k in 0..count {
            let theta = 2.0 * PI * k as f64 / count as f64;
            nodes.push([rho * theta.cos(), rho * theta.sin()]);
        }
    }
    let ring_node = |r: usize, k: usize| -> usize {
        if r == 0 {
            0
        } else {
            start[r] + k % (6 * r)
        }
    };
    let mut cells = Vec::with_capacity(18 * rings * rings);
    for r in 1..=rings {
        for s in 0..6 {
            for t in 0..r {
                cells.extend_from_slice(&[
                    ring_node(r, s * r + t),
                    ring_node(r, s * r + t + 1),
                    ring_node(r - 1, s * (r - 1) + t),
                ]);
            }
            for t in 0..r.saturating_sub(1) {
                cells.extend_from_slice(&[
                    ring_node(r - 1, s * (r - 1) + t),
                    ring_node(r, s * r + t + 1),
                    ring_node(r - 1, s * (r - 1) + t + 1),
                ]);
            }
        }
    }
    for tri in cells.chunks_exact_mut(3) {
        if signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
    }
    let outer = 6 * rings;
    let edges = (0..outer)
        .map(|k| [ring_node(rings, k), ring_node(rings, k + 1)])
        .collect();
    Mesh::new(2, nodes, cells, vec![], edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_two_elements() {
        let m = generate_interval_mesh(-1.0, 1.0, 2).unwrap();
        assert_eq!(m.nodes(), &[[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(m.element(0), &[0, 1]);
        assert_eq!(m.element(1), &[1, 2]);
        assert_eq!(m.boundary_nodes(), &[0, 2]);
    }

    #[test]
    fn interval_thirty_two_elements() {
        let m = generate_interval_mesh(-1.0, 1.0, 32).unwrap();
        assert_eq!(m.node_count(), 33);
        assert!((m.mesh_size() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn interval_single_element() {
        let m = generate_interval_mesh(0.0, 1.0, 1).unwrap();
        assert_eq!(m.element_count(), 1);
        assert_eq!(m.boundary_nodes(), &[0, 1]);
    }

    #[test]
    fn interval_rejects_bad_arguments() {
        assert!(matches!(generate_interval_mesh(0.0, 1.0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(generate_interval_mesh(1.0, 1.0, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(generate_interval_mesh(2.0, 1.0, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn square_counts() {
        let m = generate_square_mesh(1).unwrap();
        assert_eq!((m.node_count(), m.element_count()), (4, 2));
        let m = generate_square_mesh(2).unwrap();
        assert_eq!((m.node_count(), m.element_count()), (9, 8));
        assert_eq!(m.boundary_nodes().len(), 8);
        assert_eq!(generate_square_mesh(14).unwrap().element_count(), 392);
        assert!(matches!(generate_square_mesh(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn square_counts_follow_formula() {
        for n in 1..9 {
            let m = generate_square_mesh(n).unwrap();
            assert_eq!(m.node_count(), (n + 1) * (n + 1));
            assert_eq!(m.element_count(), 2 * n * n);
            assert_eq!(m.boundary_nodes().len(), 4 * n);
            assert!((m.total_measure() - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_single_ring_is_a_fan() {
        let m = generate_disk_mesh(1.0, 1).unwrap();
        assert_eq!(m.node_count(), 7);
        assert_eq!(m.element_count(), 6);
        assert!(m.elements().all(|v| v.contains(&0)));
        assert_eq!(m.boundary_nodes(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn disk_boundary_on_circle() {
        let m = generate_disk_mesh(1.0, 8).unwrap();
        assert_eq!(m.element_count(), 6 * 64);
        assert_eq!(m.boundary_nodes().len(), 48);
        for &b in m.boundary_nodes() {
            let p = m.nodes()[b];
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() <= 1e-12);
        }
        assert!(matches!(generate_disk_mesh(1.0, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn disk_area_converges_quadratically() {
        // inscribed regular polygon: area = n/2 sin(2 pi / n), error ~ rings^-2
        let errs: Vec<f64> = [4usize, 8, 16]
            .iter()
            .map(|&r| {
                let m = generate_disk_mesh(1.0, r).unwrap();
                let area: f64 = (0..m.element_count()).map(|e| m.signed_measure(e)).sum();
                let polygon = 3.0 * r as f64 * (2.0 * PI / (6 * r) as f64).sin();
                assert!((area - polygon).abs() < 1e-12);
                PI - area
            })
            .collect();
        assert!(errs.iter().all(|&e| e > 0.0));
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
        }
    }

    #[test]
    fn shishkin_layer_region() {
        let m = generate_shishkin_mesh(-1.0, 1.0, 64, 1e-5, 2.0, LayerSide::Left).unwrap();
        let tau = 2.0 * 1e-5 * 64f64.ln();
        assert!((m.nodes()[32][0] - (-1.0 + tau)).abs() < 1e-15);
        assert_eq!(m.nodes()[64][0], 1.0);
        let r = generate_shishkin_mesh(0.0, 1.0, 8, 0.5, 2.0, LayerSide::Right).unwrap();
        // tau capped at half the interval: uniform mesh
        assert!((r.nodes()[4][0] - 0.5).abs() < 1e-15);
    }
}
