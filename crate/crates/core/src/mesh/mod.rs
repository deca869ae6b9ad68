//! Simplicial meshes in one and two space dimensions.
//!
//! A [`Mesh`] owns node coordinates, element connectivity and the boundary
//! description. Construction always goes through [`Mesh::new`], which runs
//! the full validation, so a `Mesh` value is known to be well formed:
//! indices in range, positively oriented elements, no coincident nodes and
//! (in 2D) a boundary-edge set that covers every boundary node.

mod dofmap;
mod generate;
mod io;

pub use dofmap::{build_dofmap, DofMap, ElementOrder};
pub use generate::{
    generate_disk_mesh, generate_interval_mesh, generate_shishkin_mesh, generate_square_mesh,
    LayerSide,
};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};

/// Node coordinates. One-dimensional meshes leave the second slot at zero.
pub type Point = [f64; 2];

/// Relative tolerance used to declare two nodes coincident.
pub const NODE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<Point>,
    cells: Vec<usize>,
    boundary_nodes: Vec<usize>,
    boundary_edges: Vec<[usize; 2]>,
}

impl Mesh {
    /// Build and validate a mesh.
    ///
    /// `cells` is the flat connectivity (`dim + 1` vertex indices per element).
    /// In 1D, `boundary` lists the boundary node indices; in 2D it is derived
    /// from `boundary_edges` and the explicit list is merged in.
    pub fn new(
        dim: usize,
        nodes: Vec<Point>,
        cells: Vec<usize>,
        boundary_nodes: Vec<usize>,
        boundary_edges: Vec<[usize; 2]>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("mesh dimension must be 1 or 2, got {dim}")));
        }
        let nv = dim + 1;
        if cells.len() % nv != 0 {
            return Err(Error::Validation(format!(
                "connectivity length {} is not a multiple of {nv}",
                cells.len()
            )));
        }
        let mut set: BTreeSet<usize> = boundary_nodes.into_iter().collect();
        if dim == 2 {
            for e in &boundary_edges {
                set.insert(e[0]);
                set.insert(e[1]);
            }
        } else if !boundary_edges.is_empty() {
            return Err(Error::Validation("1D meshes carry no boundary edges".into()));
        }
        let mesh = Mesh {
            dim,
            nodes,
            cells,
            boundary_nodes: set.into_iter().collect(),
            boundary_edges,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn vertices_per_element(&self) -> usize {
        self.dim + 1
    }

    pub fn element_count(&self) -> usize {
        self.cells.len() / self.vertices_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let nv = self.vertices_per_element();
        &self.cells[e * nv..(e + 1) * nv]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.vertices_per_element())
    }

    /// Sorted boundary node indices.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn is_boundary_node(&self, n: usize) -> bool {
        self.boundary_nodes.binary_search(&n).is_ok()
    }

    /// Signed measure of an element: length in 1D, oriented area in 2D.
    pub fn signed_measure(&self, e: usize) -> f64 {
        let v = self.element(e);
        match self.dim {
            1 => self.nodes[v[1]][0] - self.nodes[v[0]][0],
            _ => signed_area(self.nodes[v[0]], self.nodes[v[1]], self.nodes[v[2]]),
        }
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.element_count()).map(|e| self.signed_measure(e)).sum()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    }

    /// Longest element edge (the mesh parameter `h`).
    pub fn mesh_size(&self) -> f64 {
        let mut h: f64 = 0.0;
        for v in self.elements() {
            for a in 0..v.len() {
                for b in a + 1..v.len() {
                    h = h.max(dist(self.nodes[v[a]], self.nodes[v[b]]));
                }
            }
        }
        h
    }

    /// Unique undirected edges as sorted vertex pairs, in first-seen order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for v in self.elements() {
            for [a, b] in local_edges(v) {
                let key = [a.min(b), a.max(b)];
                if seen.insert(key) {
                    out.push(key);
                }
            }
        }
        out
    }

    /// Split every element uniformly: 1D elements in two, triangles in four.
    /// The refined mesh is nested in the original one.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let mut nodes = self.nodes.clone();
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (p, q) = (nodes[a], nodes[b]);
                nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                nodes.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(self.cells.len() * 4);
        let mut bedges = Vec::new();
        match self.dim {
            1 => {
                for v in self.elements() {
                    let m = midpoint(v[0], v[1], &mut nodes);
                    cells.extend_from_slice(&[v[0], m, m, v[1]]);
                }
            }
            _ => {
                for v in self.elements() {
                    let m01 = midpoint(v[0], v[1], &mut nodes);
                    let m12 = midpoint(v[1], v[2], &mut nodes);
                    let m20 = midpoint(v[2], v[0], &mut nodes);
                    cells.extend_from_slice(&[v[0], m01, m20]);
                    cells.extend_from_slice(&[m01, v[1], m12]);
                    cells.extend_from_slice(&[m20, m12, v[2]]);
                    cells.extend_from_slice(&[m01, m12, m20]);
                }
                for &[a, b] in &self.boundary_edges {
                    let m = midpoint(a, b, &mut nodes);
                    bedges.push([a, m]);
                    bedges.push([m, b]);
                }
            }
        }
        let bnodes = if self.dim == 1 {
            self.boundary_nodes.clone()
        } else {
            Vec::new()
        };
        Mesh::new(self.dim, nodes, cells, bnodes, bedges)
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 || self.cells.is_empty() {
            return Err(Error::Validation("mesh has no nodes or no elements".into()));
        }
        if let Some(p) = self.nodes.iter().find(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Validation(format!("non-finite node coordinate {p:?}")));
        }
        if let Some(&i) = self.cells.iter().find(|&&i| i >= n) {
            return Err(Error::Validation(format!(
                "element vertex index {i} out of range (nodes: {n})"
            )));
        }
        if let Some(&i) = self.boundary_nodes.iter().find(|&&i| i >= n) {
            return Err(Error::Validation(format!("boundary node {i} out of range")));
        }
        let diam = self.diameter().max(f64::MIN_POSITIVE);
        let min_measure = match self.dim {
            1 => NODE_TOLERANCE * diam,
            _ => NODE_TOLERANCE * diam * diam,
        };
        for e in 0..self.element_count() {
            let m = self.signed_measure(e);
            if !(m > min_measure) {
                return Err(Error::Validation(format!(
                    "element {e} has non-positive signed measure {m:e}"
                )));
            }
        }
        self.check_coincident_nodes(diam)?;
        if self.dim == 2 {
            let on_edge: HashSet<usize> = self.boundary_edges.iter().flatten().copied().collect();
            if let Some(&b) = self.boundary_nodes.iter().find(|b| !on_edge.contains(b)) {
                return Err(Error::Validation(format!(
                    "boundary node {b} lies on no boundary edge"
                )));
            }
            let edges: HashSet<[usize; 2]> = self.edges().into_iter().collect();
            for &[a, b] in &self.boundary_edges {
                if a >= n || b >= n {
                    return Err(Error::Validation(format!("boundary edge ({a}, {b}) out of range")));
                }
                if !edges.contains(&[a.min(b), a.max(b)]) {
                    return Err(Error::Validation(format!(
                        "boundary edge ({a}, {b}) is not an element edge"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_coincident_nodes(&self, diam: f64) -> Result<()> {
        let tol = NODE_TOLERANCE * diam;
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a][0].total_cmp(&self.nodes[b][0]));
        for (k, &i) in order.iter().enumerate() {
            for &j in &order[k + 1..] {
                if self.nodes[j][0] - self.nodes[i][0] > tol {
                    break;
                }
                if dist(self.nodes[i], self.nodes[j]) <= tol {
                    return Err(Error::Validation(format!("nodes {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn local_edges(v: &[usize]) -> Vec<[usize; 2]> {
    match v.len() {
        2 => vec![[v[0], v[1]]],
        _ => vec![[v[0], v[1]], [v[1], v[2]], [v[2], v[0]]],
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
