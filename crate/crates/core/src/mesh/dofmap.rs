use std::collections::{BTreeMap, HashSet};

use super::{local_edges, Mesh, Point};

/// Polynomial degree of the Lagrange elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementOrder {
    P1,
    P2,
}

impl ElementOrder {
    pub fn degree(self) -> usize {
        match self {
            ElementOrder::P1 => 1,
            ElementOrder::P2 => 2,
        }
    }

    /// Local DOFs on a simplex of dimension `dim`.
    pub fn dofs_per_element(self, dim: usize) -> usize {
        match (self, dim) {
            (ElementOrder::P1, d) => d + 1,
            (ElementOrder::P2, 1) => 3,
            (ElementOrder::P2, _) => 6,
        }
    }
}

impl std::str::FromStr for ElementOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "p1" | "1" => Ok(ElementOrder::P1),
            "p2" | "2" => Ok(ElementOrder::P2),
            _ => Err(format!("unknown element order '{s}'")),
        }
    }
}

impl std::fmt::Display for ElementOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P{}", self.degree())
    }
}

/// Global numbering of Lagrange degrees of freedom.
///
/// Vertex DOFs come first and reuse node indices. P2 adds one DOF per unique
/// edge (keyed by its sorted vertex pair), numbered in first-seen order; local
/// ordering is vertices then edges `(0,1), (1,2), (2,0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    order: ElementOrder,
    dim: usize,
    dof_coords: Vec<Point>,
    element_dofs: Vec<usize>,
    per_element: usize,
    is_boundary: Vec<bool>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, order: ElementOrder) -> Self {
        let dim = mesh.dim();
        let per_element = order.dofs_per_element(dim);
        let mut dof_coords: Vec<Point> = mesh.nodes().to_vec();
        let mut is_boundary: Vec<bool> =
            (0..mesh.node_count()).map(|n| mesh.is_boundary_node(n)).collect();
        let mut element_dofs = Vec::with_capacity(mesh.element_count() * per_element);

        match order {
            ElementOrder::P1 => {
                for v in mesh.elements() {
                    element_dofs.extend_from_slice(v);
                }
            }
            ElementOrder::P2 => {
                let boundary_edges: HashSet<[usize; 2]> = mesh
                    .boundary_edges()
                    .iter()
                    .map(|&[a, b]| [a.min(b), a.max(b)])
                    .collect();
                let mut edge_dof: BTreeMap<[usize; 2], usize> = BTreeMap::new();
                for v in mesh.elements() {
                    element_dofs.extend_from_slice(v);
                    for [a, b] in local_edges(v) {
                        let key = [a.min(b), a.max(b)];
                        let id = *edge_dof.entry(key).or_insert_with(|| {
                            let (p, q) = (mesh.nodes()[a], mesh.nodes()[b]);
                            dof_coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                            is_boundary.push(boundary_edges.contains(&key));
                            dof_coords.len() - 1
                        });
                        element_dofs.push(id);
                    }
                }
            }
        }
        let interior = (0..dof_coords.len()).filter(|&i| !is_boundary[i]).collect();
        let boundary = (0..dof_coords.len()).filter(|&i| is_boundary[i]).collect();
        DofMap {
            order,
            dim,
            dof_coords,
            element_dofs,
            per_element,
            is_boundary,
            interior,
            boundary,
        }
    }

    pub fn order(&self) -> ElementOrder {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dof_count(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    pub fn dofs_per_element(&self) -> usize {
        self.per_element
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.element_dofs[e * self.per_element..(e + 1) * self.per_element]
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.is_boundary[dof]
    }
}

/// Convenience wrapper matching the free-function style of the mesh API.
pub fn build_dofmap(mesh: &Mesh, order: ElementOrder) -> DofMap {
    DofMap::new(mesh, order)
}
