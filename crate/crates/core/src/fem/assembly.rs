//! Element loops for the bilinear form, load vectors, mass matrices and the
//! Burgers trilinear tensor.
//!
//! Assembly is sequential in element order and duplicates are summed in that
//! same order, so results are bit-reproducible for a given mesh and problem.

use std::collections::BTreeMap;

use super::basis::shape;
use super::problem::{BoundaryCondition, Nonlinearity, ProblemSpec};
use super::quadrature::{quadrature_rule, QuadratureRule};
use crate::enrichment::CorrectorBasis;
use crate::error::{check_len, Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{DofMap, Mesh, Point};

/// Quadrature degrees used by every assembly routine.
pub const QUAD_DEGREE_1D: usize = 9;
pub const QUAD_DEGREE_2D: usize = 5;

pub(crate) fn default_rule(dim: usize) -> QuadratureRule {
    let degree = if dim == 1 { QUAD_DEGREE_1D } else { QUAD_DEGREE_2D };
    quadrature_rule(dim, degree).expect("tabulated rule")
}

/// Affine map from the reference simplex to one element.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ElementMap {
    origin: Point,
    jac: [[f64; 2]; 2],
    inv_t: [[f64; 2]; 2],
    det: f64,
}

impl ElementMap {
    pub(crate) fn new(mesh: &Mesh, e: usize) -> Self {
        let v = mesh.element(e);
        let p = |i: usize| mesh.nodes()[v[i]];
        if mesh.dim() == 1 {
            let d = p(1)[0] - p(0)[0];
            ElementMap {
                origin: p(0),
                jac: [[d, 0.0], [0.0, 1.0]],
                inv_t: [[1.0 / d, 0.0], [0.0, 1.0]],
                det: d,
            }
        } else {
            let (a, b, c) = (p(0), p(1), p(2));
            let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            // (J^{-1})^T
            let inv_t = [
                [jac[1][1] / det, -jac[1][0] / det],
                [-jac[0][1] / det, jac[0][0] / det],
            ];
            ElementMap {
                origin: a,
                jac,
                inv_t,
                det,
            }
        }
    }

    #[inline]
    pub(crate) fn to_physical(&self, r: Point) -> Point {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    #[inline]
    pub(crate) fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }

    pub(crate) fn det(&self) -> f64 {
        self.det
    }
}

/// Shape values tabulated at the quadrature points of a fixed rule.
pub(crate) struct Tabulation {
    pub rule: QuadratureRule,
    pub phi: Vec<Vec<f64>>,
    pub dphi_ref: Vec<Vec<[f64; 2]>>,
}

impl Tabulation {
    pub(crate) fn new(dofmap: &DofMap, rule: QuadratureRule) -> Self {
        let (phi, dphi_ref) = rule
            .points
            .iter()
            .map(|&p| {
                let s = shape(dofmap.order(), dofmap.dim(), p);
                (s.values, s.gradients)
            })
            .unzip();
        Tabulation {
            rule,
            phi,
            dphi_ref,
        }
    }
}

/// Burgers tensor `T[i][j][k] = ∫ φ_j φ_k (φ_i)_x`, stored per row `i` as a
/// sorted list of `(j, k, value)` with both index orders present.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersTensor {
    rows: Vec<Vec<(usize, usize, f64)>>,
}

impl BurgersTensor {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&(j, k), |&(a, b, _)| (a, b))
            .map(|p| self.rows[i][p].2)
            .unwrap_or(0.0)
    }

    pub fn row(&self, i: usize) -> &[(usize, usize, f64)] {
        &self.rows[i]
    }

    /// `q_i(α) = ½ αᵀ T_i α`
    pub fn quadratic(&self, alpha: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| 0.5 * row.iter().map(|&(j, k, t)| t * alpha[j] * alpha[k]).sum::<f64>())
            .collect()
    }

    /// `G_ik = Σ_j T[i][j][k] α_j`, the Jacobian of `q`.
    pub fn jacobian(&self, alpha: &[f64]) -> CsrMatrix {
        let n = self.rows.len();
        let mut b = TripletBuilder::new(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, k, t) in row {
                b.add(i, k, t * alpha[j]);
            }
        }
        b.build()
    }

    /// `(Gᵀ r)_k = Σ_i r_i Σ_j T[i][j][k] α_j`
    pub fn jacobian_transpose_mul(&self, alpha: &[f64], r: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let ri = r[i];
            if ri == 0.0 {
                continue;
            }
            for &(j, k, t) in row {
                out[k] += ri * t * alpha[j];
            }
        }
    }
}

/// Galerkin system over the free DOFs (interior for Dirichlet, all for
/// Neumann), optionally augmented by one corrector row and column.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub mass: CsrMatrix,
    pub burgers: Option<BurgersTensor>,
    pub corrector: Option<CorrectorBasis>,
    /// Non-fatal diagnostics raised during assembly.
    pub warnings: Vec<String>,
    bc: BoundaryCondition,
    dof_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
}

impl AssembledSystem {
    pub(crate) fn from_parts(
        matrix: CsrMatrix,
        mass: CsrMatrix,
        burgers: Option<BurgersTensor>,
        corrector: Option<CorrectorBasis>,
        bc: BoundaryCondition,
        dof_index: Vec<Option<usize>>,
        free_dofs: Vec<usize>,
    ) -> Self {
        AssembledSystem {
            matrix,
            mass,
            burgers,
            corrector,
            warnings: Vec::new(),
            bc,
            dof_index,
            free_dofs,
        }
    }

    /// Same system with an extra corrector row and column.
    pub(crate) fn with_enrichment(
        &self,
        matrix: CsrMatrix,
        mass: CsrMatrix,
        corrector: CorrectorBasis,
    ) -> Self {
        AssembledSystem {
            matrix,
            mass,
            corrector: Some(corrector),
            ..self.clone()
        }
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// `F_i = ∫ f φ_i` for every unknown of this system, corrector included.
    pub fn assemble_load(
        &self,
        mesh: &Mesh,
        dofmap: &DofMap,
        f: &dyn Fn(Point) -> f64,
    ) -> Result<LoadVector> {
        check_len(self.total_dofs(), dofmap.dof_count())?;
        let mut load = assemble_load(mesh, dofmap, self.bc, f);
        if let Some(c) = &self.corrector {
            load.values.push(c.load_entry(mesh, f));
        }
        Ok(load)
    }

    /// Number of unknowns, including the corrector coefficient if present.
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// Nodal unknowns only, `N(h)`.
    pub fn nodal_size(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn total_dofs(&self) -> usize {
        self.dof_index.len()
    }

    /// Row of a global DOF, or `None` if eliminated by the boundary condition.
    pub fn row_of(&self, dof: usize) -> Option<usize> {
        self.dof_index[dof]
    }

    /// Global DOF of each nodal row.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn is_nonlinear(&self) -> bool {
        self.burgers.is_some()
    }

    /// Scatter system coefficients into a full nodal vector. Eliminated DOFs
    /// are exactly zero. The corrector coefficient, if any, is appended.
    pub fn expand(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size(), coeffs.len())?;
        let extra = self.size() - self.nodal_size();
        let mut full = vec![0.0; self.total_dofs() + extra];
        for (row, &dof) in self.free_dofs.iter().enumerate() {
            full[dof] = coeffs[row];
        }
        full[self.total_dofs()..].copy_from_slice(&coeffs[self.nodal_size()..]);
        Ok(full)
    }

    /// Residual `A α - q(α) - F` (the `q` term only for Burgers).
    pub fn residual(&self, alpha: &[f64], load: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.mul_vec(alpha);
        if let Some(t) = &self.burgers {
            for (ri, qi) in r.iter_mut().zip(t.quadratic(alpha)) {
                *ri -= qi;
            }
        }
        for (ri, fi) in r.iter_mut().zip(load) {
            *ri -= fi;
        }
        r
    }

    /// `J(α)ᵀ v` where `J` is the Jacobian of [`residual`](Self::residual).
    pub fn jacobian_transpose_mul(&self, alpha: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = self.matrix.mul_transpose_vec(v);
        if let Some(t) = &self.burgers {
            let mut g = vec![0.0; out.len()];
            t.jacobian_transpose_mul(alpha, v, &mut g);
            for (o, gi) in out.iter_mut().zip(g) {
                *o -= gi;
            }
        }
        out
    }
}

/// Load vector over the free DOFs of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub values: Vec<f64>,
    pub omega: Option<Vec<f64>>,
}

fn free_dof_index(dofmap: &DofMap, bc: BoundaryCondition) -> (Vec<Option<usize>>, Vec<usize>) {
    let free: Vec<usize> = match bc {
        BoundaryCondition::Dirichlet0 => dofmap.interior_dofs().to_vec(),
        BoundaryCondition::Neumann0WithMass => (0..dofmap.dof_count()).collect(),
    };
    let mut index = vec![None; dofmap.dof_count()];
    for (row, &d) in free.iter().enumerate() {
        index[d] = Some(row);
    }
    (index, free)
}

/// Assemble `A_ik = B[φ_k, φ_i]`, the mass matrix and (Burgers) the tensor.
pub fn assemble_bilinear(
    problem: &ProblemSpec,
    mesh: &Mesh,
    dofmap: &DofMap,
) -> Result<AssembledSystem> {
    problem.validate(mesh.dim())?;
    let (dof_index, free) = free_dof_index(dofmap, problem.bc);
    let n = free.len();
    let tab = Tabulation::new(dofmap, default_rule(mesh.dim()));
    let nloc = dofmap.dofs_per_element();
    let mut a_b = TripletBuilder::new(n, n);
    let mut m_b = TripletBuilder::new(n, n);
    let burgers = problem.nonlinearity == Nonlinearity::Burgers;
    let mut t_rows: Vec<BTreeMap<(usize, usize), f64>> =
        if burgers { vec![BTreeMap::new(); n] } else { Vec::new() };

    let mut a_loc = vec![0.0; nloc * nloc];
    let mut m_loc = vec![0.0; nloc * nloc];
    let mut t_loc = vec![0.0; nloc * nloc * nloc];
    let mut grads = vec![[0.0; 2]; nloc];
    for e in 0..mesh.element_count() {
        let map = ElementMap::new(mesh, e);
        let dofs = dofmap.element_dofs(e);
        a_loc.iter_mut().for_each(|v| *v = 0.0);
        m_loc.iter_mut().for_each(|v| *v = 0.0);
        t_loc.iter_mut().for_each(|v| *v = 0.0);
        for (q, (rp, w)) in tab.rule.iter().enumerate() {
            let x = map.to_physical(rp);
            let w = w * map.det().abs();
            let a = problem.diffusion.eval(x);
            if !(a > 0.0) {
                return Err(Error::Coefficient {
                    x: x[0],
                    y: x[1],
                    msg: format!("diffusion coefficient {a} is not positive"),
                });
            }
            let b = problem.convection.eval(x);
            let c = problem.effective_reaction(x);
            let phi = &tab.phi[q];
            for (g, r) in grads.iter_mut().zip(&tab.dphi_ref[q]) {
                *g = map.grad(*r);
            }
            for i in 0..nloc {
                for k in 0..nloc {
                    let diff = grads[k][0] * grads[i][0] + grads[k][1] * grads[i][1];
                    let conv = b[0] * grads[k][0] + b[1] * grads[k][1];
                    a_loc[i * nloc + k] += w
                        * (problem.epsilon * a * diff + conv * phi[i] + c * phi[k] * phi[i]);
                    m_loc[i * nloc + k] += w * phi[k] * phi[i];
                }
            }
            if burgers {
                for i in 0..nloc {
                    let wi = w * grads[i][0];
                    for j in 0..nloc {
                        for k in 0..nloc {
                            t_loc[(i * nloc + j) * nloc + k] += wi * phi[j] * phi[k];
                        }
                    }
                }
            }
        }
        for i in 0..nloc {
            let Some(ri) = dof_index[dofs[i]] else { continue };
            for k in 0..nloc {
                let Some(rk) = dof_index[dofs[k]] else { continue };
                a_b.add(ri, rk, a_loc[i * nloc + k]);
                m_b.add(ri, rk, m_loc[i * nloc + k]);
                if burgers {
                    for j in 0..nloc {
                        let Some(rj) = dof_index[dofs[j]] else { continue };
                        *t_rows[ri].entry((rj, rk)).or_insert(0.0) +=
                            t_loc[(i * nloc + j) * nloc + k];
                    }
                }
            }
        }
    }
    // symmetrize in the trial indices so T[i][j][k] == T[i][k][j] exactly
    let tensor = burgers.then(|| BurgersTensor {
        rows: t_rows
            .iter()
            .map(|m| {
                m.iter()
                    .map(|(&(j, k), &v)| (j, k, 0.5 * (v + m.get(&(k, j)).copied().unwrap_or(0.0))))
                    .collect()
            })
            .collect(),
    });
    Ok(AssembledSystem::from_parts(
        a_b.build(),
        m_b.build(),
        tensor,
        None,
        problem.bc,
        dof_index,
        free,
    ))
}

/// `F_i = ∫ f φ_i` over the free DOFs implied by `bc`.
pub fn assemble_load(
    mesh: &Mesh,
    dofmap: &DofMap,
    bc: BoundaryCondition,
    f: &dyn Fn(Point) -> f64,
) -> LoadVector {
    let tab = Tabulation::new(dofmap, default_rule(mesh.dim()));
    assemble_load_with(mesh, dofmap, bc, f, &tab)
}

pub(crate) fn assemble_load_with(
    mesh: &Mesh,
    dofmap: &DofMap,
    bc: BoundaryCondition,
    f: &dyn Fn(Point) -> f64,
    tab: &Tabulation,
) -> LoadVector {
    let (dof_index, free) = free_dof_index(dofmap, bc);
    let mut values = vec![0.0; free.len()];
    for e in 0..mesh.element_count() {
        let map = ElementMap::new(mesh, e);
        let dofs = dofmap.element_dofs(e);
        for (q, (rp, w)) in tab.rule.iter().enumerate() {
            let fx = f(map.to_physical(rp)) * w * map.det().abs();
            for (i, &d) in dofs.iter().enumerate() {
                if let Some(r) = dof_index[d] {
                    values[r] += fx * tab.phi[q][i];
                }
            }
        }
    }
    LoadVector {
        values,
        omega: None,
    }
}

/// Mass matrix over all DOFs, boundary included.
pub fn assemble_full_mass(mesh: &Mesh, dofmap: &DofMap) -> CsrMatrix {
    let n = dofmap.dof_count();
    let tab = Tabulation::new(dofmap, default_rule(mesh.dim()));
    let nloc = dofmap.dofs_per_element();
    let mut b = TripletBuilder::new(n, n);
    for e in 0..mesh.element_count() {
        let map = ElementMap::new(mesh, e);
        let dofs = dofmap.element_dofs(e);
        let mut m_loc = vec![0.0; nloc * nloc];
        for (q, (_, w)) in tab.rule.iter().enumerate() {
            let w = w * map.det().abs();
            for i in 0..nloc {
                for k in 0..nloc {
                    m_loc[i * nloc + k] += w * tab.phi[q][i] * tab.phi[q][k];
                }
            }
        }
        for i in 0..nloc {
            for k in 0..nloc {
                b.add(dofs[i], dofs[k], m_loc[i * nloc + k]);
            }
        }
    }
    b.build()
}
