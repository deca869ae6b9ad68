//! Reference elements, quadrature and Galerkin assembly.

mod assembly;
mod basis;
mod field;
mod norms;
mod problem;
mod quadrature;

pub use assembly::{
    assemble_bilinear, assemble_full_mass, assemble_load, AssembledSystem, BurgersTensor,
    LoadVector, QUAD_DEGREE_1D, QUAD_DEGREE_2D,
};
pub use basis::{reference_basis, reference_nodes, ShapeValues};
pub use field::{l2_distance, l2_rel_distance, FeFunction, Locator};
pub use norms::{l2_norm, l2_rel_error};
pub use problem::{
    BoundaryCondition, Nonlinearity, ProblemSpec, ScalarField, ScalarFn, VectorField, VectorFn,
};
pub use quadrature::{gauss_legendre, quadrature_rule, QuadratureRule, MAX_DEGREE_1D, MAX_DEGREE_TRIANGLE};
