use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Point;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    Function(ScalarFn),
}

impl ScalarField {
    pub fn function(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Function(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Function(f) => f(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Constant(c) if *c == 0.0)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Clone)]
pub enum VectorField {
    Constant([f64; 2]),
    Function(VectorFn),
}

impl VectorField {
    pub fn function(f: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        VectorField::Function(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, p: Point) -> [f64; 2] {
        match self {
            VectorField::Constant(c) => *c,
            VectorField::Function(f) => f(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorField::Constant(c) if c[0] == 0.0 && c[1] == 0.0)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Constant(c) => write!(f, "Constant({c:?})"),
            VectorField::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    None,
    /// `u u_x`, written in conservative form `(u^2 / 2)_x` and integrated by parts.
    Burgers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Homogeneous Dirichlet, imposed by eliminating boundary DOFs.
    Dirichlet0,
    /// Homogeneous Neumann with `+u` added to the operator for uniqueness.
    Neumann0WithMass,
}

/// `-eps div(a grad u) + b . grad u + c u [+ u u_x] = f`
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub epsilon: f64,
    pub diffusion: ScalarField,
    pub convection: VectorField,
    pub reaction: ScalarField,
    pub nonlinearity: Nonlinearity,
    pub bc: BoundaryCondition,
}

impl ProblemSpec {
    /// Pure diffusion `-eps Δu = f` with homogeneous Dirichlet data.
    pub fn new(epsilon: f64) -> Self {
        ProblemSpec {
            epsilon,
            diffusion: ScalarField::Constant(1.0),
            convection: VectorField::Constant([0.0, 0.0]),
            reaction: ScalarField::Constant(0.0),
            nonlinearity: Nonlinearity::None,
            bc: BoundaryCondition::Dirichlet0,
        }
    }

    /// 1D `-eps u'' + b u' = f`, or with `v = (b, 0)` in 2D.
    pub fn convection_diffusion(epsilon: f64, velocity: [f64; 2]) -> Self {
        ProblemSpec::new(epsilon).with_convection(VectorField::Constant(velocity))
    }

    pub fn burgers(epsilon: f64) -> Self {
        ProblemSpec {
            nonlinearity: Nonlinearity::Burgers,
            ..ProblemSpec::new(epsilon)
        }
    }

    pub fn with_diffusion(mut self, a: ScalarField) -> Self {
        self.diffusion = a;
        self
    }

    pub fn with_convection(mut self, b: VectorField) -> Self {
        self.convection = b;
        self
    }

    pub fn with_reaction(mut self, c: ScalarField) -> Self {
        self.reaction = c;
        self
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.convection.is_zero() && self.nonlinearity == Nonlinearity::None
    }

    /// Reaction as seen by the assembled operator (`c + 1` for the Neumann case).
    pub fn effective_reaction(&self, p: Point) -> f64 {
        let c = self.reaction.eval(p);
        match self.bc {
            BoundaryCondition::Neumann0WithMass => c + 1.0,
            BoundaryCondition::Dirichlet0 => c,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.nonlinearity == Nonlinearity::Burgers {
            if dim != 1 {
                return Err(Error::Unsupported("Burgers nonlinearity is 1D only".into()));
            }
            if self.bc != BoundaryCondition::Dirichlet0 {
                return Err(Error::Unsupported(
                    "Burgers nonlinearity requires homogeneous Dirichlet data".into(),
                ));
            }
        }
        Ok(())
    }
}
