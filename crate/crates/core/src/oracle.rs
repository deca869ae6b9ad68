//! Classical FEM solves used as ground truth: direct LU for linear systems,
//! undamped Newton for the Burgers system, and refined-mesh references.

use crate::error::{check_len, Error, Result};
use crate::fem::{assemble_bilinear, l2_rel_distance, AssembledSystem, FeFunction, ProblemSpec};
use crate::linalg::{norm2, LuFactor};
use crate::mesh::{DofMap, ElementOrder, Mesh, Point};

/// Relative residual required of every linear solve.
pub const RESIDUAL_CONTRACT: f64 = 1e-10;
const MAX_REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub alpha_star: Vec<f64>,
    pub residual_norm: f64,
    /// Residual evaluations performed by Newton (0 for linear solves).
    pub newton_iters: usize,
    /// `|r|` before each Newton update, then the final value.
    pub residual_history: Vec<f64>,
}

/// A factorized linear system reusable across many right-hand sides.
#[derive(Debug, Clone)]
pub struct LinearOracle<'a> {
    system: &'a AssembledSystem,
    lu: LuFactor,
}

impl<'a> LinearOracle<'a> {
    pub fn new(system: &'a AssembledSystem) -> Result<Self> {
        Ok(LinearOracle {
            system,
            lu: LuFactor::new(&system.matrix)?,
        })
    }

    pub fn solve(&self, load: &[f64]) -> Result<OracleSolution> {
        check_len(self.system.size(), load.len())?;
        let a = &self.system.matrix;
        let mut alpha = self.lu.solve(load)?;
        let bound = RESIDUAL_CONTRACT * (1.0 + norm2(load));
        let mut r = residual(a.mul_vec(&alpha), load);
        // iterative refinement only kicks in for badly scaled systems
        for _ in 0..MAX_REFINEMENT_STEPS {
            if norm2(&r) <= bound {
                break;
            }
            let d = self.lu.solve(&r)?;
            alpha.iter_mut().zip(&d).for_each(|(x, dx)| *x -= dx);
            r = residual(a.mul_vec(&alpha), load);
        }
        let residual_norm = norm2(&r);
        if !(residual_norm <= bound) {
            return Err(Error::ConvergenceFailure {
                iterations: MAX_REFINEMENT_STEPS,
                residual: residual_norm,
            });
        }
        Ok(OracleSolution {
            alpha_star: alpha,
            residual_norm,
            newton_iters: 0,
            residual_history: vec![residual_norm],
        })
    }
}

fn residual(mut ax: Vec<f64>, f: &[f64]) -> Vec<f64> {
    ax.iter_mut().zip(f).for_each(|(a, b)| *a -= b);
    ax
}

/// Direct solve of `A α = F` (the nonlinear term, if any, is ignored).
pub fn solve_linear(system: &AssembledSystem, load: &[f64]) -> Result<OracleSolution> {
    LinearOracle::new(system)?.solve(load)
}

/// Newton iteration on `r(α) = Aα - q(α) - F`.
///
/// `init = None` starts from the linearized solution. Stops when
/// `|r| <= tol (1 + |F|)`; no line search.
pub fn solve_burgers_newton(
    system: &AssembledSystem,
    load: &[f64],
    init: Option<&[f64]>,
    tol: f64,
    max_iters: usize,
) -> Result<OracleSolution> {
    let tensor = system
        .burgers
        .as_ref()
        .ok_or_else(|| Error::invalid("system was assembled without the Burgers tensor"))?;
    check_len(system.size(), load.len())?;
    let mut alpha = match init {
        Some(a) => {
            check_len(system.size(), a.len())?;
            a.to_vec()
        }
        None => solve_linear(system, load)?.alpha_star,
    };
    let bound = tol * (1.0 + norm2(load));
    let mut history = Vec::new();
    for it in 1..=max_iters {
        let r = system.residual(&alpha, load);
        let rn = norm2(&r);
        history.push(rn);
        if !rn.is_finite() {
            break;
        }
        if rn <= bound {
            return Ok(OracleSolution {
                alpha_star: alpha,
                residual_norm: rn,
                newton_iters: it,
                residual_history: history,
            });
        }
        // J = A - G(α); assembled from the shared sparsity of A and G
        let g = tensor.jacobian(&alpha);
        let mut b = crate::linalg::TripletBuilder::new(system.size(), system.size());
        for (i, j, v) in system.matrix.iter() {
            b.add(i, j, v);
        }
        for (i, j, v) in g.iter() {
            b.add(i, j, -v);
        }
        let delta = LuFactor::new(&b.build())?.solve(&r)?;
        alpha.iter_mut().zip(&delta).for_each(|(a, d)| *a -= d);
    }
    Err(Error::ConvergenceFailure {
        iterations: max_iters,
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// Solve with whichever path the system calls for.
pub fn solve_system(system: &AssembledSystem, load: &[f64]) -> Result<OracleSolution> {
    if system.is_nonlinear() {
        solve_burgers_newton(system, load, None, 1e-12, 50)
    } else {
        solve_linear(system, load)
    }
}

/// Oracle solution on a mesh uniformly refined `factor` times finer than
/// the coarse one.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub mesh: Mesh,
    pub dofmap: DofMap,
    pub coeffs: Vec<f64>,
    pub refinement: usize,
    pub solution: OracleSolution,
}

impl ReferenceSolution {
    pub fn field(&self) -> FeFunction<'_> {
        FeFunction::new(&self.mesh, &self.dofmap, self.coeffs.clone()).expect("consistent sizes")
    }

    /// `‖u_h - u_ref‖ / ‖u_ref‖`, integrated on the fine mesh.
    pub fn rel_error(&self, coarse: &FeFunction) -> Result<f64> {
        l2_rel_distance(coarse, &self.field())
    }
}

/// Solve `problem` with forcing `f` on `coarse` refined by `factor`, which
/// must be 1 (the coarse mesh itself) or a power of two of at least 4.
pub fn reference_solution(
    problem: &ProblemSpec,
    f: &dyn Fn(Point) -> f64,
    coarse: &Mesh,
    order: ElementOrder,
    factor: usize,
) -> Result<ReferenceSolution> {
    if !(factor == 1 || (factor >= 4 && factor.is_power_of_two())) {
        return Err(Error::invalid(format!(
            "reference refinement must be 1 or a power of two >= 4, got {factor}"
        )));
    }
    let mut mesh = coarse.clone();
    for _ in 0..factor.trailing_zeros() {
        mesh = mesh.refine_uniform()?;
    }
    let dofmap = DofMap::new(&mesh, order);
    let system = assemble_bilinear(problem, &mesh, &dofmap)?;
    let load = system.assemble_load(&mesh, &dofmap, f)?;
    let solution = solve_system(&system, &load.values)?;
    let coeffs = system.expand(&solution.alpha_star)?;
    Ok(ReferenceSolution {
        mesh,
        dofmap,
        coeffs,
        refinement: factor,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{BoundaryCondition, ScalarField};
    use crate::mesh::{generate_interval_mesh, generate_square_mesh};

    fn setup(problem: &ProblemSpec, k: usize, order: ElementOrder) -> (Mesh, DofMap, AssembledSystem) {
        let mesh = generate_interval_mesh(-1.0, 1.0, k).unwrap();
        let dm = DofMap::new(&mesh, order);
        let sys = assemble_bilinear(problem, &mesh, &dm).unwrap();
        (mesh, dm, sys)
    }

    #[test]
    fn zero_load_gives_zero() {
        let (_, _, sys) = setup(&ProblemSpec::convection_diffusion(0.1, [-1.0, 0.0]), 8, ElementOrder::P2);
        let s = solve_linear(&sys, &vec![0.0; sys.size()]).unwrap();
        assert!(s.alpha_star.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn residual_contract_on_2d_system() {
        let mesh = generate_square_mesh(6).unwrap();
        let dm = DofMap::new(&mesh, ElementOrder::P2);
        let p = ProblemSpec::convection_diffusion(0.1, [-1.0, 0.0]);
        let sys = assemble_bilinear(&p, &mesh, &dm).unwrap();
        let load = sys.assemble_load(&mesh, &dm, &|x| (3.0 * x[0]).sin() + x[1]).unwrap();
        let s = solve_linear(&sys, &load.values).unwrap();
        assert!(s.residual_norm <= RESIDUAL_CONTRACT * (1.0 + norm2(&load.values)));
    }

    #[test]
    fn singular_system_reported() {
        // pure Neumann without the added mass is singular
        let mesh = generate_interval_mesh(0.0, 1.0, 4).unwrap();
        let dm = DofMap::new(&mesh, ElementOrder::P1);
        let p = ProblemSpec::new(1.0)
            .with_bc(BoundaryCondition::Neumann0WithMass)
            .with_reaction(ScalarField::Constant(-1.0));
        let sys = assemble_bilinear(&p, &mesh, &dm).unwrap();
        assert!(matches!(
            solve_linear(&sys, &vec![1.0; sys.size()]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn newton_zero_forcing_is_immediate() {
        let (_, _, sys) = setup(&ProblemSpec::burgers(1.0), 16, ElementOrder::P1);
        let zero = vec![0.0; sys.size()];
        let s = solve_burgers_newton(&sys, &zero, Some(&zero), 1e-12, 10).unwrap();
        assert_eq!(s.newton_iters, 1);
        assert!(s.alpha_star.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn newton_small_forcing_close_to_linear() {
        let (mesh, dm, sys) = setup(&ProblemSpec::burgers(1.0), 64, ElementOrder::P1);
        let f = |x: Point| 1e-3 * (4.0 * (2.0 * x[0]).sin() + 3.0 * (5.0 * x[0]).cos());
        let load = sys.assemble_load(&mesh, &dm, &f).unwrap();
        let lin = solve_linear(&sys, &load.values).unwrap();
        let nl = solve_burgers_newton(&sys, &load.values, None, 1e-12, 20).unwrap();
        for (a, b) in lin.alpha_star.iter().zip(&nl.alpha_star) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn newton_without_tensor_rejected() {
        let (_, _, sys) = setup(&ProblemSpec::new(1.0), 4, ElementOrder::P1);
        assert!(solve_burgers_newton(&sys, &[0.0; 3], None, 1e-12, 5).is_err());
    }

    #[test]
    fn reference_equal_to_coarse_has_zero_error() {
        let p = ProblemSpec::convection_diffusion(0.1, [-1.0, 0.0]);
        let (mesh, dm, sys) = setup(&p, 16, ElementOrder::P1);
        let f = |x: Point| 4.0 * (3.0 * x[0]).sin();
        let load = sys.assemble_load(&mesh, &dm, &f).unwrap();
        let s = solve_linear(&sys, &load.values).unwrap();
        let coarse = FeFunction::new(&mesh, &dm, sys.expand(&s.alpha_star).unwrap()).unwrap();
        let same = reference_solution(&p, &f, &mesh, ElementOrder::P1, 1).unwrap();
        assert_eq!(same.rel_error(&coarse).unwrap(), 0.0);
        let fine = reference_solution(&p, &f, &mesh, ElementOrder::P1, 8).unwrap();
        let e = fine.rel_error(&coarse).unwrap();
        assert!(e > 1e-4 && e < 1e-1, "{e}");
        assert!(reference_solution(&p, &f, &mesh, ElementOrder::P1, 2).is_err());
    }
}
