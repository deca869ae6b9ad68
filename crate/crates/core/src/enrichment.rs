//! Boundary-layer corrector for `-eps u'' + b u' = f` on `[-1, 1]` and the
//! enriched Galerkin system built from it.
//!
//! For `b < 0` the layer sits at `x = -1`:
//! `phi(x) = exp(-(1+x)/eps) - (1 - (1 - exp(-2/eps)) (x+1)/2)`.
//! For `b > 0` the coordinate is mirrored, `phi_R(x) = phi(-x)`. The
//! exponent assumes `|b| = 1`.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_bilinear, gauss_legendre, AssembledSystem, FeFunction, Nonlinearity, ProblemSpec,
};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{
    generate_interval_mesh, generate_shishkin_mesh, DofMap, ElementOrder, LayerSide, Mesh, Point,
};
use crate::oracle::{solve_linear, OracleSolution};

/// Above this the layer is mild and enrichment brings little.
pub const WEAK_LAYER_EPSILON: f64 = 0.1;
/// Beyond this many layer widths the exponential is below 1e-17.
const LAYER_REACH: f64 = 40.0;
const ENDPOINT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorBasis {
    epsilon: f64,
    side: LayerSide,
    /// `exp(-2/eps)`, zero once it underflows.
    tail: f64,
}

impl CorrectorBasis {
    /// Corrector for convection `b`; only the sign of `b` is used.
    pub fn new(epsilon: f64, b: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if b == 0.0 || !b.is_finite() {
            return Err(Error::invalid("corrector needs a nonzero convection direction"));
        }
        let side = if b < 0.0 { LayerSide::Left } else { LayerSide::Right };
        Ok(CorrectorBasis {
            epsilon,
            side,
            tail: (-2.0 / epsilon).exp(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn side(&self) -> LayerSide {
        self.side
    }

    /// Distance from the layer endpoint.
    fn distance(&self, x: f64) -> f64 {
        match self.side {
            LayerSide::Left => 1.0 + x,
            LayerSide::Right => 1.0 - x,
        }
    }

    /// `phi` in the layer coordinate `s = 1 + x` (left layer).
    fn value_s(&self, s: f64) -> f64 {
        (-s / self.epsilon).exp() - (1.0 - (1.0 - self.tail) * s / 2.0)
    }

    fn derivative_s(&self, s: f64) -> f64 {
        -(-s / self.epsilon).exp() / self.epsilon + (1.0 - self.tail) / 2.0
    }

    /// Unchecked value; callers stay inside `[-1, 1]`.
    pub fn value(&self, x: f64) -> f64 {
        self.value_s(self.distance(x))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let d = self.derivative_s(self.distance(x));
        match self.side {
            LayerSide::Left => d,
            LayerSide::Right => -d,
        }
    }

    /// Split `[a, b]` so that cells near the layer are geometrically graded
    /// from width `eps / 4`; cells away from the layer are left whole.
    pub fn graded_cells(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (da, db) = (self.distance(a), self.distance(b));
        let (dmin, dmax) = (da.min(db), da.max(db));
        let reach = LAYER_REACH * self.epsilon;
        if dmin >= reach || dmax - dmin <= self.epsilon / 4.0 {
            return vec![(a, b)];
        }
        let mut ds = vec![dmin];
        let mut w = self.epsilon / 4.0;
        while w < dmax && w < 2.0 * reach {
            if w > dmin {
                ds.push(w);
            }
            w *= 2.0;
        }
        ds.push(dmax);
        // map distances back to x and order left to right
        let mut xs: Vec<f64> = ds
            .into_iter()
            .map(|d| match self.side {
                LayerSide::Left => d - 1.0,
                LayerSide::Right => 1.0 - d,
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        xs[0] = a.min(b);
        *xs.last_mut().unwrap() = a.max(b);
        xs.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
    }

    /// `∫ f phi` over the mesh with graded quadrature.
    pub(crate) fn load_entry(&self, mesh: &Mesh, f: &dyn Fn(Point) -> f64) -> f64 {
        let gl = gauss_legendre(5);
        let mut acc = 0.0;
        for e in 0..mesh.element_count() {
            let v = mesh.element(e);
            let (a, b) = (mesh.nodes()[v[0]][0], mesh.nodes()[v[1]][0]);
            for (t0, t1) in self.graded_cells(a.min(b), a.max(b)) {
                for (q, w) in gl.iter() {
                    let x = t0 + (t1 - t0) * q[0];
                    acc += w * (t1 - t0) * f([x, 0.0]) * self.value(x);
                }
            }
        }
        acc
    }
}

/// Value and derivative of the corrector at `x ∈ [-1, 1]`.
pub fn corrector_eval(basis: &CorrectorBasis, x: f64) -> Result<(f64, f64)> {
    if !(-1.0 - ENDPOINT_SLACK..=1.0 + ENDPOINT_SLACK).contains(&x) {
        return Err(Error::invalid(format!("corrector evaluated outside [-1, 1] at {x}")));
    }
    Ok((basis.value(x), basis.derivative(x)))
}

/// The unenriched system with one extra row and column for the corrector.
/// The leading block is bit-identical to [`assemble_bilinear`].
pub fn assemble_enriched(
    problem: &ProblemSpec,
    mesh: &Mesh,
    dofmap: &DofMap,
    basis: &CorrectorBasis,
) -> Result<AssembledSystem> {
    if mesh.dim() != 1 {
        return Err(Error::Unsupported("corrector enrichment is 1D only".into()));
    }
    if problem.nonlinearity != Nonlinearity::None {
        return Err(Error::Unsupported("corrector enrichment needs a linear problem".into()));
    }
    if problem.bc != crate::fem::BoundaryCondition::Dirichlet0 {
        return Err(Error::Unsupported("corrector enrichment needs Dirichlet data".into()));
    }
    let (lo, hi) = mesh.bounding_box();
    if (lo[0] + 1.0).abs() > 1e-12 || (hi[0] - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("corrector is defined on [-1, 1] only"));
    }
    let base = assemble_bilinear(problem, mesh, dofmap)?;
    let n = base.size();
    let eps = problem.epsilon;
    let gl = gauss_legendre(5);
    // row n tests with phi_cor, column n is the phi_cor trial function
    let mut row = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut mrow = vec![0.0; n];
    let mut corner = 0.0;
    let mut mcorner = 0.0;
    for e in 0..mesh.element_count() {
        let v = mesh.element(e);
        let (x0, x1) = (mesh.nodes()[v[0]][0], mesh.nodes()[v[1]][0]);
        let dofs = dofmap.element_dofs(e);
        for (t0, t1) in basis.graded_cells(x0.min(x1), x0.max(x1)) {
            for (q, w) in gl.iter() {
                let x = t0 + (t1 - t0) * q[0];
                let w = w * (t1 - t0);
                let p = [x, 0.0];
                let a = problem.diffusion.eval(p);
                if !(a > 0.0) {
                    return Err(Error::Coefficient {
                        x,
                        y: 0.0,
                        msg: format!("diffusion coefficient {a} is not positive"),
                    });
                }
                let b = problem.convection.eval(p)[0];
                let c = problem.effective_reaction(p);
                let (pc, dc) = (basis.value(x), basis.derivative(x));
                let s = crate::fem::reference_basis(dofmap.order(), 1, [(x - x0) / (x1 - x0), 0.0])?;
                for (i, &d) in dofs.iter().enumerate() {
                    let Some(r) = base.row_of(d) else { continue };
                    let (phi, dphi) = (s.values[i], s.gradients[i][0] / (x1 - x0));
                    // B[phi_i, phi_cor]: trial phi_i, test phi_cor
                    row[r] += w * (eps * a * dphi * dc + b * dphi * pc + c * phi * pc);
                    // B[phi_cor, phi_i]: trial phi_cor, test phi_i
                    col[r] += w * (eps * a * dc * dphi + b * dc * phi + c * pc * phi);
                    mrow[r] += w * phi * pc;
                }
                corner += w * (eps * a * dc * dc + b * dc * pc + c * pc * pc);
                mcorner += w * pc * pc;
            }
        }
    }
    let extend = |m: &CsrMatrix, row: &[f64], col: &[f64], corner: f64| {
        let mut t = TripletBuilder::new(n + 1, n + 1);
        for (i, j, v) in m.iter() {
            t.add(i, j, v);
        }
        for k in 0..n {
            if row[k] != 0.0 {
                t.add(n, k, row[k]);
            }
            if col[k] != 0.0 {
                t.add(k, n, col[k]);
            }
        }
        t.add(n, n, corner);
        t.build()
    };
    let matrix = extend(&base.matrix, &row, &col, corner);
    let mass = extend(&base.mass, &mrow, &mrow, mcorner);
    let mut system = base.with_enrichment(matrix, mass, *basis);
    if eps >= WEAK_LAYER_EPSILON {
        system.warnings.push(format!(
            "epsilon = {eps} has no sharp layer; enrichment is unnecessary"
        ));
    }
    Ok(system)
}

/// Mesh and reference settings for the singular-perturbation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularSetup {
    pub elements: usize,
    pub order: ElementOrder,
    /// Element count of the Shishkin reference mesh.
    pub reference_elements: usize,
    pub sigma: f64,
}

impl Default for SingularSetup {
    fn default() -> Self {
        SingularSetup {
            elements: 32,
            order: ElementOrder::P1,
            reference_elements: 4096,
            sigma: 3.0,
        }
    }
}

/// Layer-resolving reference: P2 Galerkin on a Shishkin mesh.
#[derive(Debug, Clone)]
pub struct LayerReference {
    pub mesh: Mesh,
    pub dofmap: DofMap,
    pub coeffs: Vec<f64>,
    pub epsilon: f64,
    pub side: LayerSide,
}

impl LayerReference {
    pub fn new(problem: &ProblemSpec, f: &dyn Fn(Point) -> f64, setup: &SingularSetup) -> Result<Self> {
        let b = problem.convection.eval([0.0, 0.0])[0];
        let side = if b < 0.0 { LayerSide::Left } else { LayerSide::Right };
        let mesh = generate_shishkin_mesh(
            -1.0,
            1.0,
            setup.reference_elements,
            problem.epsilon,
            setup.sigma,
            side,
        )?;
        let dofmap = DofMap::new(&mesh, ElementOrder::P2);
        let system = assemble_bilinear(problem, &mesh, &dofmap)?;
        let load = system.assemble_load(&mesh, &dofmap, f)?;
        let sol = solve_linear(&system, &load.values)?;
        let coeffs = system.expand(&sol.alpha_star)?;
        Ok(LayerReference {
            mesh,
            dofmap,
            coeffs,
            epsilon: problem.epsilon,
            side,
        })
    }

    pub fn field(&self) -> FeFunction<'_> {
        FeFunction::new(&self.mesh, &self.dofmap, self.coeffs.clone()).expect("consistent sizes")
    }

    /// `max |u_ref|` over the DOF values.
    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct SingularSolution {
    pub oracle: OracleSolution,
    pub full_coeffs: Vec<f64>,
    pub rel_l2: f64,
    /// `max |u_h - u_ref|` over `[-1, -1 + 10 eps]` (mirrored for `b > 0`).
    pub layer_max_error: f64,
    pub sup_norm: f64,
}

/// Oracle solve of the (optionally enriched) coarse system, compared with a
/// layer-resolving reference.
pub fn solve_singular(
    problem: &ProblemSpec,
    f: &dyn Fn(Point) -> f64,
    enriched: bool,
    setup: &SingularSetup,
) -> Result<SingularSolution> {
    let reference = LayerReference::new(problem, f, setup)?;
    solve_singular_against(problem, f, enriched, setup, &reference)
}

pub fn solve_singular_against(
    problem: &ProblemSpec,
    f: &dyn Fn(Point) -> f64,
    enriched: bool,
    setup: &SingularSetup,
    reference: &LayerReference,
) -> Result<SingularSolution> {
    let mesh = generate_interval_mesh(-1.0, 1.0, setup.elements)?;
    let dofmap = DofMap::new(&mesh, setup.order);
    let b = problem.convection.eval([0.0, 0.0])[0];
    let basis = CorrectorBasis::new(problem.epsilon, b)?;
    let system = if enriched {
        assemble_enriched(problem, &mesh, &dofmap, &basis)?
    } else {
        assemble_bilinear(problem, &mesh, &dofmap)?
    };
    let load = system.assemble_load(&mesh, &dofmap, f)?;
    let oracle = solve_linear(&system, &load.values)?;
    let full_coeffs = system.expand(&oracle.alpha_star)?;
    let (rel_l2, layer_max_error) =
        compare_with_reference(&mesh, &dofmap, &full_coeffs, system.corrector.as_ref(), reference)?;
    Ok(SingularSolution {
        oracle,
        full_coeffs,
        rel_l2,
        layer_max_error,
        sup_norm: reference.sup_norm(),
    })
}

/// Relative L² error and max error inside the layer for a coarse field whose
/// full coefficients carry the corrector weight last (if `corrector` is set).
pub fn compare_with_reference(
    mesh: &Mesh,
    dofmap: &DofMap,
    full_coeffs: &[f64],
    corrector: Option<&CorrectorBasis>,
    reference: &LayerReference,
) -> Result<(f64, f64)> {
    let nodal = full_coeffs[..dofmap.dof_count()].to_vec();
    let mut field = FeFunction::new(mesh, dofmap, nodal)?;
    if let Some(c) = corrector {
        let w = *full_coeffs
            .get(dofmap.dof_count())
            .ok_or_else(|| Error::invalid("missing corrector coefficient"))?;
        field = field.with_corrector(*c, w);
    }
    let ref_field = reference.field();
    let rel = crate::fem::l2_rel_distance(&field, &ref_field)?;
    let (eps, side) = (reference.epsilon, reference.side);
    let samples = 400;
    let mut max_err: f64 = 0.0;
    for s in 0..=samples {
        let d = 10.0 * eps * s as f64 / samples as f64;
        let x = match side {
            LayerSide::Left => -1.0 + d,
            LayerSide::Right => 1.0 - d,
        };
        max_err = max_err.max((field.eval([x, 0.0])? - ref_field.eval([x, 0.0])?).abs());
    }
    Ok((rel, max_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::VectorField;

    fn singular(eps: f64) -> ProblemSpec {
        ProblemSpec::convection_diffusion(eps, [-1.0, 0.0])
    }

    /// Exact solution of `-eps u'' - u' = m0 sin(n0 x) + m1 cos(n1 x)` with
    /// zero data on `[-1, 1]`.
    pub(crate) fn exact_singular(eps: f64, w: [f64; 4]) -> impl Fn(f64) -> f64 {
        let [m0, n0, m1, n1] = w;
        let sinc = |t: f64| if t.abs() < 1e-8 { 1.0 - t * t / 6.0 } else { t.sin() / t };
        let up = move |x: f64| {
            let d0 = 1.0 + eps * eps * n0 * n0;
            let d1 = 1.0 + eps * eps * n1 * n1;
            // Q (cos(n x) - 1) written without dividing by n
            let s = sinc(n0 * x / 2.0);
            let a = eps * m0 / d0 * (n0 * x).sin() - m0 / d0 * n0 * x * x / 2.0 * s * s;
            let b = -m1 / d1 * x * sinc(n1 * x) + eps * m1 / d1 * (n1 * x).cos();
            a + b
        };
        let tail = (-2.0 / eps).exp();
        let c2 = (up(1.0) - up(-1.0)) / (1.0 - tail);
        let c1 = -up(1.0) - c2 * tail;
        move |x: f64| up(x) + c1 + c2 * (-(1.0 + x) / eps).exp()
    }

    #[test]
    fn exact_solution_satisfies_equation() {
        let (eps, w) = (0.05, [4.0, 2.5, 3.5, 0.7]);
        let u = exact_singular(eps, w);
        assert!(u(-1.0).abs() < 1e-13 && u(1.0).abs() < 1e-13);
        let h = 1e-4;
        for x in [-0.9, -0.3, 0.2, 0.8] {
            let d1 = (u(x + h) - u(x - h)) / (2.0 * h);
            let d2 = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
            let f = w[0] * (w[1] * x).sin() + w[2] * (w[3] * x).cos();
            assert!((-eps * d2 - d1 - f).abs() < 1e-5);
        }
    }

    #[test]
    fn endpoints_vanish() {
        for eps in [1e-1, 1e-3, 1e-5] {
            for b in [-1.0, 1.0] {
                let c = CorrectorBasis::new(eps, b).unwrap();
                assert!(corrector_eval(&c, -1.0).unwrap().0.abs() <= 1e-12);
                assert!(corrector_eval(&c, 1.0).unwrap().0.abs() <= 1e-12);
            }
        }
        let c = CorrectorBasis::new(1e-5, -1.0).unwrap();
        assert_eq!(c.value(-1.0), 0.0);
        assert!(corrector_eval(&c, 1.5).is_err());
    }

    #[test]
    fn matches_extended_precision_values() {
        // 40-digit evaluations of the closed form at the same f64 inputs
        let expect = [
            (0.5, -0.39346684028935331307, -60652.565971064667055),
            (1.0, -0.63211555882688347218, -36787.444117311655058),
            (2.0, -0.86465471676365799273, -13533.028323634199726),
            (5.0, -0.99323705300091082527, -673.29469990891774861),
            (10.0, -0.99990460007023747065, -4.0399929762534852351),
        ];
        let eps = 1e-5;
        let c = CorrectorBasis::new(eps, -1.0).unwrap();
        for (k, v, d) in expect {
            let (cv, cd) = corrector_eval(&c, -1.0 + k * eps).unwrap();
            assert!((cv - v).abs() < 1e-14, "value at {k} eps");
            assert!((cd - d).abs() < 1e-10 * d.abs(), "derivative at {k} eps");
        }
    }

    #[test]
    fn maximum_sits_inside_the_layer() {
        let eps = 1e-3;
        let c = CorrectorBasis::new(eps, -1.0).unwrap();
        let (mut best, mut arg) = (0.0, 0.0);
        for i in 0..=200_000 {
            let x = -1.0 + 2.0 * i as f64 / 200_000.0;
            if c.value(x).abs() > best {
                best = c.value(x).abs();
                arg = x;
            }
        }
        assert!(arg + 1.0 <= 10.0 * eps * eps.ln().abs());
        let mirrored = CorrectorBasis::new(eps, 1.0).unwrap();
        assert_eq!(mirrored.value(-arg), c.value(arg));
    }

    #[test]
    fn graded_cells_cover_and_refine() {
        let c = CorrectorBasis::new(1e-5, -1.0).unwrap();
        let cells = c.graded_cells(-1.0, -0.9375);
        assert_eq!(cells[0].0, -1.0);
        assert_eq!(cells.last().unwrap().1, -0.9375);
        assert!(cells[0].1 - cells[0].0 <= 1e-5 / 4.0 + 1e-15);
        for w in cells.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert_eq!(c.graded_cells(0.0, 0.5), vec![(0.0, 0.5)]);
    }

    #[test]
    fn enriched_block_structure() {
        let mesh = generate_interval_mesh(-1.0, 1.0, 32).unwrap();
        let dm = DofMap::new(&mesh, ElementOrder::P1);
        let p = singular(1e-5);
        let basis = CorrectorBasis::new(1e-5, -1.0).unwrap();
        let base = assemble_bilinear(&p, &mesh, &dm).unwrap();
        let enr = assemble_enriched(&p, &mesh, &dm, &basis).unwrap();
        let n = base.size();
        assert_eq!(enr.size(), n + 1);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(enr.matrix.get(i, j).to_bits(), base.matrix.get(i, j).to_bits());
            }
        }
        assert!(enr.matrix.get(n, n) > 0.0);
        assert!(enr.warnings.is_empty());
        let weak = assemble_enriched(&singular(0.2), &mesh, &dm, &CorrectorBasis::new(0.2, -1.0).unwrap());
        assert_eq!(weak.unwrap().warnings.len(), 1);
        let burgers = ProblemSpec::burgers(1.0);
        assert!(matches!(
            assemble_enriched(&burgers, &mesh, &dm, &basis),
            Err(Error::Unsupported(_))
        ));
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 60)
    }

    #[test]
    fn corrector_entries_match_adaptive_simpson() {
        let eps = 1e-5;
        let k = 32;
        let h = 2.0 / k as f64;
        let mesh = generate_interval_mesh(-1.0, 1.0, k).unwrap();
        let dm = DofMap::new(&mesh, ElementOrder::P1);
        let basis = CorrectorBasis::new(eps, -1.0).unwrap();
        let enr = assemble_enriched(&singular(eps), &mesh, &dm, &basis).unwrap();
        let n = enr.size() - 1;
        // interior hat i is centred at x_i = -1 + (i + 1) h
        for i in [0usize, 1, 5, 20] {
            let xi = -1.0 + (i + 1) as f64 * h;
            let hat = move |x: f64| (1.0 - (x - xi).abs() / h).max(0.0);
            let dhat = move |x: f64| if x < xi { 1.0 / h } else { -1.0 / h };
            // B[phi_cor, phi_i] = eps ∫ phi_cor' hat' - ∫ phi_cor' hat
            let g = |x: f64| eps * basis.derivative(x) * dhat(x) - basis.derivative(x) * hat(x);
            let oracle = adaptive_simpson(&g, xi - h, xi, 1e-16) + adaptive_simpson(&g, xi, xi + h, 1e-16);
            let got = enr.matrix.get(i, n);
            assert!((got - oracle).abs() <= 1e-8 * oracle.abs(), "col {i}: {got} vs {oracle}");
            let gt = |x: f64| eps * basis.derivative(x) * dhat(x) - dhat(x) * basis.value(x);
            let oracle_t = adaptive_simpson(&gt, xi - h, xi, 1e-16) + adaptive_simpson(&gt, xi, xi + h, 1e-16);
            let got_t = enr.matrix.get(n, i);
            assert!((got_t - oracle_t).abs() <= 1e-8 * oracle_t.abs(), "row {i}: {got_t} vs {oracle_t}");
        }
    }

    #[test]
    fn layer_reference_matches_closed_form() {
        for eps in [1e-2, 1e-5] {
            let w = [4.2, 3.1, 3.7, 5.5];
            let f = move |p: Point| w[0] * (w[1] * p[0]).sin() + w[2] * (w[3] * p[0]).cos();
            let reference = LayerReference::new(&singular(eps), &f, &SingularSetup::default()).unwrap();
            let u = exact_singular(eps, w);
            let field = reference.field();
            let err = field.l2_distance_to_fn(&|p| u(p[0]));
            let norm = field.l2_norm();
            assert!(err / norm < 1e-6, "eps {eps}: {}", err / norm);
        }
    }

    #[test]
    fn weak_layer_both_accurate() {
        let eps = 0.1;
        let f = |p: Point| 4.0 * (2.0 * p[0]).sin() + 3.5 * (1.5 * p[0]).cos();
        let setup = SingularSetup::default();
        let reference = LayerReference::new(&singular(eps), &f, &setup).unwrap();
        let plain = solve_singular_against(&singular(eps), &f, false, &setup, &reference).unwrap();
        let enr = solve_singular_against(&singular(eps), &f, true, &setup, &reference).unwrap();
        // Both solves resolve the mild layer. The corrector still removes the
        // layer component, so the enriched error is about 9x smaller rather
        // than equal.
        assert!(plain.rel_l2 < 1e-2);
        assert!(enr.rel_l2 <= plain.rel_l2);
    }

    #[test]
    fn mirrored_layer_for_positive_convection() {
        let eps = 1e-4;
        let p = ProblemSpec::new(eps).with_convection(VectorField::Constant([1.0, 0.0]));
        let f = |_: Point| 1.0;
        let setup = SingularSetup::default();
        let plain = solve_singular(&p, &f, false, &setup).unwrap();
        let enr = solve_singular(&p, &f, true, &setup).unwrap();
        assert!(enr.rel_l2 < 1e-2 && enr.rel_l2 < plain.rel_l2);
    }
}
