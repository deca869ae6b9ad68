//! Finite-element functions: point location, evaluation and L² distances
//! between fields living on different meshes.

use super::assembly::ElementMap;
use super::basis::shape;
use super::quadrature::{gauss_legendre, quadrature_rule};
use crate::enrichment::CorrectorBasis;
use crate::error::{check_len, Error, Result};
use crate::mesh::{DofMap, Mesh, Point};

const LOCATE_SLACK: f64 = 1e-10;

/// Finds the element containing a point.
#[derive(Debug, Clone)]
pub struct Locator {
    kind: LocatorKind,
}

#[derive(Debug, Clone)]
enum LocatorKind {
    /// Elements sorted by left endpoint: `(left, right, element)`.
    Interval(Vec<(f64, f64, usize)>),
    Grid {
        origin: Point,
        cell: [f64; 2],
        dims: [usize; 2],
        buckets: Vec<Vec<usize>>,
    },
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Self {
        if mesh.dim() == 1 {
            let mut iv: Vec<(f64, f64, usize)> = (0..mesh.element_count())
                .map(|e| {
                    let v = mesh.element(e);
                    let (a, b) = (mesh.nodes()[v[0]][0], mesh.nodes()[v[1]][0]);
                    (a.min(b), a.max(b), e)
                })
                .collect();
            iv.sort_by(|x, y| x.0.total_cmp(&y.0));
            return Locator {
                kind: LocatorKind::Interval(iv),
            };
        }
        let (lo, hi) = mesh.bounding_box();
        let side = (mesh.element_count() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut buckets = vec![Vec::new(); side * side];
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        for e in 0..mesh.element_count() {
            let v = mesh.element(e);
            let pts: Vec<Point> = v.iter().map(|&i| mesh.nodes()[i]).collect();
            let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for p in &pts {
                x0 = x0.min(p[0]);
                y0 = y0.min(p[1]);
                x1 = x1.max(p[0]);
                y1 = y1.max(p[1]);
            }
            let i0 = clamp((x0 - lo[0]) / cell[0], side);
            let i1 = clamp((x1 - lo[0]) / cell[0], side);
            let j0 = clamp((y0 - lo[1]) / cell[1], side);
            let j1 = clamp((y1 - lo[1]) / cell[1], side);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * side + i].push(e);
                }
            }
        }
        Locator {
            kind: LocatorKind::Grid {
                origin: lo,
                cell,
                dims,
                buckets,
            },
        }
    }

    /// Element containing `p` and the local coordinates of `p` in it.
    pub fn locate(&self, mesh: &Mesh, p: Point) -> Option<(usize, Point)> {
        match &self.kind {
            LocatorKind::Interval(iv) => {
                let idx = iv.partition_point(|&(a, _, _)| a <= p[0]);
                // the candidate is the last interval starting at or before p
                for k in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
                    if let Some(&(a, b, e)) = iv.get(k) {
                        let slack = LOCATE_SLACK * (b - a);
                        if p[0] >= a - slack && p[0] <= b + slack {
                            return Some((e, local_coords(mesh, e, p)));
                        }
                    }
                }
                None
            }
            LocatorKind::Grid {
                origin,
                cell,
                dims,
                buckets,
            } => {
                let fi = (p[0] - origin[0]) / cell[0];
                let fj = (p[1] - origin[1]) / cell[1];
                if fi < -LOCATE_SLACK || fj < -LOCATE_SLACK {
                    return None;
                }
                let i = (fi.max(0.0) as usize).min(dims[0] - 1);
                let j = (fj.max(0.0) as usize).min(dims[1] - 1);
                let mut best: Option<(usize, Point, f64)> = None;
                for &e in &buckets[j * dims[0] + i] {
                    let r = local_coords(mesh, e, p);
                    let outside = (-r[0]).max(-r[1]).max(r[0] + r[1] - 1.0);
                    if outside <= 0.0 {
                        return Some((e, r));
                    }
                    if best.map_or(true, |b| outside < b.2) {
                        best = Some((e, r, outside));
                    }
                }
                best.filter(|b| b.2 <= LOCATE_SLACK).map(|b| (b.0, b.1))
            }
        }
    }
}

fn local_coords(mesh: &Mesh, e: usize, p: Point) -> Point {
    let v = mesh.element(e);
    let a = mesh.nodes()[v[0]];
    if mesh.dim() == 1 {
        let b = mesh.nodes()[v[1]];
        return [(p[0] - a[0]) / (b[0] - a[0]), 0.0];
    }
    let b = mesh.nodes()[v[1]];
    let c = mesh.nodes()[v[2]];
    let (j00, j01, j10, j11) = (b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1]);
    let det = j00 * j11 - j01 * j10;
    let (dx, dy) = (p[0] - a[0], p[1] - a[1]);
    [(j11 * dx - j01 * dy) / det, (-j10 * dx + j00 * dy) / det]
}

/// A finite-element function: full nodal coefficients on a mesh, optionally
/// plus a weighted corrector term.
#[derive(Debug, Clone)]
pub struct FeFunction<'a> {
    mesh: &'a Mesh,
    dofmap: &'a DofMap,
    coeffs: Vec<f64>,
    corrector: Option<(CorrectorBasis, f64)>,
    locator: Locator,
}

impl<'a> FeFunction<'a> {
    pub fn new(mesh: &'a Mesh, dofmap: &'a DofMap, coeffs: Vec<f64>) -> Result<Self> {
        check_len(dofmap.dof_count(), coeffs.len())?;
        Ok(FeFunction {
            mesh,
            dofmap,
            coeffs,
            corrector: None,
            locator: Locator::new(mesh),
        })
    }

    pub fn with_corrector(mut self, basis: CorrectorBasis, weight: f64) -> Self {
        self.corrector = Some((basis, weight));
        self
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Value at local coordinates `r` of element `e`.
    pub fn eval_local(&self, e: usize, r: Point) -> f64 {
        let s = shape(self.dofmap.order(), self.dofmap.dim(), r);
        let dofs = self.dofmap.element_dofs(e);
        let mut v: f64 = dofs.iter().zip(&s.values).map(|(&d, p)| self.coeffs[d] * p).sum();
        if let Some((basis, w)) = &self.corrector {
            let x = ElementMap::new(self.mesh, e).to_physical(r);
            v += w * basis.value(x[0]);
        }
        v
    }

    pub fn eval(&self, p: Point) -> Result<f64> {
        let (e, r) = self
            .locator
            .locate(self.mesh, p)
            .ok_or_else(|| Error::invalid(format!("point {p:?} is outside the mesh")))?;
        Ok(self.eval_local(e, r))
    }

    pub fn eval_many(&self, points: &[Point]) -> Result<Vec<f64>> {
        points.iter().map(|&p| self.eval(p)).collect()
    }

    /// `‖u‖_{L²}` by element quadrature (graded near a corrector layer).
    pub fn l2_norm(&self) -> f64 {
        let zero = |_: Point| 0.0;
        self.l2_distance_to_fn(&zero)
    }

    /// `‖u - g‖_{L²}` integrated on this function's mesh.
    pub fn l2_distance_to_fn(&self, g: &dyn Fn(Point) -> f64) -> f64 {
        let mut acc = 0.0;
        if self.mesh.dim() == 1 {
            let gl = gauss_legendre(5);
            for e in 0..self.mesh.element_count() {
                let v = self.mesh.element(e);
                let (a, b) = (self.mesh.nodes()[v[0]][0], self.mesh.nodes()[v[1]][0]);
                for (t0, t1) in self.subcells(a.min(b), a.max(b)) {
                    for (q, w) in gl.iter() {
                        let x = t0 + (t1 - t0) * q[0];
                        let r = [(x - a) / (b - a), 0.0];
                        let d = self.eval_local(e, r) - g([x, 0.0]);
                        acc += w * (t1 - t0) * d * d;
                    }
                }
            }
        } else {
            let rule = quadrature_rule(2, 5).expect("tabulated");
            for e in 0..self.mesh.element_count() {
                let map = ElementMap::new(self.mesh, e);
                for (r, w) in rule.iter() {
                    let d = self.eval_local(e, r) - g(map.to_physical(r));
                    acc += w * map.det().abs() * d * d;
                }
            }
        }
        acc.sqrt()
    }

    /// Subintervals of `[a, b]` that resolve the corrector layer if present.
    fn subcells(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        match &self.corrector {
            Some((basis, _)) => basis.graded_cells(a, b),
            None => vec![(a, b)],
        }
    }
}

/// `‖u - v‖_{L²}` for two fields on possibly different meshes of one domain.
///
/// In 1D the integral runs over the merged breakpoints of both meshes so each
/// piece is polynomial in both fields (up to the corrector, which is graded).
/// In 2D `fine` must be nested in `coarse` (obtained by uniform refinement).
pub fn l2_distance(coarse: &FeFunction, fine: &FeFunction) -> Result<f64> {
    if coarse.mesh.dim() != fine.mesh.dim() {
        return Err(Error::invalid("fields live in different dimensions"));
    }
    let mut acc = 0.0;
    if coarse.mesh.dim() == 1 {
        let mut breaks: Vec<f64> = coarse
            .mesh
            .nodes()
            .iter()
            .chain(fine.mesh.nodes())
            .map(|p| p[0])
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        let gl = gauss_legendre(5);
        for w in breaks.windows(2) {
            let mid = [0.5 * (w[0] + w[1]), 0.0];
            let (ec, _) = locate_or_err(coarse, mid)?;
            let (ef, _) = locate_or_err(fine, mid)?;
            let mut cells = coarse.subcells(w[0], w[1]);
            if fine.corrector.is_some() {
                cells = cells.into_iter().flat_map(|(a, b)| fine.subcells(a, b)).collect();
            }
            for (t0, t1) in cells {
                for (q, wq) in gl.iter() {
                    let x = [t0 + (t1 - t0) * q[0], 0.0];
                    let d = coarse.eval_local(ec, local_coords(coarse.mesh, ec, x))
                        - fine.eval_local(ef, local_coords(fine.mesh, ef, x));
                    acc += wq * (t1 - t0) * d * d;
                }
            }
        }
    } else {
        let rule = quadrature_rule(2, 5).expect("tabulated");
        for e in 0..fine.mesh.element_count() {
            let map = ElementMap::new(fine.mesh, e);
            let (ec, _) = locate_or_err(coarse, map.to_physical([1.0 / 3.0, 1.0 / 3.0]))?;
            for (r, w) in rule.iter() {
                let x = map.to_physical(r);
                let d = coarse.eval_local(ec, local_coords(coarse.mesh, ec, x)) - fine.eval_local(e, r);
                acc += w * map.det().abs() * d * d;
            }
        }
    }
    Ok(acc.sqrt())
}

/// `‖u - u_ref‖ / ‖u_ref‖` with the norms of [`l2_distance`].
pub fn l2_rel_distance(field: &FeFunction, reference: &FeFunction) -> Result<f64> {
    let den = reference.l2_norm();
    if den == 0.0 {
        return Err(Error::DivideByZero("reference field has zero L2 norm"));
    }
    Ok(l2_distance(field, reference)? / den)
}

fn locate_or_err(f: &FeFunction, p: Point) -> Result<(usize, Point)> {
    f.locator
        .locate(f.mesh, p)
        .ok_or_else(|| Error::invalid(format!("point {p:?} is outside the mesh")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_interval_mesh, generate_square_mesh, ElementOrder};

    #[test]
    fn locates_every_centroid_2d() {
        let mesh = generate_square_mesh(5).unwrap();
        let loc = Locator::new(&mesh);
        for e in 0..mesh.element_count() {
            let c = ElementMap::new(&mesh, e).to_physical([1.0 / 3.0, 1.0 / 3.0]);
            assert_eq!(loc.locate(&mesh, c).unwrap().0, e);
        }
        assert!(loc.locate(&mesh, [1.5, 0.0]).is_none());
    }

    #[test]
    fn interpolant_of_linear_is_exact() {
        let mesh = generate_square_mesh(3).unwrap();
        for order in [ElementOrder::P1, ElementOrder::P2] {
            let dm = DofMap::new(&mesh, order);
            let c: Vec<f64> = dm.dof_coords().iter().map(|p| 2.0 * p[0] - p[1]).collect();
            let f = FeFunction::new(&mesh, &dm, c).unwrap();
            let v = f.eval([0.123, -0.77]).unwrap();
            assert!((v - (0.246 + 0.77)).abs() < 1e-13);
        }
    }

    #[test]
    fn distance_between_meshes_1d() {
        // x^2 on two meshes: P2 reproduces it, so the distance vanishes
        let a = generate_interval_mesh(0.0, 1.0, 3).unwrap();
        let b = generate_interval_mesh(0.0, 1.0, 7).unwrap();
        let (da, db) = (DofMap::new(&a, ElementOrder::P2), DofMap::new(&b, ElementOrder::P2));
        let sq = |dm: &DofMap| dm.dof_coords().iter().map(|p| p[0] * p[0]).collect::<Vec<_>>();
        let fa = FeFunction::new(&a, &da, sq(&da)).unwrap();
        let fb = FeFunction::new(&b, &db, sq(&db)).unwrap();
        assert!(l2_distance(&fa, &fb).unwrap() < 1e-14);
        // ∫_0^1 x^4 = 1/5
        assert!((fb.l2_norm() - 0.2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn distance_nested_2d() {
        let coarse = generate_square_mesh(2).unwrap();
        let fine = coarse.refine_uniform().unwrap();
        let dc = DofMap::new(&coarse, ElementOrder::P1);
        let df = DofMap::new(&fine, ElementOrder::P1);
        let fc = FeFunction::new(&coarse, &dc, vec![0.0; dc.dof_count()]).unwrap();
        let ff = FeFunction::new(&fine, &df, vec![1.0; df.dof_count()]).unwrap();
        // area of [-1,1]^2 is 4
        assert!((l2_distance(&fc, &ff).unwrap() - 2.0).abs() < 1e-13);
    }
}
