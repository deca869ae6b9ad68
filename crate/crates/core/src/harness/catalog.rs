//! The benchmark problems and their discretizations.

use std::fmt;
use std::str::FromStr;

use crate::enrichment::{assemble_enriched, CorrectorBasis};
use crate::error::{Error, Result};
use crate::fem::{assemble_bilinear, AssembledSystem, BoundaryCondition, ProblemSpec, ScalarField, VectorField};
use crate::forcing::{build_dataset, build_reaction_dataset, Dataset, ForcingFamily, ForcingKind, Split};
use crate::harness::config::ExperimentConfig;
use crate::mesh::{generate_disk_mesh, generate_interval_mesh, load_mesh, parse_mesh, DofMap, ElementOrder, Mesh};
use crate::opnet::InputEncoding;

const SQUARE_HOLE_MESH: &str = include_str!("../../data/square_hole.mesh");
const POLYGON_MESH: &str = include_str!("../../data/polygon.mesh");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// Unit disk, `-0.1 Δu + v·∇u = f`, `v = (-1, 0)`.
    Domain1,
    /// Square with a circular hole, same equation.
    Domain2,
    /// Non-convex polygon, same equation.
    Domain3,
    /// `-0.1 u'' - u' = f` on `[-1, 1]`, Dirichlet.
    Bc1,
    /// Same with Neumann data and `+u`.
    Bc2,
    /// `-0.1 u'' + (x² + 1) u' + x u = f`.
    Eq1,
    /// `-u'' + u u' = f`.
    Eq2,
    /// `-eps u'' - u' = f`, small `eps`.
    Singular,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 8] = [
        ProblemKind::Domain1,
        ProblemKind::Domain2,
        ProblemKind::Domain3,
        ProblemKind::Bc1,
        ProblemKind::Bc2,
        ProblemKind::Eq1,
        ProblemKind::Eq2,
        ProblemKind::Singular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Domain1 => "domain1",
            ProblemKind::Domain2 => "domain2",
            ProblemKind::Domain3 => "domain3",
            ProblemKind::Bc1 => "bc1",
            ProblemKind::Bc2 => "bc2",
            ProblemKind::Eq1 => "eq1",
            ProblemKind::Eq2 => "eq2",
            ProblemKind::Singular => "singular",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ProblemKind::Domain1 | ProblemKind::Domain2 | ProblemKind::Domain3 => 2,
            _ => 1,
        }
    }

    /// Element count in 1D; disk rings (8 rings give 384 triangles) or
    /// refinements of the bundled mesh in 2D.
    pub fn default_resolution(self) -> usize {
        match self {
            ProblemKind::Domain1 => 8,
            ProblemKind::Domain2 | ProblemKind::Domain3 => 0,
            ProblemKind::Bc1 => 24,
            ProblemKind::Bc2 | ProblemKind::Eq1 | ProblemKind::Singular => 32,
            ProblemKind::Eq2 => 128,
        }
    }

    pub fn default_order(self) -> ElementOrder {
        match self {
            ProblemKind::Eq2 | ProblemKind::Singular => ElementOrder::P1,
            _ => ElementOrder::P2,
        }
    }

    pub fn default_epsilon(self) -> f64 {
        match self {
            ProblemKind::Eq2 => 1.0,
            ProblemKind::Singular => 1e-5,
            _ => 0.1,
        }
    }

    pub fn default_family(self) -> ForcingFamily {
        if self.dim() == 2 {
            ForcingFamily::paper_2d()
        } else {
            ForcingFamily::paper_1d()
        }
    }

    /// The PDE with diffusion scale `epsilon`.
    pub fn spec(self, epsilon: f64) -> ProblemSpec {
        match self {
            ProblemKind::Domain1 | ProblemKind::Domain2 | ProblemKind::Domain3 | ProblemKind::Bc1 | ProblemKind::Singular => {
                ProblemSpec::convection_diffusion(epsilon, [-1.0, 0.0])
            }
            ProblemKind::Bc2 => {
                ProblemSpec::convection_diffusion(epsilon, [-1.0, 0.0]).with_bc(BoundaryCondition::Neumann0WithMass)
            }
            ProblemKind::Eq1 => ProblemSpec::new(epsilon)
                .with_convection(VectorField::function(|p| [p[0] * p[0] + 1.0, 0.0]))
                .with_reaction(ScalarField::function(|p| p[0])),
            ProblemKind::Eq2 => ProblemSpec::burgers(epsilon),
        }
    }

    pub fn mesh(self, resolution: usize, mesh_file: Option<&std::path::Path>) -> Result<Mesh> {
        match self {
            ProblemKind::Domain1 => match mesh_file {
                Some(p) => refine(load_mesh(p)?, resolution),
                None => generate_disk_mesh(1.0, resolution),
            },
            ProblemKind::Domain2 | ProblemKind::Domain3 => {
                let base = match (mesh_file, self) {
                    (Some(p), _) => load_mesh(p)?,
                    (None, ProblemKind::Domain2) => parse_mesh(SQUARE_HOLE_MESH, "square_hole.mesh")?,
                    _ => parse_mesh(POLYGON_MESH, "polygon.mesh")?,
                };
                refine(base, resolution)
            }
            _ => generate_interval_mesh(-1.0, 1.0, resolution),
        }
    }
}

fn refine(mut mesh: Mesh, times: usize) -> Result<Mesh> {
    for _ in 0..times {
        mesh = mesh.refine_uniform()?;
    }
    Ok(mesh)
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown problem `{s}`")))
    }
}

/// Mesh, DOF map and Galerkin system at one resolution.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub problem: ProblemSpec,
    pub mesh: Mesh,
    pub dofmap: DofMap,
    pub system: AssembledSystem,
}

impl Discretization {
    pub fn new(cfg: &ExperimentConfig, resolution: usize, epsilon: f64, enriched: bool) -> Result<Self> {
        let problem = cfg.problem.spec(epsilon);
        let mesh = cfg.problem.mesh(resolution, cfg.mesh_file.as_deref())?;
        let dofmap = DofMap::new(&mesh, cfg.order);
        let system = if enriched {
            let b = problem.convection.eval([0.0, 0.0])[0];
            assemble_enriched(&problem, &mesh, &dofmap, &CorrectorBasis::new(epsilon, b)?)?
        } else {
            assemble_bilinear(&problem, &mesh, &dofmap)?
        };
        Ok(Discretization {
            problem,
            mesh,
            dofmap,
            system,
        })
    }

    pub fn family(&self, cfg: &ExperimentConfig) -> Result<ForcingFamily> {
        ForcingFamily::new(self.mesh.dim(), cfg.m_range, cfg.n_range, cfg.input)
    }

    /// Network input length under the configured encoding.
    pub fn input_dim(&self, cfg: &ExperimentConfig) -> Result<usize> {
        Ok(match cfg.input_encoding {
            InputEncoding::FAtDofs => self.dofmap.dof_count(),
            InputEncoding::OmegaVector => self.family(cfg)?.omega_len(),
        })
    }

    /// Train or test inputs. In coefficient mode the forcing is `f ≡ 1`.
    pub fn dataset(&self, cfg: &ExperimentConfig, split: Split) -> Result<Dataset> {
        let (m, seed) = match split {
            Split::Train => (cfg.m_train, cfg.train_seed),
            Split::Test => (cfg.m_test, cfg.test_seed),
        };
        let family = self.family(cfg)?;
        match cfg.input {
            ForcingKind::Forcing => build_dataset(&family, m, seed, split, &self.system, &self.mesh, &self.dofmap),
            ForcingKind::ReactionCoefficient => {
                if self.system.corrector.is_some() {
                    return Err(Error::Unsupported("coefficient inputs with enrichment".into()));
                }
                build_reaction_dataset(&family, m, seed, split, &self.problem, &|_| 1.0, &self.mesh, &self.dofmap)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn names_round_trip() {
        for p in ProblemKind::ALL {
            assert_eq!(p.to_string().parse::<ProblemKind>().unwrap(), p);
        }
        assert!("bc3".parse::<ProblemKind>().is_err());
    }

    #[test]
    fn bundled_meshes_load_with_expected_sizes() {
        let hole = ProblemKind::Domain2.mesh(0, None).unwrap();
        assert_eq!(hole.element_count(), 576);
        let area = 4.0 - PI * 0.25;
        // chords of the hole cut off a little area
        assert!((hole.total_measure() - area).abs() < 2e-3 * area);
        let poly = ProblemKind::Domain3.mesh(0, None).unwrap();
        assert_eq!(poly.element_count(), 360);
        // shoelace area of the outline
        let v = [(-1.0, -1.0), (1.0, -1.0), (1.0, 0.0), (0.6, 0.0), (0.5, -0.5), (0.0, -0.5), (-0.6, 1.0), (-1.0, 1.0)];
        let shoelace: f64 = (0..v.len())
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum::<f64>()
            / 2.0;
        assert!((poly.total_measure() - shoelace).abs() < 1e-12);
        for (x, y) in v {
            assert!(poly.nodes().iter().any(|p| (p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12));
        }
        assert_eq!(ProblemKind::Domain1.mesh(8, None).unwrap().element_count(), 384);
    }

    #[test]
    fn neumann_problem_keeps_every_dof() {
        let cfg = ExperimentConfig::for_problem(ProblemKind::Bc2);
        let d = Discretization::new(&cfg, 8, 0.1, false).unwrap();
        assert_eq!(d.system.size(), d.dofmap.dof_count());
        let cfg = ExperimentConfig::for_problem(ProblemKind::Bc1);
        let d = Discretization::new(&cfg, 8, 0.1, false).unwrap();
        assert_eq!(d.system.size(), d.dofmap.interior_dofs().len());
    }
}
