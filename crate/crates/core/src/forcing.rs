//! Random trigonometric forcings `f(x; ω)` and seeded datasets of their load
//! vectors.
//!
//! 1D: `f(x) = m0 sin(n0 x) + m1 cos(n1 x)`, `ω = (m0, n0, m1, n1)`.
//! 2D: `f(x, y) = m0 sin(n0 x + n1 y) + m1 cos(n2 x + n3 y)`,
//! `ω = (m0, m1, n0, n1, n2, n3)`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{assemble_bilinear, AssembledSystem, ProblemSpec, ScalarField};
use crate::mesh::{DofMap, Mesh, Point};

/// Seeded generator shared by dataset sampling and network initialization.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// Restore a generator at a given position in its stream.
    pub fn at_position(seed: u64, word_pos: u128) -> Self {
        let mut r = Rng::new(seed);
        r.inner.set_word_pos(word_pos);
        r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Index in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_f64() * n as f64) as usize % n.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingKind {
    Forcing,
    /// The sampled function is the reaction coefficient `c(x; ω)`.
    ReactionCoefficient,
}

impl fmt::Display for ForcingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForcingKind::Forcing => "forcing",
            ForcingKind::ReactionCoefficient => "reaction_coefficient",
        })
    }
}

impl FromStr for ForcingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forcing" => Ok(ForcingKind::Forcing),
            "reaction_coefficient" => Ok(ForcingKind::ReactionCoefficient),
            _ => Err(Error::invalid(format!("unknown family kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingFamily {
    pub dim: usize,
    pub m_range: (f64, f64),
    pub n_range: (f64, f64),
    pub kind: ForcingKind,
}

impl ForcingFamily {
    pub fn new(dim: usize, m_range: (f64, f64), n_range: (f64, f64), kind: ForcingKind) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("forcing families are 1D or 2D, got {dim}")));
        }
        for (name, (lo, hi)) in [("m", m_range), ("n", n_range)] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::invalid(format!("{name} range [{lo}, {hi}] is empty or infinite")));
            }
        }
        Ok(ForcingFamily {
            dim,
            m_range,
            n_range,
            kind,
        })
    }

    /// `m ∈ [3, 5]`, `n ∈ [0, 2π]`.
    pub fn paper_1d() -> Self {
        ForcingFamily::new(1, (3.0, 5.0), (0.0, 2.0 * PI), ForcingKind::Forcing).unwrap()
    }

    /// `m ∈ [1, 2]`, `n ∈ [0, π]`.
    pub fn paper_2d() -> Self {
        ForcingFamily::new(2, (1.0, 2.0), (0.0, PI), ForcingKind::Forcing).unwrap()
    }

    pub fn omega_len(&self) -> usize {
        if self.dim == 1 {
            4
        } else {
            6
        }
    }

    /// Whether component `i` of ω is an amplitude.
    fn is_amplitude(&self, i: usize) -> bool {
        if self.dim == 1 {
            i % 2 == 0
        } else {
            i < 2
        }
    }

    fn range(&self, i: usize) -> (f64, f64) {
        if self.is_amplitude(i) {
            self.m_range
        } else {
            self.n_range
        }
    }

    pub fn contains(&self, s: &ForcingSample) -> bool {
        s.omega.len() == self.omega_len()
            && s.omega.iter().enumerate().all(|(i, &v)| {
                let (lo, hi) = self.range(i);
                v >= lo && v <= hi
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSample {
    pub dim: usize,
    pub omega: Vec<f64>,
}

impl ForcingSample {
    pub fn new(dim: usize, omega: Vec<f64>) -> Result<Self> {
        let expect = if dim == 1 { 4 } else { 6 };
        if (dim != 1 && dim != 2) || omega.len() != expect {
            return Err(Error::invalid(format!(
                "a {dim}D sample needs {expect} parameters, got {}",
                omega.len()
            )));
        }
        Ok(ForcingSample { dim, omega })
    }

    pub fn eval(&self, p: Point) -> f64 {
        let w = &self.omega;
        if self.dim == 1 {
            w[0] * (w[1] * p[0]).sin() + w[2] * (w[3] * p[0]).cos()
        } else {
            w[0] * (w[2] * p[0] + w[3] * p[1]).sin() + w[1] * (w[4] * p[0] + w[5] * p[1]).cos()
        }
    }

    pub fn eval_many(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|&p| self.eval(p)).collect()
    }

    /// The forcing as an owned closure.
    pub fn function(&self) -> impl Fn(Point) -> f64 + Send + Sync + 'static {
        let s = self.clone();
        move |p| s.eval(p)
    }
}

/// Draw one sample; components are drawn in ω order.
pub fn sample(family: &ForcingFamily, rng: &mut Rng) -> ForcingSample {
    let omega = (0..family.omega_len())
        .map(|i| {
            let (lo, hi) = family.range(i);
            rng.uniform(lo, hi)
        })
        .collect();
    ForcingSample {
        dim: family.dim,
        omega,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub family: ForcingFamily,
    pub seed: u64,
    pub split: Split,
    pub samples: Vec<ForcingSample>,
    /// `F(ω_m)` over the unknowns of the bound system.
    pub loads: Vec<Vec<f64>>,
    /// Per-sample systems, only for reaction-coefficient datasets.
    pub systems: Vec<AssembledSystem>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The system that goes with sample `m`.
    pub fn system<'a>(&'a self, shared: &'a AssembledSystem, m: usize) -> &'a AssembledSystem {
        self.systems.get(m).unwrap_or(shared)
    }
}

fn draw(family: &ForcingFamily, m: usize, seed: u64) -> Vec<ForcingSample> {
    let mut rng = Rng::new(seed);
    (0..m).map(|_| sample(family, &mut rng)).collect()
}

/// `m` forcings drawn from `seed`, with their loads on `system`.
pub fn build_dataset(
    family: &ForcingFamily,
    m: usize,
    seed: u64,
    split: Split,
    system: &AssembledSystem,
    mesh: &Mesh,
    dofmap: &DofMap,
) -> Result<Dataset> {
    if family.kind != ForcingKind::Forcing {
        return Err(Error::invalid("use build_reaction_dataset for coefficient families"));
    }
    if family.dim != mesh.dim() {
        return Err(Error::invalid("family and mesh dimensions differ"));
    }
    let samples = draw(family, m, seed);
    let loads = samples
        .iter()
        .map(|s| system.assemble_load(mesh, dofmap, &|p| s.eval(p)).map(|l| l.values))
        .collect::<Result<_>>()?;
    Ok(Dataset {
        family: *family,
        seed,
        split,
        samples,
        loads,
        systems: Vec::new(),
    })
}

/// Variable-coefficient inputs: sample `m` reaction coefficients `c(x; ω)`,
/// rebuild `A(ω)` for each, and keep the forcing `f` fixed.
#[allow(clippy::too_many_arguments)]
pub fn build_reaction_dataset(
    family: &ForcingFamily,
    m: usize,
    seed: u64,
    split: Split,
    problem: &ProblemSpec,
    f: &dyn Fn(Point) -> f64,
    mesh: &Mesh,
    dofmap: &DofMap,
) -> Result<Dataset> {
    if family.kind != ForcingKind::ReactionCoefficient {
        return Err(Error::invalid("family does not sample reaction coefficients"));
    }
    let samples = draw(family, m, seed);
    let mut loads = Vec::with_capacity(m);
    let mut systems = Vec::with_capacity(m);
    for s in &samples {
        let p = problem.clone().with_reaction(ScalarField::function(s.function()));
        let sys = assemble_bilinear(&p, mesh, dofmap)?;
        loads.push(sys.assemble_load(mesh, dofmap, f)?.values);
        systems.push(sys);
    }
    Ok(Dataset {
        family: *family,
        seed,
        split,
        samples,
        loads,
        systems,
    })
}

/// Header `family dim m_lo m_hi n_lo n_hi seed M`, then one ω per line.
pub fn write_dataset(family: &ForcingFamily, seed: u64, samples: &[ForcingSample]) -> String {
    let mut out = format!(
        "{} {} {:?} {:?} {:?} {:?} {} {}\n",
        family.kind,
        family.dim,
        family.m_range.0,
        family.m_range.1,
        family.n_range.0,
        family.n_range.1,
        seed,
        samples.len()
    );
    for s in samples {
        let line: Vec<String> = s.omega.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    std::fs::write(path, write_dataset(&ds.family, ds.seed, &ds.samples))?;
    Ok(())
}

/// Parsed dataset file: family, seed and the ω vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub family: ForcingFamily,
    pub seed: u64,
    pub samples: Vec<ForcingSample>,
}

pub fn parse_dataset(text: &str, origin: impl AsRef<Path>) -> Result<DatasetFile> {
    let origin = origin.as_ref();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| Error::parse(origin, 1, "empty dataset file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 8 {
        return Err(Error::parse(origin, hl, "header needs `family dim m_lo m_hi n_lo n_hi seed M`"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(origin, hl, format!("`{s}`: {e}")));
    let int = |s: &str| s.parse::<u64>().map_err(|e| Error::parse(origin, hl, format!("`{s}`: {e}")));
    let kind: ForcingKind = h[0].parse().map_err(|e: Error| Error::parse(origin, hl, e.to_string()))?;
    let dim = int(h[1])? as usize;
    let family = ForcingFamily::new(dim, (num(h[2])?, num(h[3])?), (num(h[4])?, num(h[5])?), kind)
        .map_err(|e| Error::parse(origin, hl, e.to_string()))?;
    let seed = int(h[6])?;
    let m = int(h[7])? as usize;
    let mut samples = Vec::with_capacity(m);
    for (ln, line) in lines {
        let omega = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::parse(origin, ln, format!("`{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let s = ForcingSample::new(dim, omega).map_err(|e| Error::parse(origin, ln, e.to_string()))?;
        if !family.contains(&s) {
            return Err(Error::parse(origin, ln, "parameters outside the family ranges"));
        }
        samples.push(s);
    }
    if samples.len() != m {
        return Err(Error::parse(
            origin,
            hl,
            format!("header announces {m} samples, found {}", samples.len()),
        ));
    }
    Ok(DatasetFile {
        family,
        seed,
        samples,
    })
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetFile> {
    let path = path.as_ref();
    parse_dataset(&std::fs::read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_load;
    use crate::mesh::{generate_interval_mesh, ElementOrder};
    use proptest::prelude::*;
    use super::Rng;

    #[test]
    fn samples_in_range_and_reproducible() {
        let fam = ForcingFamily::paper_1d();
        let a = draw(&fam, 100, 7);
        assert_eq!(a, draw(&fam, 100, 7));
        assert_ne!(a, draw(&fam, 100, 8));
        assert!(a.iter().all(|s| fam.contains(s)));
    }

    #[test]
    fn degenerate_amplitudes_give_zero() {
        let fam = ForcingFamily::new(1, (0.0, 0.0), (0.0, 6.0), ForcingKind::Forcing).unwrap();
        let s = sample(&fam, &mut Rng::new(1));
        assert_eq!(s.eval([0.3, 0.0]), 0.0);
    }

    #[test]
    fn special_parameters() {
        let s = ForcingSample::new(1, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.eval([0.7, 0.0]), 0.0);
        let s = ForcingSample::new(1, vec![0.0, 2.0, 1.0, 0.0]).unwrap();
        assert_eq!(s.eval([0.7, 0.0]), 1.0);
        assert!(ForcingSample::new(2, vec![1.0; 4]).is_err());
    }

    #[test]
    fn matches_independent_formula() {
        let mut rng = Rng::new(99);
        let s2 = sample(&ForcingFamily::paper_2d(), &mut rng);
        let (m0, m1, n0, n1, n2, n3) = (s2.omega[0], s2.omega[1], s2.omega[2], s2.omega[3], s2.omega[4], s2.omega[5]);
        for _ in 0..100 {
            let (x, y) = (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            let direct = m0 * (n0 * x + n1 * y).sin() + m1 * (n2 * x + n3 * y).cos();
            assert!((s2.eval([x, y]) - direct).abs() <= 1e-14);
        }
    }

    #[test]
    fn mean_amplitude_near_midpoint() {
        let fam = ForcingFamily::paper_1d();
        let n = 10_000;
        let s = draw(&fam, n, 2024);
        let mean = s.iter().map(|s| s.omega[0]).sum::<f64>() / n as f64;
        // uniform on [3, 5]: sd = 2 / sqrt(12)
        let se = 2.0 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 4.0).abs() < 3.0 * se);
    }

    #[test]
    fn dataset_loads_match_direct_assembly() {
        let mesh = generate_interval_mesh(-1.0, 1.0, 24).unwrap();
        let dm = DofMap::new(&mesh, ElementOrder::P2);
        let sys = assemble_bilinear(&ProblemSpec::convection_diffusion(0.1, [-1.0, 0.0]), &mesh, &dm).unwrap();
        let ds = build_dataset(&ForcingFamily::paper_1d(), 50, 3, Split::Train, &sys, &mesh, &dm).unwrap();
        assert_eq!(ds.len(), 50);
        for (s, l) in ds.samples.iter().zip(&ds.loads) {
            let direct = assemble_load(&mesh, &dm, crate::fem::BoundaryCondition::Dirichlet0, &|p| s.eval(p));
            assert_eq!(&direct.values, l);
        }
        let empty = build_dataset(&ForcingFamily::paper_1d(), 0, 3, Split::Test, &sys, &mesh, &dm).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn reaction_dataset_rebuilds_matrices() {
        let mesh = generate_interval_mesh(-1.0, 1.0, 8).unwrap();
        let dm = DofMap::new(&mesh, ElementOrder::P1);
        let fam = ForcingFamily::new(1, (0.5, 1.0), (0.0, 1.0), ForcingKind::ReactionCoefficient).unwrap();
        let ds = build_reaction_dataset(&fam, 3, 1, Split::Train, &ProblemSpec::new(1.0), &|_| 1.0, &mesh, &dm).unwrap();
        assert_eq!(ds.systems.len(), 3);
        assert_ne!(ds.systems[0].matrix, ds.systems[1].matrix);
        assert_eq!(ds.loads[0], ds.loads[1]);
    }

    #[test]
    fn text_round_trip() {
        let fam = ForcingFamily::paper_2d();
        let samples = draw(&fam, 5, 11);
        let text = write_dataset(&fam, 11, &samples);
        assert!(text.starts_with("forcing 2 1.0 2.0 0.0 3.14159"));
        let back = parse_dataset(&text, "mem").unwrap();
        assert_eq!(back.family, fam);
        assert_eq!(back.seed, 11);
        assert_eq!(back.samples, samples);
        let bad = text.replacen(" 5\n", " 6\n", 1);
        assert!(matches!(parse_dataset(&bad, "mem"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn rng_position_restores_stream() {
        let mut a = Rng::new(5);
        for _ in 0..13 {
            a.next_u64();
        }
        let mut b = Rng::at_position(5, a.word_pos());
        assert_eq!(a.next_u64(), b.next_u64());
    }

    proptest! {
        #[test]
        fn loads_are_linear(m0 in 0.0f64..5.0, m1 in 0.0f64..5.0, n in 0.0f64..6.0, k in 0.0f64..6.0) {
            let mesh = generate_interval_mesh(-1.0, 1.0, 10).unwrap();
            let dm = DofMap::new(&mesh, ElementOrder::P2);
            let bc = crate::fem::BoundaryCondition::Dirichlet0;
            let a = ForcingSample::new(1, vec![m0, n, m1, k]).unwrap();
            let b = ForcingSample::new(1, vec![m1, n, m0, k]).unwrap();
            let sum = ForcingSample::new(1, vec![m0 + m1, n, m0 + m1, k]).unwrap();
            let fa = assemble_load(&mesh, &dm, bc, &|p| a.eval(p)).values;
            let fb = assemble_load(&mesh, &dm, bc, &|p| b.eval(p)).values;
            let fs = assemble_load(&mesh, &dm, bc, &|p| sum.eval(p)).values;
            for i in 0..fs.len() {
                prop_assert!((fs[i] - fa[i] - fb[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn draws_stay_in_range(seed in any::<u64>()) {
            let fam = ForcingFamily::paper_2d();
            let mut rng = Rng::new(seed);
            for _ in 0..20 {
                prop_assert!(fam.contains(&sample(&fam, &mut rng)));
            }
        }
    }
}
