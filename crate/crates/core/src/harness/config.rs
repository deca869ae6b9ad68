//! `key = value` experiment configuration.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forcing::ForcingKind;
use crate::harness::catalog::ProblemKind;
use crate::mesh::ElementOrder;
use crate::opnet::{Activation, FinalActivation, InputEncoding, NetworkConfig, OptimizerConfig, TrainConfig};

/// Whether a study trains networks or only runs the classical solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Network,
    Oracle,
}

impl fmt::Display for StudyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyMode::Network => "network",
            StudyMode::Oracle => "oracle",
        })
    }
}

impl FromStr for StudyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "network" => Ok(StudyMode::Network),
            "oracle" => Ok(StudyMode::Oracle),
            _ => Err(Error::invalid(format!("mode `{s}`: want network or oracle"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Lbfgs,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Lbfgs => "lbfgs",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "lbfgs" => Ok(OptimizerKind::Lbfgs),
            _ => Err(Error::invalid(format!("optimizer `{s}`: want adam or lbfgs"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    /// Resolution per run: element count in 1D, rings for the disk, uniform
    /// refinements of the mesh file for the other 2D domains.
    pub elements: Vec<usize>,
    pub order: ElementOrder,
    pub input: ForcingKind,
    pub m_range: (f64, f64),
    pub n_range: (f64, f64),
    pub m_train: usize,
    pub m_test: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    /// Network initialization and shuffle seeds, one training run each.
    pub seeds: Vec<u64>,
    pub mode: StudyMode,
    /// Refinement factor of the convergence-study reference.
    pub reference_factor: usize,
    /// Perturbation parameters for the singular study; the first one is
    /// used by the other studies of the singular problem.
    pub epsilons: Vec<f64>,
    pub enriched: Vec<bool>,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub final_activation: FinalActivation,
    pub input_encoding: InputEncoding,
    pub input_scale: f64,
    pub output_scale: f64,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub lr_final_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss_tolerance: f64,
    /// Overrides the bundled mesh of the 2D domains.
    pub mesh_file: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `problem`; element counts, order and forcing
    /// ranges follow the paper's parameter table.
    pub fn for_problem(problem: ProblemKind) -> Self {
        let family = problem.default_family();
        ExperimentConfig {
            problem,
            elements: vec![problem.default_resolution()],
            order: problem.default_order(),
            input: ForcingKind::Forcing,
            m_range: family.m_range,
            n_range: family.n_range,
            m_train: 50,
            m_test: 200,
            train_seed: 1,
            test_seed: 2,
            seeds: vec![0, 1, 2, 3, 4],
            mode: StudyMode::Network,
            reference_factor: 32,
            epsilons: vec![problem.default_epsilon()],
            enriched: vec![problem == ProblemKind::Singular],
            hidden: vec![128, 128, 128],
            activation: Activation::Tanh,
            final_activation: FinalActivation::Linear,
            input_encoding: InputEncoding::FAtDofs,
            input_scale: 0.01,
            output_scale: 1.0,
            optimizer: OptimizerKind::Lbfgs,
            lr: 1.0,
            lr_final_fraction: 1.0,
            epochs: 1500,
            batch_size: 0,
            loss_tolerance: 0.0,
            mesh_file: None,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() || self.elements.iter().any(|&k| k == 0 && self.problem.dim() == 1) {
            return Err(Error::invalid("elements must list at least one positive resolution"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds must not be empty"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::invalid("epsilons must be positive"));
        }
        if self.enriched.is_empty() {
            return Err(Error::invalid("enriched must list at least one flag"));
        }
        if self.m_train == 0 || self.m_test == 0 {
            return Err(Error::invalid("m_train and m_test must be positive"));
        }
        if self.enriched.contains(&true) && self.problem != ProblemKind::Singular {
            return Err(Error::invalid("enrichment applies to the singular problem only"));
        }
        self.network_config(1, 1, 0).validate()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilons[0]
    }

    pub fn network_config(&self, input_dim: usize, output_dim: usize, seed: u64) -> NetworkConfig {
        NetworkConfig {
            input_encoding: self.input_encoding,
            input_dim,
            hidden: self.hidden.clone(),
            activation: self.activation,
            output_dim,
            final_activation: self.final_activation,
            init_seed: seed,
            input_scale: self.input_scale,
            output_scale: self.output_scale,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let optimizer = match self.optimizer {
            OptimizerKind::Adam => OptimizerConfig::Adam {
                lr: self.lr,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                final_lr_fraction: self.lr_final_fraction,
            },
            OptimizerKind::Lbfgs => match OptimizerConfig::lbfgs() {
                OptimizerConfig::Lbfgs {
                    history,
                    max_inner,
                    tolerance,
                    ..
                } => OptimizerConfig::Lbfgs {
                    lr: self.lr,
                    history,
                    max_inner,
                    tolerance,
                },
                other => other,
            },
        };
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            optimizer,
            loss_tolerance: self.loss_tolerance,
            shuffle_seed: seed,
        }
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// Every key, in a fixed order.
pub fn write_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("problem", cfg.problem.to_string());
    kv("elements", join(&cfg.elements));
    kv("order", cfg.order.to_string().to_lowercase());
    kv("input", cfg.input.to_string());
    kv("m_range", join_f64(&[cfg.m_range.0, cfg.m_range.1]));
    kv("n_range", join_f64(&[cfg.n_range.0, cfg.n_range.1]));
    kv("m_train", cfg.m_train.to_string());
    kv("m_test", cfg.m_test.to_string());
    kv("train_seed", cfg.train_seed.to_string());
    kv("test_seed", cfg.test_seed.to_string());
    kv("seeds", join(&cfg.seeds));
    kv("mode", cfg.mode.to_string());
    kv("reference_factor", cfg.reference_factor.to_string());
    kv("epsilons", join_f64(&cfg.epsilons));
    kv("enriched", join(&cfg.enriched));
    kv("hidden", join(&cfg.hidden));
    kv("activation", cfg.activation.to_string());
    kv("final_activation", cfg.final_activation.to_string());
    kv("input_encoding", cfg.input_encoding.to_string());
    kv("input_scale", format!("{:?}", cfg.input_scale));
    kv("output_scale", format!("{:?}", cfg.output_scale));
    kv("optimizer", cfg.optimizer.to_string());
    kv("lr", format!("{:?}", cfg.lr));
    kv("lr_final_fraction", format!("{:?}", cfg.lr_final_fraction));
    kv("epochs", cfg.epochs.to_string());
    kv("batch_size", cfg.batch_size.to_string());
    kv("loss_tolerance", format!("{:?}", cfg.loss_tolerance));
    kv(
        "mesh_file",
        cfg.mesh_file.as_ref().map_or(String::new(), |p| p.display().to_string()),
    );
    kv("output_dir", cfg.output_dir.display().to_string());
    s
}

fn one<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(one)
        .collect()
}

fn pair(v: &str) -> std::result::Result<(f64, f64), String> {
    match list::<f64>(v)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected two numbers, got `{v}`")),
    }
}

fn typed<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e: T::Err| e.to_string())
}

/// Parse a config. The `problem` key (if present) selects the defaults the
/// remaining keys override, wherever it appears in the file.
pub fn parse_config(text: &str, origin: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let origin = origin.as_ref();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(origin, i + 1, format!("expected `key = value`, got `{line}`")))?;
        entries.push((i + 1, k.trim(), v.trim()));
    }
    let mut cfg = ExperimentConfig::for_problem(ProblemKind::Bc1);
    if let Some(&(line, _, v)) = entries.iter().find(|(_, k, _)| *k == "problem") {
        let p = typed::<ProblemKind>(v).map_err(|e| Error::parse(origin, line, e))?;
        cfg = ExperimentConfig::for_problem(p);
    }
    for (line, k, v) in entries {
        let r: std::result::Result<(), String> = (|| {
            match k {
                "problem" => {}
                "elements" => cfg.elements = list(v)?,
                "order" => cfg.order = v.parse()?,
                "input" => cfg.input = typed(v)?,
                "m_range" => cfg.m_range = pair(v)?,
                "n_range" => cfg.n_range = pair(v)?,
                "m_train" => cfg.m_train = one(v)?,
                "m_test" => cfg.m_test = one(v)?,
                "train_seed" => cfg.train_seed = one(v)?,
                "test_seed" => cfg.test_seed = one(v)?,
                "seeds" => cfg.seeds = list(v)?,
                "mode" => cfg.mode = typed(v)?,
                "reference_factor" => cfg.reference_factor = one(v)?,
                "epsilons" => cfg.epsilons = list(v)?,
                "enriched" => cfg.enriched = list(v)?,
                "hidden" => cfg.hidden = list(v)?,
                "activation" => cfg.activation = typed(v)?,
                "final_activation" => cfg.final_activation = typed(v)?,
                "input_encoding" => cfg.input_encoding = typed(v)?,
                "input_scale" => cfg.input_scale = one(v)?,
                "output_scale" => cfg.output_scale = one(v)?,
                "optimizer" => cfg.optimizer = typed(v)?,
                "lr" => cfg.lr = one(v)?,
                "lr_final_fraction" => cfg.lr_final_fraction = one(v)?,
                "epochs" => cfg.epochs = one(v)?,
                "batch_size" => cfg.batch_size = one(v)?,
                "loss_tolerance" => cfg.loss_tolerance = one(v)?,
                "mesh_file" => cfg.mesh_file = (!v.is_empty()).then(|| PathBuf::from(v)),
                "output_dir" => cfg.output_dir = PathBuf::from(v),
                _ => return Err(format!("unknown key `{k}`")),
            }
            Ok(())
        })();
        r.map_err(|e| Error::parse(origin, line, format!("{k}: {e}")))?;
    }
    cfg.validate().map_err(|e| Error::parse(origin, 0, e.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    parse_config(&std::fs::read_to_string(path)?, path)
}

pub fn save_config(cfg: &ExperimentConfig, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_config(cfg))?;
    Ok(())
}
