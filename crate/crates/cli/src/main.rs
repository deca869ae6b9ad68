use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use galop_core::fem::l2_rel_error;
use galop_core::forcing::Split;
use galop_core::harness::{
    acceptance_checks, emit_report, parse_config, run_benchmark, run_convergence_study, run_singular_study,
    write_config, Check, Discretization, ExperimentConfig, StudyKind,
};
use galop_core::mesh::DofMap;
use galop_core::opnet::{load_checkpoint_for, predict_dataset, save_checkpoint, train};
use galop_core::oracle::solve_system;

#[derive(Parser)]
#[command(name = "galop", version, about = "Galerkin-residual operator learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error against a refined reference over several resolutions.
    Converge(StudyArgs),
    /// Train one network per seed and compare with the oracle.
    Bench(StudyArgs),
    /// Enriched and plain solves of the singularly perturbed problem.
    Singular(StudyArgs),
    /// Print mesh and DOF statistics for a problem.
    MeshInfo(CommonArgs),
    /// Train a single network and save a checkpoint.
    Train(CommonArgs),
    /// Evaluate a checkpoint on the test set.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Exit with status 1 if an acceptance assertion fails.
    #[arg(long)]
    check: bool,
}

/// Each flag overrides the config key of the same name.
#[derive(Args, Default)]
struct CommonArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Resolutions, comma separated.
    #[arg(long)]
    elements: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    m_train: Option<usize>,
    #[arg(long)]
    m_test: Option<usize>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    epsilons: Option<String>,
    #[arg(long)]
    enriched: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    mesh_file: Option<PathBuf>,
    /// Any other key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let (mut text, origin) = match &self.config {
            Some(p) => (
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                p.clone(),
            ),
            None => (String::new(), PathBuf::from("<flags>")),
        };
        let mut push = |k: &str, v: String| {
            text.push_str(&format!("\n{k} = {v}"));
        };
        let named: [(&str, Option<String>); 17] = [
            ("problem", self.problem.clone()),
            ("elements", self.elements.clone()),
            ("order", self.order.clone()),
            ("input", self.input.clone()),
            ("mode", self.mode.clone()),
            ("m_train", self.m_train.map(|v| v.to_string())),
            ("m_test", self.m_test.map(|v| v.to_string())),
            ("seeds", self.seeds.clone()),
            ("epsilons", self.epsilons.clone()),
            ("enriched", self.enriched.clone()),
            ("hidden", self.hidden.clone()),
            ("optimizer", self.optimizer.clone()),
            ("lr", self.lr.map(|v| format!("{v:?}"))),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("batch_size", self.batch_size.map(|v| v.to_string())),
            ("mesh_file", self.mesh_file.as_ref().map(|p| p.display().to_string())),
            ("output_dir", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                push(k, v);
            }
        }
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            push(k.trim(), v.trim().to_string());
        }
        Ok(parse_config(&text, origin)?)
    }
}

fn print_checks(checks: &[Check]) -> bool {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.passed)
}

fn study(kind: StudyKind, args: &StudyArgs) -> Result<bool> {
    let cfg = args.common.resolve()?;
    let report = match kind {
        StudyKind::Converge => run_convergence_study(&cfg)?,
        StudyKind::Bench => run_benchmark(&cfg)?,
        StudyKind::Singular => run_singular_study(&cfg)?,
    };
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("config.txt"), write_config(&cfg))?;
    let files = emit_report(&report, &cfg.output_dir)?;
    println!("wrote {}", files.report.display());
    if let Some(s) = report.slope {
        println!("slope {:.4} (residual {:.2e}, {} points)", s.slope, s.residual, s.points);
    }
    for (k, v) in &report.summary {
        println!("{k} {v:.4e}");
    }
    let checks = acceptance_checks(kind, &cfg, &report);
    let ok = print_checks(&checks);
    Ok(!args.check || ok)
}

fn mesh_info(args: &CommonArgs) -> Result<()> {
    let cfg = args.resolve()?;
    for &res in &cfg.elements {
        let mesh = cfg.problem.mesh(res, cfg.mesh_file.as_deref())?;
        let dofmap = DofMap::new(&mesh, cfg.order);
        println!(
            "{} resolution {res}: {} nodes, {} elements, {} boundary nodes, h {:.4e}, measure {:.6}, {} {} DOFs ({} interior)",
            cfg.problem,
            mesh.node_count(),
            mesh.element_count(),
            mesh.boundary_nodes().len(),
            mesh.mesh_size(),
            mesh.total_measure(),
            dofmap.dof_count(),
            cfg.order,
            dofmap.interior_dofs().len(),
        );
    }
    Ok(())
}

fn setup(cfg: &ExperimentConfig) -> Result<Discretization> {
    Ok(Discretization::new(cfg, cfg.elements[0], cfg.epsilon(), cfg.enriched[0])?)
}

fn train_one(args: &CommonArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let d = setup(&cfg)?;
    let ds = d.dataset(&cfg, Split::Train)?;
    let seed = cfg.seeds[0];
    let net = cfg.network_config(d.input_dim(&cfg)?, d.system.size(), seed);
    let state = train(net, &d.system, &ds, d.dofmap.dof_coords(), cfg.train_config(seed))?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let ckpt = cfg.output_dir.join("model.ckpt");
    save_checkpoint(&ckpt, &state.network, state.epoch, &state.rng)?;
    let history: String = std::iter::once("epoch,loss\n".to_string())
        .chain(state.loss_history.iter().enumerate().map(|(i, l)| format!("{i},{l:e}\n")))
        .collect();
    std::fs::write(cfg.output_dir.join("loss.csv"), history)?;
    println!(
        "trained {} epochs, best loss {:.4e}; wrote {}",
        state.epoch,
        state.best_loss,
        ckpt.display()
    );
    Ok(())
}

fn eval(args: &CommonArgs, checkpoint: &Path) -> Result<()> {
    let cfg = args.resolve()?;
    let d = setup(&cfg)?;
    let ds = d.dataset(&cfg, Split::Test)?;
    let expected = cfg.network_config(d.input_dim(&cfg)?, d.system.size(), cfg.seeds[0]);
    let ck = load_checkpoint_for(checkpoint, &expected)?;
    let pred = predict_dataset(&ck.network, &ds, d.dofmap.dof_coords())?;
    let mut out = String::from("sample,rel_l2\n");
    let mut total = 0.0;
    for (m, row) in pred.rows().into_iter().enumerate() {
        let system = ds.system(&d.system, m);
        let star = solve_system(system, &ds.loads[m])?.alpha_star;
        let e = l2_rel_error(&row.to_vec(), &star, &system.mass)?;
        total += e;
        out.push_str(&format!("{m},{e:e}\n"));
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("eval.csv"), out)?;
    println!("mean test rel L2 {:.4e} over {} samples", total / ds.len() as f64, ds.len());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Converge(a) => study(StudyKind::Converge, &a),
        Command::Bench(a) => study(StudyKind::Bench, &a),
        Command::Singular(a) => study(StudyKind::Singular, &a),
        Command::MeshInfo(a) => mesh_info(&a).map(|_| true),
        Command::Train(a) => train_one(&a).map(|_| true),
        Command::Eval { common, checkpoint } => eval(&common, &checkpoint).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
